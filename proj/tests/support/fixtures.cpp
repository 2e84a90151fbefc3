#include "support/fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "refseg/backends.hpp"
#include "refseg/prompts.hpp"
#include "refseg/sha256.hpp"

namespace fixtures {

using nlohmann::json;
using namespace refseg;

ScratchDir::ScratchDir(const std::string& label) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("refseg_test_" + label + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

BinaryMask random_mask(std::mt19937& rng, int max_side) {
    std::uniform_int_distribution<int> side(1, max_side);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    BinaryMask m(side(rng), side(rng));
    double p = density(rng);
    std::bernoulli_distribution bit(p);
    for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
    return m;
}

BinaryMask rect_mask(int width, int height, int x0, int y0, int x1, int y1) {
    BinaryMask m(width, height);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.set(x, y, true);
    return m;
}

void write_manifest_line(std::ostream& out, const std::string& sample_id,
                         const std::string& image_path, const std::string& image_id,
                         const std::string& expression, const std::string& split,
                         const RleCounts& gt) {
    json record{{"v", 1},
                {"sample_id", sample_id},
                {"image_path", image_path},
                {"image_id", image_id},
                {"expression", expression},
                {"split", split},
                {"gt_mask", {{"width", gt.width}, {"height", gt.height}, {"counts", gt.counts}}}};
    out << record.dump() << "\n";
}

void write_proposal_file(const std::filesystem::path& dir, const std::string& image_id,
                         const std::string& source_tag,
                         const std::vector<RleCounts>& proposals) {
    std::filesystem::create_directories(dir);
    json list = json::array();
    std::size_t index = 0;
    for (const RleCounts& p : proposals) {
        list.push_back({{"proposal_id", "p" + std::to_string(index++)},
                        {"width", p.width},
                        {"height", p.height},
                        {"counts", p.counts}});
    }
    json file{{"v", 1}, {"image_id", image_id}, {"source_tag", source_tag}, {"proposals", list}};
    std::ofstream out(dir / (image_id + ".json"));
    out << file.dump(2) << "\n";
}

// --- planted corpus ---------------------------------------------------------------

namespace {

constexpr int kDim = 8;
constexpr const char* kTextTag = "planted-text";
constexpr const char* kImageTag = "planted-image";
constexpr const char* kMllmTag = "planted-mllm";

std::vector<double> basis(int axis, double scale = 1.0) {
    std::vector<double> v(kDim, 0.0);
    v[std::size_t(axis)] = scale;
    return v;
}

std::vector<double> combine(int axis_a, double wa, int axis_b, double wb) {
    std::vector<double> v(kDim, 0.0);
    v[std::size_t(axis_a)] = wa;
    v[std::size_t(axis_b)] = wb;
    return v;
}

} // namespace

PlantedCorpus build_planted_corpus(const std::filesystem::path& root, int sample_count) {
    PlantedCorpus corpus;
    corpus.root = root;
    corpus.manifest = root / "manifest.jsonl";
    corpus.proposals_dir = root / "proposals";
    corpus.fixture_file = root / "backend_fixture.json";
    corpus.sample_count = sample_count;
    std::filesystem::create_directories(root / "images");
    std::filesystem::create_directories(corpus.proposals_dir);

    // axes: 0 attribute text, 1 referent object, 2 "red box", 3 "blue box",
    // 4..7 fillers for mixing
    const std::vector<double> v_att = basis(0);
    const std::vector<double> v_obj = basis(1);
    const std::vector<double> v_red = basis(2);
    const std::vector<double> v_blue = basis(3);

    // proposal visuals: B matches the attribute text exactly; A and C sit on
    // the negative-phrase axes
    const std::vector<double> v_prop_a = combine(2, 0.9, 5, std::sqrt(0.19));
    const std::vector<double> v_prop_b = basis(0);
    const std::vector<double> v_prop_c = combine(3, 0.9, 6, std::sqrt(0.19));

    // vanilla text: first half aligned with proposal A (misleading), second
    // half aligned with B
    std::vector<double> v_van_bad(kDim, 0.0);
    for (int i = 0; i < kDim; ++i) v_van_bad[std::size_t(i)] = 0.8 * v_prop_a[std::size_t(i)];
    v_van_bad[7] = 0.6;
    const std::vector<double> v_van_good = combine(0, 0.9, 4, std::sqrt(0.19));

    RenderConfig render;
    render.crop_pad_ratio = 0.1;
    render.blur_sigma = 2.0;
    render.encoder_resolution = 64;

    const int W = 48, H = 48;
    BinaryMask mask_a = rect_mask(W, H, 2, 2, 13, 13);
    BinaryMask mask_b = rect_mask(W, H, 18, 18, 29, 29);
    BinaryMask mask_c = rect_mask(W, H, 34, 34, 45, 45);

    json text_map = json::object();
    json image_map = json::object();
    json mllm_map = json::object();
    text_map["red box"] = v_red;
    text_map["blue box"] = v_blue;

    std::ofstream manifest_out(corpus.manifest);
    for (int i = 0; i < sample_count; ++i) {
        const std::string id = "s" + std::to_string(i);
        corpus.sample_ids.push_back(id);
        const std::string expression = "target object " + std::to_string(i);
        const std::string object = "widget" + std::to_string(i);
        const std::string t_att = "A photo of " + object + " (green and square)";
        const std::string t_sur =
            "A photo of " + object + " surrounded by (a red box and a blue box)";

        // image: gray background (shade varies per sample), three colored squares
        Image img(W, H, {std::uint8_t(180 + i % 60), std::uint8_t(180 + i % 60),
                         std::uint8_t(180 + i % 60)});
        auto paint = [&img](const BinaryMask& m, std::array<std::uint8_t, 3> color) {
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    if (m.at(x, y)) img.set(x, y, color);
        };
        paint(mask_a, {200, 40, 40});
        paint(mask_b, {40, 200, 40});
        paint(mask_c, {40, 40, 200});
        const std::string image_rel = "images/" + id + ".ppm";
        save_ppm(img, root / image_rel);

        write_manifest_line(manifest_out, id, image_rel, id, expression, "val",
                            rle_encode(mask_b));
        write_proposal_file(corpus.proposals_dir, id, "sam",
                            {rle_encode(mask_a), rle_encode(mask_b), rle_encode(mask_c)});

        // planted text embeddings
        text_map[t_att] = v_att;
        text_map[object] = v_obj;
        text_map[expression] = i < sample_count / 2 ? v_van_bad : v_van_good;

        // planted mllm replies, keyed by prompt digest
        mllm_map[prompt_digest(build_prompt(PromptKind::attribute, expression))] = t_att;
        mllm_map[prompt_digest(build_prompt(PromptKind::surrounding, expression))] = t_sur;

        // planted image embeddings, keyed by rendered-instance request digest
        auto plant = [&](const BinaryMask& mask, const std::vector<double>& value) {
            for (InstanceImage rendered :
                 {render_mb(img, mask, render), render_mc(img, mask, render)}) {
                image_map[request_digest(canonical_image_request(kImageTag, rendered))] = value;
            }
        };
        plant(mask_a, v_prop_a);
        plant(mask_b, v_prop_b);
        plant(mask_c, v_prop_c);
    }
    manifest_out.close();

    {
        std::ofstream out(corpus.fixture_file);
        out << json{{"v", 1},
                    {"dim", kDim},
                    {"text", text_map},
                    {"image", image_map},
                    {"mllm", mllm_map}}
                   .dump()
            << "\n";
    }

    PipelineConfig cfg;
    cfg.weights = {0.5, 1.0};
    cfg.render = render;
    cfg.tau = 0.85;
    cfg.normalize_first = true;
    cfg.dataset_tag = "refcoco";
    cfg.cache_dir = (root / "cache").string();
    cfg.backend_ids[BackendKind::mllm] = {BackendKind::mllm, BackendImpl::file,
                                          corpus.fixture_file.string(), kMllmTag, kDim, 1};
    cfg.backend_ids[BackendKind::text_encoder] = {BackendKind::text_encoder, BackendImpl::file,
                                                  corpus.fixture_file.string(), kTextTag, kDim, 1};
    cfg.backend_ids[BackendKind::image_encoder] = {BackendKind::image_encoder, BackendImpl::file,
                                                   corpus.fixture_file.string(), kImageTag, kDim,
                                                   1};
    cfg.backend_ids[BackendKind::np_extractor] = {BackendKind::np_extractor, BackendImpl::stub,
                                                  "", "baseline-np", kDim, 1};
    corpus.config = cfg;
    return corpus;
}

} // namespace fixtures
