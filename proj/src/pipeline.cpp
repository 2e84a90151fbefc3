#include "refseg/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "refseg/errors.hpp"
#include "refseg/sha256.hpp"

namespace refseg {

using nlohmann::json;

// --- config ----------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (worker_limit < 1) raise(Errc::schema_error, "worker_limit must be >= 1");
    if (!(tau >= -1.0 && tau <= 1.0)) raise(Errc::schema_error, "tau must lie in [-1, 1]");
    if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0))
        raise(Errc::schema_error, "fusion weights must be finite and non-negative");
    if (render.encoder_resolution < 1)
        raise(Errc::schema_error, "encoder_resolution must be >= 1");
    for (const auto& [kind, id] : backend_ids) id.validate();
}

double default_alpha(const std::string& dataset_tag) {
    if (dataset_tag == "refcocog") return 0.3;
    return 0.5; // refcoco, refcoco_plus, custom
}

namespace {

json backend_id_to_json(const BackendId& id) {
    json j{{"impl", backend_impl_name(id.impl)}, {"model_tag", id.model_tag}};
    if (!id.endpoint_or_path.empty()) j["endpoint_or_path"] = id.endpoint_or_path;
    if (id.kind == BackendKind::text_encoder || id.kind == BackendKind::image_encoder)
        j["dim"] = id.dim;
    if (id.impl == BackendImpl::stub) j["seed"] = id.seed;
    return j;
}

BackendId backend_id_from_json(BackendKind kind, const json& j) {
    BackendId id;
    id.kind = kind;
    id.impl = backend_impl_from_name(j.value("impl", "stub"));
    id.endpoint_or_path = j.value("endpoint_or_path", "");
    id.model_tag = j.value("model_tag", std::string("stub-") + backend_kind_name(kind));
    id.dim = j.value("dim", 512);
    id.seed = j.value("seed", std::uint64_t(1));
    return id;
}

} // namespace

json config_to_json(const PipelineConfig& cfg) {
    json backends = json::object();
    for (const auto& [kind, id] : cfg.backend_ids)
        backends[backend_kind_name(kind)] = backend_id_to_json(id);
    return json{{"v", kSchemaVersion},
                {"weights", {{"alpha", cfg.weights.alpha}, {"beta", cfg.weights.beta}}},
                {"render",
                 {{"fill_color", cfg.render.fill_color},
                  {"crop_pad_ratio", cfg.render.crop_pad_ratio},
                  {"blur_sigma", cfg.render.blur_sigma},
                  {"encoder_resolution", cfg.render.encoder_resolution}}},
                {"tau", cfg.tau},
                {"normalize_first", cfg.normalize_first},
                {"worker_limit", cfg.worker_limit},
                {"dataset_tag", cfg.dataset_tag},
                {"cache_dir", cfg.cache_dir},
                {"lenient", cfg.lenient},
                {"backends", backends}};
}

PipelineConfig config_from_json(const json& j) {
    if (j.value("v", kSchemaVersion) != kSchemaVersion)
        raise(Errc::schema_error, "unsupported config schema version");
    PipelineConfig cfg;
    cfg.dataset_tag = j.value("dataset_tag", "refcoco");

    json weights = j.value("weights", json::object());
    cfg.weights.alpha = weights.value("alpha", default_alpha(cfg.dataset_tag));
    cfg.weights.beta = weights.value("beta", 1.0);

    json render = j.value("render", json::object());
    if (render.contains("fill_color")) {
        auto fc = render.at("fill_color").get<std::vector<int>>();
        if (fc.size() != 3) raise(Errc::schema_error, "fill_color needs 3 channels");
        for (int i = 0; i < 3; ++i) cfg.render.fill_color[std::size_t(i)] = std::uint8_t(fc[std::size_t(i)]);
    }
    cfg.render.crop_pad_ratio = render.value("crop_pad_ratio", 0.1);
    cfg.render.blur_sigma = render.value("blur_sigma", 10.0);
    cfg.render.encoder_resolution = render.value("encoder_resolution", 224);

    cfg.tau = j.value("tau", 0.85);
    cfg.normalize_first = j.value("normalize_first", true);
    cfg.worker_limit = j.value("worker_limit", 1);
    cfg.cache_dir = j.value("cache_dir", "");
    cfg.lenient = j.value("lenient", false);

    json backends = j.value("backends", json::object());
    for (const auto& [name, entry] : backends.items()) {
        BackendKind kind = backend_kind_from_name(name);
        cfg.backend_ids[kind] = backend_id_from_json(kind, entry);
    }
    cfg.validate();
    return cfg;
}

std::string config_digest(const PipelineConfig& cfg) {
    json digest_view{
        {"weights", {{"alpha", cfg.weights.alpha}, {"beta", cfg.weights.beta}}},
        {"render",
         {{"fill_color", cfg.render.fill_color},
          {"crop_pad_ratio", cfg.render.crop_pad_ratio},
          {"blur_sigma", cfg.render.blur_sigma},
          {"encoder_resolution", cfg.render.encoder_resolution}}},
        {"tau", cfg.tau},
        {"normalize_first", cfg.normalize_first},
    };
    json backends = json::object();
    for (const auto& [kind, id] : cfg.backend_ids) {
        backends[backend_kind_name(kind)] = {{"impl", backend_impl_name(id.impl)},
                                             {"locator", id.endpoint_or_path},
                                             {"model_tag", id.model_tag},
                                             {"dim", id.dim},
                                             {"seed", id.seed}};
    }
    digest_view["backends"] = backends;
    return sha256_hex(digest_view.dump());
}

// --- per-sample run ----------------------------------------------------------------

namespace {

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}

    double lap_ms() {
        auto now = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void warn_if_long(const std::string& sample_id, const char* which, const std::string& text) {
    if (text.size() > 300)
        std::fprintf(stderr, "note: sample %s: %s description is %zu chars (>300)\n",
                     sample_id.c_str(), which, text.size());
}

// Re-raises stage failures with the stage name attached.
template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("[") + stage + "] " + e.what());
    }
}

} // namespace

SampleResult run_sample(const RefSample& sample, const ProposalSet& proposals,
                        const PipelineConfig& cfg, BackendSet& backends) {
    if (proposals.proposals.empty())
        raise(Errc::empty_proposal_set, "sample " + sample.sample_id);

    SampleResult result;
    result.sample_id = sample.sample_id;
    StageClock clock;

    Image image = load_image(sample.image_path);

    // descriptions
    std::string p_att = build_prompt(PromptKind::attribute, sample.expression);
    std::string p_sur = build_prompt(PromptKind::surrounding, sample.expression);
    std::string t_att = with_stage("describe", [&] { return backends.mllm->generate(image, p_att); });
    std::string t_sur = with_stage("describe", [&] { return backends.mllm->generate(image, p_sur); });
    warn_if_long(sample.sample_id, "attribute", t_att);
    warn_if_long(sample.sample_id, "surrounding", t_sur);
    result.bundle = make_bundle(sample.expression, t_att, t_sur);
    result.timing.describe_ms = clock.lap_ms();

    // text features
    Embedding f_att = with_stage("encode_text",
                                 [&] { return backends.text_encoder->encode(result.bundle.t_att); });
    Embedding f_van = with_stage("encode_text",
                                 [&] { return backends.text_encoder->encode(result.bundle.t_van); });
    result.timing.encode_text_ms = clock.lap_ms();

    // negatives
    std::vector<std::string> candidates = backends.np_extractor->extract(result.bundle.t_sur);
    NegativeSet negatives = with_stage("filter_negatives", [&] {
        return filter_negatives(candidates, result.bundle.object_phrase, sample.expression,
                                cfg.tau, *backends.text_encoder);
    });
    result.negative_phrases = negatives.phrases;
    result.timing.filter_ms = clock.lap_ms();

    // per-proposal visual features and scores
    for (std::size_t i = 0; i < proposals.proposals.size(); ++i) {
        const RleCounts& rle = proposals.proposals[i];
        if (rle.width != image.width || rle.height != image.height)
            raise(Errc::dimension_mismatch,
                  "sample " + sample.sample_id + ": proposal " + std::to_string(i) + " is " +
                      std::to_string(rle.width) + "x" + std::to_string(rle.height) +
                      " but image is " + std::to_string(image.width) + "x" +
                      std::to_string(image.height));
        BinaryMask mask = rle_decode(rle);

        StageClock stage;
        InstanceImage mb = with_stage("render", [&] { return render_mb(image, mask, cfg.render); });
        InstanceImage mc = with_stage("render", [&] { return render_mc(image, mask, cfg.render); });
        result.timing.render_ms += stage.lap_ms();

        Embedding f_mb =
            with_stage("encode_image", [&] { return backends.image_encoder->encode(mb); });
        Embedding f_mc =
            with_stage("encode_image", [&] { return backends.image_encoder->encode(mc); });
        result.timing.encode_image_ms += stage.lap_ms();

        Embedding f_instance = fuse_visual(f_mb, f_mc, cfg.normalize_first);
        result.breakdowns.push_back(
            score_proposal(int(i), f_instance, f_att, f_van, negatives, cfg.weights));
        result.timing.score_ms += stage.lap_ms();
    }

    result.selected_index = select_mask(result.breakdowns);
    result.selected_proposal = proposals.proposals[std::size_t(result.selected_index)];
    return result;
}

// --- result persistence ---------------------------------------------------------------

json sample_result_to_json(const SampleResult& result, const FusionWeights& w,
                           const std::string& digest,
                           const std::vector<Overlap>& proposal_overlaps) {
    json breakdowns = json::array();
    for (const ScoreBreakdown& b : result.breakdowns)
        breakdowns.push_back({{"proposal_index", b.proposal_index},
                              {"s_van", b.s_van},
                              {"s_att", b.s_att},
                              {"s_sur", b.s_sur},
                              {"s_total", b.s_total}});
    json overlaps = json::array();
    for (const Overlap& o : proposal_overlaps)
        overlaps.push_back({{"intersection", o.intersection}, {"union", o.union_}});
    return json{
        {"v", kSchemaVersion},
        {"config_digest", digest},
        {"sample_id", result.sample_id},
        {"weights", {{"alpha", w.alpha}, {"beta", w.beta}}},
        {"selected", result.selected_index},
        {"selected_proposal",
         {{"width", result.selected_proposal.width},
          {"height", result.selected_proposal.height},
          {"counts", result.selected_proposal.counts}}},
        {"breakdowns", breakdowns},
        {"proposal_overlaps", overlaps},
        {"descriptions",
         {{"t_van", result.bundle.t_van},
          {"t_att", result.bundle.t_att},
          {"t_sur", result.bundle.t_sur},
          {"object_phrase", result.bundle.object_phrase},
          {"attribute_phrase", result.bundle.attribute_phrase},
          {"entity_phrases", result.bundle.entity_phrases},
          {"att_fallback", result.bundle.att_fallback_used},
          {"sur_fallback", result.bundle.sur_fallback_used}}},
        {"negatives", result.negative_phrases},
        {"timing_ms",
         {{"describe", result.timing.describe_ms},
          {"encode_text", result.timing.encode_text_ms},
          {"filter", result.timing.filter_ms},
          {"render", result.timing.render_ms},
          {"encode_image", result.timing.encode_image_ms},
          {"score", result.timing.score_ms}}}};
}

namespace {

void write_json_atomic(const std::filesystem::path& target, const json& j) {
    std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) raise(Errc::io_error, "cannot write " + tmp.string());
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, target);
}

struct SampleSlot {
    SampleScoreTable table;
    int selected = -1;
    bool resumed = false;
    bool failed = false;
    Errc error_code = Errc::io_error;
    std::string error;
};

SampleSlot slot_from_stored(const json& stored, const std::string& expected_digest,
                            const std::string& sample_id) {
    if (stored.value("config_digest", "") != expected_digest)
        raise(Errc::config_mismatch,
              "result for sample " + sample_id +
                  " was produced under a different config; refusing to mix runs");
    SampleSlot slot;
    slot.resumed = true;
    slot.table.sample_id = sample_id;
    slot.selected = stored.at("selected").get<int>();
    const json& breakdowns = stored.at("breakdowns");
    const json& overlaps = stored.at("proposal_overlaps");
    if (breakdowns.size() != overlaps.size() || slot.selected < 0 ||
        std::size_t(slot.selected) >= breakdowns.size())
        raise(Errc::schema_error, "stored result for " + sample_id + " is inconsistent");
    for (std::size_t i = 0; i < breakdowns.size(); ++i) {
        ProposalRecord rec;
        rec.s_van = breakdowns[i].at("s_van").get<double>();
        rec.s_att = breakdowns[i].at("s_att").get<double>();
        rec.s_sur = breakdowns[i].at("s_sur").get<double>();
        rec.intersection = overlaps[i].at("intersection").get<std::uint64_t>();
        rec.union_ = overlaps[i].at("union").get<std::uint64_t>();
        slot.table.proposals.push_back(rec);
    }
    return slot;
}

} // namespace

RunOutput run_split(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& proposals_dir, const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir, BackendSet& backends) {
    cfg.validate();
    const std::string digest = config_digest(cfg);

    LoadReport report;
    std::vector<RefSample> samples = load_dataset(manifest_path, cfg.lenient, &report);
    for (const std::string& issue : report.issues)
        std::fprintf(stderr, "warning: skipped manifest record: %s\n", issue.c_str());

    {
        // results and resume are keyed on sample_id; duplicates would mix state
        std::set<std::string> ids;
        for (const RefSample& s : samples)
            if (!ids.insert(s.sample_id).second)
                raise(Errc::schema_error, "duplicate sample_id in manifest: " + s.sample_id);
    }

    std::filesystem::create_directories(out_dir / "samples");
    write_json_atomic(out_dir / "run_config.json",
                      json{{"v", kSchemaVersion},
                           {"config", config_to_json(cfg)},
                           {"config_digest", digest}});

    std::vector<SampleSlot> slots(samples.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            const RefSample& sample = samples[i];
            SampleSlot& slot = slots[i];
            try {
                std::filesystem::path file = out_dir / "samples" / (sample.sample_id + ".json");
                if (std::filesystem::exists(file)) {
                    std::ifstream in(file);
                    json stored = json::parse(in);
                    slot = slot_from_stored(stored, digest, sample.sample_id);
                    continue;
                }

                ProposalSet proposals = load_proposals(proposals_dir, sample.image_id);
                SampleResult result = run_sample(sample, proposals, cfg, backends);

                BinaryMask gt = rle_decode(sample.gt_mask);
                std::vector<Overlap> overlaps;
                overlaps.reserve(proposals.proposals.size());
                slot.table.sample_id = sample.sample_id;
                for (std::size_t p = 0; p < proposals.proposals.size(); ++p) {
                    Overlap o = overlap(rle_decode(proposals.proposals[p]), gt);
                    overlaps.push_back(o);
                    const ScoreBreakdown& b = result.breakdowns[p];
                    slot.table.proposals.push_back(
                        {b.s_van, b.s_att, b.s_sur, o.intersection, o.union_});
                }
                slot.selected = result.selected_index;
                write_json_atomic(file,
                                  sample_result_to_json(result, cfg.weights, digest, overlaps));
            } catch (const Error& e) {
                slot.failed = true;
                slot.error_code = e.code();
                slot.error = "sample " + sample.sample_id + ": " + e.what();
            } catch (const std::exception& e) {
                slot.failed = true;
                slot.error = "sample " + sample.sample_id + ": " + e.what();
            }
        }
    };

    int thread_count = std::min<int>(cfg.worker_limit, int(std::max<std::size_t>(samples.size(), 1)));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(thread_count));
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunOutput out;
    MetricAccumulator acc;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        SampleSlot& slot = slots[i];
        if (slot.failed) {
            if (!cfg.lenient) throw Error(slot.error_code, slot.error);
            std::fprintf(stderr, "warning: %s\n", slot.error.c_str());
            ++out.skipped;
            continue;
        }
        if (slot.resumed) ++out.resumed;
        const ProposalRecord& sel = slot.table.proposals.at(std::size_t(slot.selected));
        accumulate_counts(acc, sel.intersection, sel.union_);
        out.tables.push_back(std::move(slot.table));
        ++out.sample_count;
    }
    out.metrics = finalize(acc); // EmptyAccumulator on an empty split

    write_json_atomic(out_dir / "metrics.json", json{{"v", kSchemaVersion},
                                                     {"oIoU", out.metrics.oiou},
                                                     {"mIoU", out.metrics.miou},
                                                     {"samples", out.sample_count},
                                                     {"resumed", out.resumed},
                                                     {"skipped", out.skipped}});
    return out;
}

} // namespace refseg
