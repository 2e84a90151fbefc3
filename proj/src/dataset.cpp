#include "refseg/dataset.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "refseg/errors.hpp"
#include "refseg/image.hpp"

namespace refseg {

using nlohmann::json;

namespace {

const std::set<std::string> kSplits = {"val", "testA", "testB", "val_u", "test_u", "test_g"};

RleCounts rle_from_json(const json& j, const std::string& context) {
    if (!j.is_object() || !j.contains("width") || !j.contains("height") || !j.contains("counts"))
        raise(Errc::schema_error, context + ": mask needs width/height/counts");
    RleCounts r;
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    for (const auto& c : j.at("counts")) {
        auto v = c.get<std::int64_t>();
        if (v < 0) raise(Errc::schema_error, context + ": negative RLE count");
        r.counts.push_back(std::uint32_t(v));
    }
    validate(r);
    return r;
}

void require_version(const json& j, const std::string& context) {
    if (!j.contains("v") || !j.at("v").is_number_integer() || j.at("v").get<int>() != kSchemaVersion)
        raise(Errc::schema_error, context + ": unsupported or missing schema version");
}

RefSample sample_from_json(const json& j, const std::filesystem::path& base_dir) {
    require_version(j, "manifest record");
    RefSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    const std::string context = "sample " + s.sample_id;

    std::filesystem::path rel = j.at("image_path").get<std::string>();
    s.image_path = rel.is_absolute() ? rel : base_dir / rel;
    s.image_id = j.value("image_id", s.image_path.stem().string());
    s.expression = j.at("expression").get<std::string>();
    if (s.expression.empty()) raise(Errc::schema_error, context + ": empty expression");
    s.split = j.at("split").get<std::string>();
    if (!valid_split(s.split)) raise(Errc::schema_error, context + ": unknown split " + s.split);
    s.gt_mask = rle_from_json(j.at("gt_mask"), context);

    auto [img_w, img_h] = probe_image_size(s.image_path);
    if (img_w != s.gt_mask.width || img_h != s.gt_mask.height)
        raise(Errc::dimension_mismatch,
              context + ": gt_mask is " + std::to_string(s.gt_mask.width) + "x" +
                  std::to_string(s.gt_mask.height) + " but image is " + std::to_string(img_w) +
                  "x" + std::to_string(img_h));
    return s;
}

} // namespace

bool valid_split(const std::string& split) {
    return kSplits.count(split) != 0;
}

std::vector<RefSample> load_dataset(const std::filesystem::path& manifest_path, bool lenient,
                                    LoadReport* report) {
    std::ifstream in(manifest_path);
    if (!in) raise(Errc::not_found, "manifest not found: " + manifest_path.string());

    const std::filesystem::path base_dir = manifest_path.parent_path();
    std::vector<RefSample> samples;
    LoadReport local;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            samples.push_back(sample_from_json(j, base_dir));
            ++local.loaded;
        } catch (const json::exception& e) {
            Error err(Errc::schema_error,
                      manifest_path.filename().string() + ":" + std::to_string(line_no) + ": " +
                          e.what());
            if (!lenient) throw err;
            ++local.skipped;
            local.issues.push_back(err.what());
        } catch (const Error& e) {
            if (!lenient) throw;
            ++local.skipped;
            local.issues.push_back(e.what());
        }
    }
    if (report) *report = std::move(local);
    return samples;
}

ProposalSet load_proposals(const std::filesystem::path& dir_path, const std::string& image_id) {
    std::filesystem::path file = dir_path / (image_id + ".json");
    std::ifstream in(file);
    if (!in) raise(Errc::not_found, "proposal file not found: " + file.string());

    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        raise(Errc::schema_error, file.string() + ": " + e.what());
    }
    require_version(j, file.filename().string());

    ProposalSet set;
    set.image_id = j.value("image_id", image_id);
    set.source_tag = j.value("source_tag", "sam");
    if (set.source_tag != "sam" && set.source_tag != "dino_sam")
        raise(Errc::schema_error, file.string() + ": unknown source_tag " + set.source_tag);

    if (!j.contains("proposals") || !j.at("proposals").is_array())
        raise(Errc::schema_error, file.string() + ": missing proposals array");
    std::size_t index = 0;
    for (const auto& p : j.at("proposals")) {
        std::string context = file.filename().string() + " proposal " + std::to_string(index);
        set.proposals.push_back(rle_from_json(p, context));
        set.proposal_ids.push_back(p.value("proposal_id", "p" + std::to_string(index)));
        ++index;
    }
    if (set.proposals.empty())
        raise(Errc::empty_proposal_set, "no proposals for image " + image_id);
    return set;
}

} // namespace refseg
