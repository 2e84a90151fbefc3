// Ingest for the normalized referring-segmentation export: a JSONL manifest
// of samples and one proposal file per image. Schemas are versioned with a
// top-level "v": 1.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refseg/masks.hpp"

namespace refseg {

inline constexpr int kSchemaVersion = 1;

struct RefSample {
    std::string sample_id;
    std::filesystem::path image_path; // resolved against the manifest directory
    std::string image_id;             // defaults to the image path stem
    std::string expression;           // T_van
    RleCounts gt_mask;
    std::string split; // val | testA | testB | val_u | test_u | test_g
};

struct ProposalSet {
    std::string image_id;
    std::string source_tag; // sam | dino_sam
    std::vector<std::string> proposal_ids;
    std::vector<RleCounts> proposals; // file order; ties in selection break by this order
};

struct LoadReport {
    std::size_t loaded = 0;
    std::size_t skipped = 0;
    std::vector<std::string> issues;
};

bool valid_split(const std::string& split);

// Reads manifest.jsonl in order. Each record is validated (schema version,
// nonempty expression, RLE invariants, gt dimensions matching the image).
// Bad records are fatal unless `lenient`, in which case they are skipped and
// reported.
std::vector<RefSample> load_dataset(const std::filesystem::path& manifest_path, bool lenient,
                                    LoadReport* report = nullptr);

// Reads proposals/<image_id>.json. NotFound if absent, EmptyProposalSet if
// the proposal list is empty.
ProposalSet load_proposals(const std::filesystem::path& dir_path, const std::string& image_id);

} // namespace refseg
