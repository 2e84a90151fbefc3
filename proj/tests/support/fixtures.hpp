// Shared test fixtures: scratch directories, random masks, a tiny dataset
// writer, and the planted corpus whose backend fixture file is engineered so
// the middle proposal provably wins under the full score configuration.

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "refseg/dataset.hpp"
#include "refseg/image.hpp"
#include "refseg/masks.hpp"
#include "refseg/pipeline.hpp"

namespace fixtures {

// Unique scratch directory under the system temp dir; removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& label);
    ~ScratchDir();

    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

refseg::BinaryMask random_mask(std::mt19937& rng, int max_side = 64);
refseg::BinaryMask rect_mask(int width, int height, int x0, int y0, int x1, int y1);

// Writes one manifest record; gt dims are taken from the mask.
void write_manifest_line(std::ostream& out, const std::string& sample_id,
                         const std::string& image_path, const std::string& image_id,
                         const std::string& expression, const std::string& split,
                         const refseg::RleCounts& gt);

void write_proposal_file(const std::filesystem::path& dir, const std::string& image_id,
                         const std::string& source_tag,
                         const std::vector<refseg::RleCounts>& proposals);

// --- planted corpus -------------------------------------------------------------

struct PlantedCorpus {
    std::filesystem::path root;
    std::filesystem::path manifest;
    std::filesystem::path proposals_dir;
    std::filesystem::path fixture_file;
    refseg::PipelineConfig config; // file-backed backends wired to fixture_file
    int sample_count = 0;
    int winning_proposal = 1; // proposal B, equal to ground truth
    std::vector<std::string> sample_ids;
};

// Ten-by-default synthetic samples, three square proposals each (A, B, C
// with B the ground truth). Text and image embeddings are planted so that:
//   - under the full configuration (alpha=0.5, beta=1) proposal B always wins;
//   - for the first half of the samples the vanilla score alone prefers A,
//     and only the attribute and surrounding scores together flip it to B.
PlantedCorpus build_planted_corpus(const std::filesystem::path& root, int sample_count = 10);

} // namespace fixtures
