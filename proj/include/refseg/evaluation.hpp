// oIoU / mIoU accumulation plus the ablation matrix and the alpha/beta
// sensitivity sweep. Pixel totals accumulate as exact integers; floating
// point enters only in the final divisions, so results are independent of
// summation order and worker count. Ablation and sweep re-fuse cached raw
// scores: the three per-proposal scores are weight-independent, so changing
// (alpha, beta) never requires another encoder call.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refseg/masks.hpp"
#include "refseg/scoring.hpp"

namespace refseg {

struct MetricAccumulator {
    std::uint64_t total_intersection = 0;
    std::uint64_t total_union = 0;
    std::vector<double> per_sample_iou;

    std::size_t n() const { return per_sample_iou.size(); }
};

struct Metrics {
    double oiou = 0.0;
    double miou = 0.0;

    bool operator==(const Metrics&) const = default;
};

void accumulate(MetricAccumulator& acc, const BinaryMask& pred, const BinaryMask& gt);
void accumulate_counts(MetricAccumulator& acc, std::uint64_t intersection, std::uint64_t union_);

// oIoU = total_intersection / total_union (1.0 when the union is empty);
// mIoU = compensated-sum mean of the per-sample IoUs. EmptyAccumulator if no
// samples were added.
Metrics finalize(const MetricAccumulator& acc);

double compensated_mean(const std::vector<double>& values);

// --- cached raw scores -------------------------------------------------------

// Everything re-fusion needs per proposal: the three weight-independent
// scores and the exact pixel overlap against ground truth.
struct ProposalRecord {
    double s_van = 0.0;
    double s_att = 0.0;
    double s_sur = 0.0;
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;
};

struct SampleScoreTable {
    std::string sample_id;
    std::vector<ProposalRecord> proposals; // proposal-file order
};

// Selection by re-fused totals; same tie-break as select_mask.
int select_by_weights(const SampleScoreTable& table, const FusionWeights& w);

Metrics metrics_for_weights(const std::vector<SampleScoreTable>& tables,
                            const FusionWeights& w);

// --- ablation -----------------------------------------------------------------

struct AblationConfig {
    bool use_att = false;
    bool use_sur = false; // S_van is always on
};

struct AblationRow {
    AblationConfig config;
    Metrics metrics;
};

// The four score configurations, sharing one set of cached raw scores. The
// (use_att, use_sur) row equals a plain pipeline run with the same weights.
std::vector<AblationRow> run_ablation(const std::vector<SampleScoreTable>& tables,
                                      const FusionWeights& weights);

std::string ablation_csv(const std::vector<AblationRow>& rows);

// --- sweep --------------------------------------------------------------------

struct SweepGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<Metrics> cells; // row-major: alphas x betas

    const Metrics& cell(std::size_t alpha_idx, std::size_t beta_idx) const {
        return cells[alpha_idx * betas.size() + beta_idx];
    }
};

SweepGrid run_sweep(const std::vector<SampleScoreTable>& tables,
                    const std::vector<double>& alphas, const std::vector<double>& betas);

std::string sweep_csv(const SweepGrid& grid);

struct SweepBest {
    double alpha = 0.0;
    double beta = 0.0;
    Metrics metrics;
};

SweepBest best_by_oiou(const SweepGrid& grid);
SweepBest best_by_miou(const SweepGrid& grid);

} // namespace refseg
