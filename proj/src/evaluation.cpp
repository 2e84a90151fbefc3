#include "refseg/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "refseg/errors.hpp"

namespace refseg {

void accumulate(MetricAccumulator& acc, const BinaryMask& pred, const BinaryMask& gt) {
    Overlap o = overlap(pred, gt); // DimensionMismatch on shape difference
    accumulate_counts(acc, o.intersection, o.union_);
}

void accumulate_counts(MetricAccumulator& acc, std::uint64_t intersection, std::uint64_t union_) {
    acc.total_intersection += intersection;
    acc.total_union += union_;
    acc.per_sample_iou.push_back(union_ == 0 ? 1.0 : double(intersection) / double(union_));
}

double compensated_mean(const std::vector<double>& values) {
    // Kahan summation: the mean is permutation-invariant to ~1e-16.
    double sum = 0.0, carry = 0.0;
    for (double v : values) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / double(values.size());
}

Metrics finalize(const MetricAccumulator& acc) {
    if (acc.n() == 0) raise(Errc::empty_accumulator, "no samples accumulated");
    Metrics m;
    m.oiou = acc.total_union == 0 ? 1.0
                                  : double(acc.total_intersection) / double(acc.total_union);
    m.miou = compensated_mean(acc.per_sample_iou);
    return m;
}

// --- re-fusion -----------------------------------------------------------------

int select_by_weights(const SampleScoreTable& table, const FusionWeights& w) {
    if (table.proposals.empty())
        raise(Errc::empty_input, "no proposals in score table for " + table.sample_id);
    std::size_t best = 0;
    double best_total = 0.0;
    for (std::size_t i = 0; i < table.proposals.size(); ++i) {
        const ProposalRecord& p = table.proposals[i];
        double total = fuse_total(p.s_van, p.s_att, p.s_sur, w);
        if (i == 0 || total > best_total) {
            best = i;
            best_total = total;
        }
    }
    return int(best);
}

Metrics metrics_for_weights(const std::vector<SampleScoreTable>& tables,
                            const FusionWeights& w) {
    MetricAccumulator acc;
    for (const SampleScoreTable& table : tables) {
        int sel = select_by_weights(table, w);
        const ProposalRecord& p = table.proposals[std::size_t(sel)];
        accumulate_counts(acc, p.intersection, p.union_);
    }
    return finalize(acc);
}

// --- ablation -------------------------------------------------------------------

std::vector<AblationRow> run_ablation(const std::vector<SampleScoreTable>& tables,
                                      const FusionWeights& weights) {
    std::vector<AblationRow> rows;
    for (AblationConfig cfg : {AblationConfig{false, false}, AblationConfig{false, true},
                               AblationConfig{true, false}, AblationConfig{true, true}}) {
        FusionWeights w{cfg.use_att ? weights.alpha : 0.0, cfg.use_sur ? weights.beta : 0.0};
        rows.push_back({cfg, metrics_for_weights(tables, w)});
    }
    return rows;
}

namespace {

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "use_att,use_sur,oIoU,mIoU\n";
    for (const AblationRow& row : rows) {
        out += row.config.use_att ? "1," : "0,";
        out += row.config.use_sur ? "1," : "0,";
        out += format_metric(row.metrics.oiou) + "," + format_metric(row.metrics.miou) + "\n";
    }
    return out;
}

// --- sweep ----------------------------------------------------------------------

SweepGrid run_sweep(const std::vector<SampleScoreTable>& tables,
                    const std::vector<double>& alphas, const std::vector<double>& betas) {
    if (alphas.empty() || betas.empty())
        raise(Errc::empty_input, "sweep grids must be nonempty");
    SweepGrid grid;
    grid.alphas = alphas;
    grid.betas = betas;
    grid.cells.reserve(alphas.size() * betas.size());
    for (double alpha : alphas)
        for (double beta : betas)
            grid.cells.push_back(metrics_for_weights(tables, FusionWeights{alpha, beta}));
    return grid;
}

std::string sweep_csv(const SweepGrid& grid) {
    std::string out = "alpha,beta,oIoU,mIoU\n";
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t j = 0; j < grid.betas.size(); ++j) {
            const Metrics& m = grid.cell(i, j);
            out += format_metric(grid.alphas[i]) + "," + format_metric(grid.betas[j]) + "," +
                   format_metric(m.oiou) + "," + format_metric(m.miou) + "\n";
        }
    }
    return out;
}

namespace {

SweepBest best_by(const SweepGrid& grid, bool by_oiou) {
    SweepBest best;
    bool first = true;
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t j = 0; j < grid.betas.size(); ++j) {
            const Metrics& m = grid.cell(i, j);
            double score = by_oiou ? m.oiou : m.miou;
            double incumbent = by_oiou ? best.metrics.oiou : best.metrics.miou;
            if (first || score > incumbent) {
                best = {grid.alphas[i], grid.betas[j], m};
                first = false;
            }
        }
    }
    return best;
}

} // namespace

SweepBest best_by_oiou(const SweepGrid& grid) {
    return best_by(grid, true);
}

SweepBest best_by_miou(const SweepGrid& grid) {
    return best_by(grid, false);
}

} // namespace refseg
