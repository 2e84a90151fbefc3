#include "refseg/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "refseg/errors.hpp"

namespace refseg {

namespace {

double l2_norm(const Embedding& e) {
    double sum = 0.0;
    for (double v : e.values) sum += v * v;
    return std::sqrt(sum);
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return true;
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        return s;
    };
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

} // namespace

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        raise(Errc::dimension_mismatch, "embedding dims " + std::to_string(a.dim()) + " vs " +
                                            std::to_string(b.dim()));
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        raise(Errc::degenerate_sum, "cosine of zero-norm embedding");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

Embedding fuse_visual(const Embedding& f_mb, const Embedding& f_mc, bool normalize_first) {
    if (f_mb.dim() != f_mc.dim())
        raise(Errc::dimension_mismatch, "per-strategy embedding dims differ");

    Embedding out;
    out.values.resize(f_mb.dim());
    if (normalize_first) {
        double nb = l2_norm(f_mb), nc = l2_norm(f_mc);
        if (nb == 0.0 || nc == 0.0)
            raise(Errc::degenerate_sum, "zero-norm input to fuse_visual");
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = f_mb.values[i] / nb + f_mc.values[i] / nc;
    } else {
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = f_mb.values[i] + f_mc.values[i];
    }

    bool all_zero = std::all_of(out.values.begin(), out.values.end(),
                                [](double v) { return v == 0.0; });
    if (all_zero) raise(Errc::degenerate_sum, "fused visual feature is the zero vector");
    return out;
}

NegativeSet filter_negatives(const std::vector<std::string>& candidates,
                             const std::string& object_phrase, const std::string& expression,
                             double tau, TextEncoderClient& encoder) {
    if (!(tau >= -1.0 && tau <= 1.0))
        raise(Errc::schema_error, "tau must lie in [-1, 1]");
    NegativeSet out;
    if (candidates.empty()) return out;

    Embedding object_emb = encoder.encode(object_phrase);
    for (const std::string& candidate : candidates) {
        Embedding emb = encoder.encode(candidate);
        if (cosine(emb, object_emb) >= tau) continue;       // semantically close to referent
        if (contains_ci(expression, candidate)) continue;   // mentioned by the expression itself
        out.phrases.push_back(candidate);
        out.embeddings.push_back(std::move(emb));
    }
    return out;
}

double fuse_total(double s_van, double s_att, double s_sur, const FusionWeights& w) {
    return s_van + w.alpha * s_att + w.beta * s_sur;
}

ScoreBreakdown score_proposal(int proposal_index, const Embedding& f_instance,
                              const Embedding& f_att, const Embedding& f_van,
                              const NegativeSet& negatives, const FusionWeights& w) {
    ScoreBreakdown b;
    b.proposal_index = proposal_index;
    b.s_att = cosine(f_instance, f_att);
    b.s_van = cosine(f_instance, f_van);
    if (negatives.size() > 0) {
        double sum = 0.0;
        for (const Embedding& neg : negatives.embeddings) sum += cosine(f_instance, neg);
        b.s_sur = -sum / double(negatives.size());
    } else {
        b.s_sur = 0.0;
    }
    b.s_total = fuse_total(b.s_van, b.s_att, b.s_sur, w);

    double bound = 1.0 + w.alpha + w.beta;
    if (!(std::abs(b.s_total) <= bound + 1e-9))
        throw std::logic_error("score total " + std::to_string(b.s_total) +
                               " outside [-" + std::to_string(bound) + ", " +
                               std::to_string(bound) + "]");
    return b;
}

int select_mask(const std::vector<ScoreBreakdown>& breakdowns) {
    if (breakdowns.empty()) raise(Errc::empty_input, "no score breakdowns to select from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < breakdowns.size(); ++i) {
        const auto& cur = breakdowns[i];
        const auto& top = breakdowns[best];
        if (cur.s_total > top.s_total ||
            (cur.s_total == top.s_total && cur.proposal_index < top.proposal_index))
            best = i;
    }
    return breakdowns[best].proposal_index;
}

} // namespace refseg
