// Feature fusion, negative filtering, the three visual-text matching scores,
// their linear combination, and argmax mask selection.

#pragma once

#include <string>
#include <vector>

#include "refseg/backends.hpp"

namespace refseg {

struct NegativeSet {
    std::vector<std::string> phrases;
    std::vector<Embedding> embeddings; // parallel to phrases

    std::size_t size() const { return phrases.size(); }
};

struct FusionWeights {
    double alpha = 0.5;
    double beta = 1.0;
};

struct ScoreBreakdown {
    int proposal_index = 0;
    double s_van = 0.0;
    double s_att = 0.0;
    double s_sur = 0.0;
    double s_total = 0.0;
};

// dot(a,b) / (|a||b|), clamped to [-1,1] against rounding.
double cosine(const Embedding& a, const Embedding& b);

// Merges the two per-strategy visual features. With normalize_first each
// input is L2-normalized before the addition so differing feature norms do
// not silently reweight the strategies; false gives the literal sum.
// DegenerateSum when the result is the zero vector.
Embedding fuse_visual(const Embedding& f_mb, const Embedding& f_mc, bool normalize_first);

// Keeps candidates whose similarity to the referent object is below tau and
// which do not occur (case-insensitively) inside the expression. Embeddings
// are computed once and carried in the result.
NegativeSet filter_negatives(const std::vector<std::string>& candidates,
                             const std::string& object_phrase, const std::string& expression,
                             double tau, TextEncoderClient& encoder);

// s_total = s_van + alpha * s_att + beta * s_sur, where s_sur is the negated
// mean similarity to the negative set (0 when the set is empty).
double fuse_total(double s_van, double s_att, double s_sur, const FusionWeights& w);

ScoreBreakdown score_proposal(int proposal_index, const Embedding& f_instance,
                              const Embedding& f_att, const Embedding& f_van,
                              const NegativeSet& negatives, const FusionWeights& w);

// Index of the maximal s_total; ties break toward the lowest proposal index.
int select_mask(const std::vector<ScoreBreakdown>& breakdowns);

} // namespace refseg
