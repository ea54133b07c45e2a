#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "seq2vec/corpus.hpp"
#include "seq2vec/rng.hpp"

namespace seq2vec {

// ---------------------------------------------------------------------------
// NegativeTable: inverse-CDF sampler for P(c) proportional to count(c)^alpha.
// Raw counts are used instead of relative frequencies; the normalization
// cancels the difference and count >= 1 keeps count^alpha finite and positive
// for any real alpha, negative values included.
// ---------------------------------------------------------------------------
struct NegativeTable {
    double alpha = 0.75;
    std::vector<double> weights;     // count(c)^alpha
    std::vector<double> cumulative;  // prefix sums normalized to [0, 1], last == 1

    std::size_t size() const { return weights.size(); }

    // Exact P(c), recomputed from weights.
    std::vector<double> exact_probabilities() const {
        double sum = 0.0;
        for (double w : weights) sum += w;
        std::vector<double> p;
        p.reserve(weights.size());
        for (double w : weights) p.push_back(w / sum);
        return p;
    }

    double probability(ItemId c) const { return exact_probabilities().at(c); }

    // One inverse-CDF draw, O(log V).
    ItemId sample(Rng& rng) const {
        double u = uniform01(rng);
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;  // u == 1 cannot happen, guard anyway
        return static_cast<ItemId>(it - cumulative.begin());
    }
};

inline NegativeTable build_negative_table(const Vocabulary& vocab, double alpha) {
    if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");

    NegativeTable table;
    table.alpha = alpha;
    table.weights.reserve(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        double w = std::pow(static_cast<double>(vocab.counts[i]), alpha);
        table.weights.push_back(w);
        total += w;
    }
    table.cumulative.reserve(vocab.size());
    double acc = 0.0;
    for (double w : table.weights) {
        acc += w;
        table.cumulative.push_back(acc / total);
    }
    table.cumulative.back() = 1.0;
    return table;
}

// k draws from the table; any draw equal to `forbidden` (the positive context
// of the current pair) is rejected and redrawn.
inline std::vector<ItemId> draw_negatives(const NegativeTable& table, std::size_t k,
                                          std::optional<ItemId> forbidden, Rng& rng) {
    if (forbidden && table.size() < 2)
        throw std::runtime_error("cannot draw negatives: vocabulary of size 1 with forbidden item");
    std::vector<ItemId> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        ItemId c = table.sample(rng);
        while (forbidden && c == *forbidden) c = table.sample(rng);
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subsampling filter: p(c) = max(0, (f-t)/f - sqrt(t/f)), the probability an
// occurrence of c is removed from the training stream.
// ---------------------------------------------------------------------------
inline double discard_probability(double f, double t) {
    if (!(f > 0.0)) throw std::invalid_argument("frequency must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("subsample threshold must be positive");
    double p = (f - t) / f - std::sqrt(t / f);
    return std::max(0.0, p);
}

struct SubsampleFilter {
    double threshold = 1e-3;
    std::vector<double> discard_prob;  // per item, clipped to [0, 1)
};

inline SubsampleFilter build_subsample_filter(const Vocabulary& vocab, double t) {
    if (!(t > 0.0) || t > 1.0) throw std::invalid_argument("subsample threshold must be in (0, 1]");
    SubsampleFilter filter;
    filter.threshold = t;
    filter.discard_prob.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i)
        filter.discard_prob.push_back(discard_probability(vocab.freq(static_cast<ItemId>(i)), t));
    return filter;
}

// Each occurrence is kept independently with probability 1 - p(c); relative
// order is preserved. Called once per epoch pass with fresh randomness.
inline Session subsample_session(const Session& session, const SubsampleFilter& filter, Rng& rng) {
    Session kept;
    kept.reserve(session.size());
    for (ItemId item : session) {
        double p = filter.discard_prob[item];
        if (p <= 0.0 || uniform01(rng) >= p) kept.push_back(item);
    }
    return kept;
}

}  // namespace seq2vec
