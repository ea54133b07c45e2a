#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "seq2vec/corpus.hpp"
#include "seq2vec/sgns.hpp"
#include <json.hpp>

namespace seq2vec {

namespace detail {

// Cosine similarity between W rows, accumulated in double. Zero-norm rows
// compare as similarity 0. Both the ranking path and the test oracles keep
// this exact expression so ties and comparisons are reproducible.
inline double cosine_rows(const EmbeddingModel& m, ItemId a, ItemId b) {
    auto ra = m.input_row(a);
    auto rb = m.input_row(b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < ra.size(); ++j) {
        dot += double(ra[j]) * double(rb[j]);
        na += double(ra[j]) * double(ra[j]);
        nb += double(rb[j]) * double(rb[j]);
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double dot_rows(const EmbeddingModel& m, ItemId a, ItemId b) {
    auto ra = m.input_row(a);
    auto rb = m.input_row(b);
    double dot = 0.0;
    for (std::size_t j = 0; j < ra.size(); ++j) dot += double(ra[j]) * double(rb[j]);
    return dot;
}

}  // namespace detail

enum class Similarity { cosine, dot };

// ---------------------------------------------------------------------------
// nearest_neighbors: the K items most similar to the query, query excluded,
// ties broken by ascending item index. Only rows below item_count compete,
// so metadata rows never leak into predictions.
// ---------------------------------------------------------------------------
inline std::vector<ItemId> nearest_neighbors(const EmbeddingModel& model, ItemId query,
                                             std::size_t K,
                                             Similarity sim = Similarity::cosine) {
    const std::size_t V = model.item_count;
    if (query >= V) throw std::invalid_argument("query item out of range");
    if (K >= V) throw std::invalid_argument("K must be smaller than the vocabulary size");

    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(V - 1);
    for (ItemId i = 0; i < V; ++i) {
        if (i == query) continue;
        double s = sim == Similarity::cosine ? detail::cosine_rows(model, query, i)
                                             : detail::dot_rows(model, query, i);
        scored.emplace_back(s, i);
    }
    auto better = [](const std::pair<double, ItemId>& a, const std::pair<double, ItemId>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(K), scored.end(), better);

    std::vector<ItemId> out;
    out.reserve(K);
    for (std::size_t i = 0; i < K; ++i) out.push_back(scored[i].second);
    return out;
}

// Rank (1-based) of `target` in the similarity ordering around `query`, or
// nullopt when it falls outside the top K. Counting comparisons instead of
// sorting keeps this O(V) per pair and agrees exactly with the ordering of
// nearest_neighbors.
inline std::optional<std::size_t> rank_of_target(const EmbeddingModel& model, ItemId query,
                                                 ItemId target, std::size_t K,
                                                 Similarity sim = Similarity::cosine) {
    const std::size_t V = model.item_count;
    if (query >= V || target >= V) throw std::invalid_argument("pair item out of range");
    if (target == query) return std::nullopt;  // the query itself is never predicted

    const double st = sim == Similarity::cosine ? detail::cosine_rows(model, query, target)
                                                : detail::dot_rows(model, query, target);
    std::size_t rank = 1;
    for (ItemId i = 0; i < V; ++i) {
        if (i == query || i == target) continue;
        double s = sim == Similarity::cosine ? detail::cosine_rows(model, query, i)
                                             : detail::dot_rows(model, query, i);
        if (s > st || (s == st && i < target)) {
            if (++rank > K) return std::nullopt;
        }
    }
    return rank <= K ? std::optional<std::size_t>(rank) : std::nullopt;
}

// 1/log2(j+1) for a hit at rank j, 0 for a miss (single relevant item).
inline double ndcg_at_k(std::optional<std::size_t> rank) {
    if (!rank) return 0.0;
    return 1.0 / std::log2(double(*rank) + 1.0);
}

inline double hit_ratio_at_k(std::optional<std::size_t> rank) { return rank ? 1.0 : 0.0; }

struct PairScores {
    std::vector<double> hr;    // indicator per pair
    std::vector<double> ndcg;  // gain per pair
};

struct EvalScores {
    double hr = 0.0;
    double ndcg = 0.0;
};

// Per-pair ranks for a whole pair list. Parallel chunks write into slots
// indexed by pair position, so the reduction order is fixed.
inline PairScores score_pairs(const EmbeddingModel& model, const std::vector<IdPair>& pairs,
                              std::size_t K, unsigned threads = 1,
                              Similarity sim = Similarity::cosine) {
    if (pairs.empty()) throw std::invalid_argument("empty evaluation pair list");
    PairScores scores;
    scores.hr.assign(pairs.size(), 0.0);
    scores.ndcg.assign(pairs.size(), 0.0);

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rank = rank_of_target(model, pairs[i].first, pairs[i].second, K, sim);
            scores.hr[i] = hit_ratio_at_k(rank);
            scores.ndcg[i] = ndcg_at_k(rank);
        }
    };
    const unsigned n =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(pairs.size())));
    if (n == 1) {
        run(0, pairs.size());
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back(run, pairs.size() * t / n, pairs.size() * (t + 1) / n);
        for (auto& th : pool) th.join();
    }
    return scores;
}

// Mean HR@K / NDCG@K over the pair list (raw values in [0, 1]).
inline EvalScores evaluate(const EmbeddingModel& model, const std::vector<IdPair>& pairs,
                           std::size_t K, unsigned threads = 1,
                           Similarity sim = Similarity::cosine) {
    PairScores scores = score_pairs(model, pairs, K, threads, sim);
    EvalScores out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {  // fixed summation order
        out.hr += scores.hr[i];
        out.ndcg += scores.ndcg[i];
    }
    out.hr /= double(pairs.size());
    out.ndcg /= double(pairs.size());
    return out;
}

// ---------------------------------------------------------------------------
// Fold aggregation: mean and Student-t 95% confidence half-width.
// ---------------------------------------------------------------------------
struct FoldAggregate {
    double mean = 0.0;
    double ci_half_width = 0.0;
};

inline FoldAggregate aggregate_folds(const std::vector<double>& scores) {
    if (scores.size() < 2) throw std::invalid_argument("fold aggregation needs >= 2 folds");
    const double n = double(scores.size());
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= (n - 1.0);
    const double sd = std::sqrt(var);
    boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.975);
    return {mean, t * sd / std::sqrt(n)};
}

// ---------------------------------------------------------------------------
// Cold-start slicing: bucket evaluation pairs by how often query and target
// co-occur in training. Co-occurrence is counted per session: a session
// contributes 1 when the two items appear within `window` positions of each
// other at least once.
// ---------------------------------------------------------------------------
struct ColdStartSlices {
    std::vector<IdPair> zero;      // co-occurrence count == 0
    std::vector<IdPair> below;     // co-occurrence count < lt_threshold
    std::uint64_t lt_threshold = 3;
};

inline ColdStartSlices coldstart_slices(const std::vector<IdPair>& pairs,
                                        const std::vector<Session>& train_sessions,
                                        std::uint32_t window, std::uint64_t lt_threshold = 3) {
    auto key_of = [](ItemId a, ItemId b) {
        if (a > b) std::swap(a, b);
        return (std::uint64_t(a) << 32) | std::uint64_t(b);
    };

    std::unordered_map<std::uint64_t, std::uint64_t> wanted;  // pair key -> session count
    wanted.reserve(pairs.size() * 2);
    for (const auto& [q, t] : pairs) wanted.emplace(key_of(q, t), 0);

    std::unordered_set<std::uint64_t> seen_in_session;
    for (const auto& session : train_sessions) {
        seen_in_session.clear();
        const std::size_t n = session.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t hi = std::min(i + window, n - 1);
            for (std::size_t j = i + 1; j <= hi; ++j) {
                auto key = key_of(session[i], session[j]);
                auto it = wanted.find(key);
                if (it != wanted.end() && seen_in_session.insert(key).second) ++it->second;
            }
        }
    }

    ColdStartSlices slices;
    slices.lt_threshold = lt_threshold;
    for (const auto& [q, t] : pairs) {
        const std::uint64_t count = wanted.at(key_of(q, t));
        if (count == 0) slices.zero.emplace_back(q, t);
        if (count < lt_threshold) slices.below.emplace_back(q, t);
    }
    return slices;
}

// ---------------------------------------------------------------------------
// EvalReport and its JSON form: one entry per metric with
// {metric, K, folds, mean, ci95, per_fold, slices}.
// ---------------------------------------------------------------------------
struct MetricSummary {
    std::vector<double> per_fold;
    double mean = 0.0;
    double ci95 = 0.0;  // 0 when only one fold

    static MetricSummary from_folds(std::vector<double> values) {
        MetricSummary s;
        s.per_fold = std::move(values);
        if (s.per_fold.size() >= 2) {
            auto agg = aggregate_folds(s.per_fold);
            s.mean = agg.mean;
            s.ci95 = agg.ci_half_width;
        } else if (!s.per_fold.empty()) {
            s.mean = s.per_fold[0];
        }
        return s;
    }
};

struct SliceSummary {
    double mean_pair_count = 0.0;
    MetricSummary hr;
    MetricSummary ndcg;
};

struct EvalReport {
    std::size_t K = 10;
    std::size_t folds = 1;
    MetricSummary hr;
    MetricSummary ndcg;
    std::map<std::string, SliceSummary> slices;  // "pair_freq=0", "pair_freq<3"
};

inline nlohmann::json to_json(const MetricSummary& s, std::size_t folds) {
    nlohmann::json j;
    j["mean"] = s.mean;
    if (folds >= 2)
        j["ci95"] = s.ci95;
    else
        j["ci95"] = nullptr;
    j["per_fold"] = s.per_fold;
    return j;
}

inline nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json reports = nlohmann::json::array();
    auto entry = [&](const std::string& name, const MetricSummary& m,
                     bool with_slices) {
        nlohmann::json j = to_json(m, report.folds);
        j["metric"] = name;
        j["K"] = report.K;
        j["folds"] = report.folds;
        nlohmann::json slices;
        if (with_slices) {
            for (const auto& [label, slice] : report.slices) {
                const MetricSummary& ms = name.rfind("hr", 0) == 0 ? slice.hr : slice.ndcg;
                nlohmann::json sj = to_json(ms, report.folds);
                sj["mean_pairs"] = slice.mean_pair_count;
                slices[label] = sj;
            }
        }
        j["slices"] = slices.is_null() ? nlohmann::json(nlohmann::json::object()) : slices;
        reports.push_back(j);
    };
    const std::string k = std::to_string(report.K);
    entry("hr@" + k, report.hr, true);
    entry("ndcg@" + k, report.ndcg, true);
    return nlohmann::json{{"reports", reports}};
}

}  // namespace seq2vec
