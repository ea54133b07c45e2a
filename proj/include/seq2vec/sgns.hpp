#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "seq2vec/corpus.hpp"
#include "seq2vec/rng.hpp"
#include "seq2vec/sampling.hpp"
#include "seq2vec/sideinfo.hpp"

namespace seq2vec {

// ---------------------------------------------------------------------------
// Hyperparameters. Defaults are the stock (L, n, t, alpha, d, k, lr) values
// most embedding toolkits ship with; every field is tunable.
// ---------------------------------------------------------------------------
struct Hyperparameters {
    std::uint32_t window = 5;      // L: maximum context radius
    std::uint32_t epochs = 5;      // n: passes over the corpus
    double subsample = 1e-3;       // t: frequency threshold of the discard filter
    double alpha = 0.75;           // negative-sampling distribution exponent
    std::uint32_t dim = 50;        // d: embedding dimension
    std::uint32_t negatives = 5;   // k: negatives per positive pair
    double lr0 = 0.025;            // initial learning rate
    double lr_min = 0.025 * 1e-4;  // linear-decay floor
    std::uint64_t seed = 1;
    std::uint32_t threads = 1;

    void validate() const {
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(subsample > 0.0) || subsample > 1.0)
            throw std::invalid_argument("subsample must be in (0, 1]");
        if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
        if (dim < 1) throw std::invalid_argument("dim must be >= 1");
        if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
        if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be positive");
        if (!(lr_min > 0.0) || !(lr_min < lr0))
            throw std::invalid_argument("lr_min must satisfy 0 < lr_min < lr0");
        if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    }
};

// Derives the decay floor used when only an initial rate is given.
inline double default_lr_min(double lr0) { return lr0 * 1e-4; }

// ---------------------------------------------------------------------------
// EmbeddingModel: input matrix W (the item vectors used for prediction) and
// context matrix C, both row-major row-per-token. row_count may exceed
// item_count when metadata tokens share the embedding space; only rows below
// item_count are ever predicted.
// ---------------------------------------------------------------------------
struct EmbeddingModel {
    std::uint32_t dim = 0;
    std::uint32_t item_count = 0;
    std::uint32_t row_count = 0;
    std::vector<float> input;    // W, row_count x dim
    std::vector<float> context;  // C, row_count x dim

    std::span<float> input_row(ItemId i) { return {input.data() + std::size_t(i) * dim, dim}; }
    std::span<const float> input_row(ItemId i) const {
        return {input.data() + std::size_t(i) * dim, dim};
    }
    std::span<float> context_row(ItemId i) { return {context.data() + std::size_t(i) * dim, dim}; }
    std::span<const float> context_row(ItemId i) const {
        return {context.data() + std::size_t(i) * dim, dim};
    }

    bool all_finite() const {
        for (float v : input)
            if (!std::isfinite(v)) return false;
        for (float v : context)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// W rows i.i.d. uniform in [-0.5/d, +0.5/d), C all zeros.
inline EmbeddingModel init_model(std::size_t vocab_size, std::uint32_t dim, std::uint64_t seed) {
    if (vocab_size < 1 || dim < 1) throw std::invalid_argument("model needs vocab_size, dim >= 1");
    EmbeddingModel model;
    model.dim = dim;
    model.item_count = static_cast<std::uint32_t>(vocab_size);
    model.row_count = static_cast<std::uint32_t>(vocab_size);
    model.input.resize(vocab_size * std::size_t(dim));
    model.context.assign(vocab_size * std::size_t(dim), 0.0f);
    Rng rng(seed);
    const double half = 0.5 / dim;
    for (auto& v : model.input) v = static_cast<float>(uniform_range(rng, -half, half));
    return model;
}

// ---------------------------------------------------------------------------
// Loss and gradient math. Templated on the scalar so the same expressions run
// in float for training and in double for finite-difference checks.
// ---------------------------------------------------------------------------
template <typename T>
inline T sigmoid(T x) {
    if (x >= T(0)) {
        T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

// log(sigmoid(x)) without overflow for |x| up to ~700.
template <typename T>
inline T log_sigmoid(T x) {
    if (x >= T(0)) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

template <typename T>
inline T dot(std::span<const T> a, std::span<const T> b) {
    T sum = T(0);
    for (std::size_t j = 0; j < a.size(); ++j) sum += a[j] * b[j];
    return sum;
}

// l = -log s(w.c) - sum_i log s(-w.c_Ni), always non-negative.
template <typename T>
inline T pair_loss(const std::vector<T>& w, const std::vector<T>& c,
                   const std::vector<std::vector<T>>& negatives) {
    if (w.size() != c.size()) throw std::invalid_argument("pair_loss: dimension mismatch");
    T loss = -log_sigmoid(dot<T>(w, c));
    for (const auto& n : negatives) {
        if (n.size() != w.size()) throw std::invalid_argument("pair_loss: dimension mismatch");
        loss -= log_sigmoid(-dot<T>(w, n));
    }
    return loss;
}

namespace detail {

// One SGD step on rows of the model. The gradient wrt the center row is
// accumulated in `scratch` and applied after every context row has been
// updated, so context rows always see the pre-update center vector.
// Returns the pair loss at the pre-update parameters.
inline double update_pair(EmbeddingModel& model, ItemId center, ItemId context_item,
                          std::span<const ItemId> negatives, double lr,
                          std::vector<double>& scratch) {
    const std::uint32_t d = model.dim;
    float* w = model.input.data() + std::size_t(center) * d;
    scratch.assign(d, 0.0);

    double loss = 0.0;
    {
        float* c = model.context.data() + std::size_t(context_item) * d;
        double z = 0.0;
        for (std::uint32_t j = 0; j < d; ++j) z += double(w[j]) * double(c[j]);
        const double g = sigmoid(z) - 1.0;  // d loss / d (w.c)
        loss -= log_sigmoid(z);
        for (std::uint32_t j = 0; j < d; ++j) {
            scratch[j] += g * double(c[j]);
            c[j] -= static_cast<float>(lr * g * double(w[j]));
        }
    }
    for (ItemId neg : negatives) {
        float* c = model.context.data() + std::size_t(neg) * d;
        double z = 0.0;
        for (std::uint32_t j = 0; j < d; ++j) z += double(w[j]) * double(c[j]);
        const double g = sigmoid(z);
        loss -= log_sigmoid(-z);
        for (std::uint32_t j = 0; j < d; ++j) {
            scratch[j] += g * double(c[j]);
            c[j] -= static_cast<float>(lr * g * double(w[j]));
        }
    }
    for (std::uint32_t j = 0; j < d; ++j) w[j] -= static_cast<float>(lr * scratch[j]);
    return loss;
}

// Expected number of (center, context) pairs a session of length m yields
// under a dynamic window drawn uniformly from {1..L}, boundary-aware.
inline double expected_pairs(std::size_t m, std::uint32_t L) {
    if (m < 2) return 0.0;
    double total = 0.0;
    for (std::uint32_t b = 1; b <= L; ++b) {
        // sum over centers of min(i, b), one side; doubled by symmetry
        double side;
        if (m >= b) {
            side = 0.5 * double(b) * double(b - 1) + double(m - b) * double(b);
        } else {
            side = 0.5 * double(m) * double(m - 1);
        }
        total += 2.0 * side;
    }
    return total / double(L);
}

}  // namespace detail

// Public single-pair update; see detail::update_pair for the order contract.
// lr == 0 is a valid no-op (the model is left bit-identical).
inline double sgd_update(EmbeddingModel& model, ItemId center, ItemId context_item,
                         const std::vector<ItemId>& negatives, double lr) {
    if (lr < 0.0 || !std::isfinite(lr)) throw std::invalid_argument("lr must be non-negative");
    std::vector<double> scratch(model.dim);
    return detail::update_pair(model, center, context_item, negatives, lr, scratch);
}

// ---------------------------------------------------------------------------
// TrainReport
// ---------------------------------------------------------------------------
struct TrainReport {
    std::vector<double> epoch_mean_loss;
    std::vector<std::uint64_t> epoch_pairs;
    std::uint64_t pairs_processed = 0;  // total updates applied (item + meta pairs)
    double wall_seconds = 0.0;
    double final_lr = 0.0;
};

// ---------------------------------------------------------------------------
// train: SGD over subsampled sessions with dynamic windows and negative
// sampling. Sessions are re-subsampled every epoch; the window radius is
// redrawn per center; negatives exclude the positive context item.
//
// With side != nullptr the model gets extra rows for metadata tokens and each
// window additionally trains the weighted meta pairs of augment_pairs().
// Meta negatives come from a separate rng stream so a lambda sweep never
// perturbs the item-pair draw sequence.
//
// threads == 1 is bit-reproducible for a fixed seed. threads > 1 shards
// sessions across workers that update rows without synchronization (the
// usual lock-free SGD contract): only finiteness and window legality are
// guaranteed there.
// ---------------------------------------------------------------------------
inline std::pair<EmbeddingModel, TrainReport> train(const SplitCorpus& split,
                                                    const Vocabulary& vocab,
                                                    const Hyperparameters& hp,
                                                    const SideInfoMap* side = nullptr) {
    hp.validate();
    if (split.train_sessions.empty()) throw std::invalid_argument("no training sessions");
    if (side && side->item_count != vocab.size())
        throw std::invalid_argument("side-info map does not match vocabulary");

    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t rows = side ? side->extended_size() : vocab.size();

    EmbeddingModel model = init_model(rows, hp.dim, hp.seed);
    model.item_count = static_cast<std::uint32_t>(vocab.size());

    const NegativeTable table = build_negative_table(vocab, hp.alpha);
    const SubsampleFilter filter = build_subsample_filter(vocab, hp.subsample);

    double expected_total = 0.0;
    for (const auto& s : split.train_sessions)
        expected_total += detail::expected_pairs(s.size(), hp.window);
    expected_total *= hp.epochs;
    if (expected_total < 1.0) expected_total = 1.0;

    const double lr_span = hp.lr0 - hp.lr_min;
    std::atomic<std::uint64_t> schedule_pairs{0};  // item pairs, drives the lr decay
    std::atomic<double> last_lr{hp.lr0};

    TrainReport report;
    const std::size_t n_sessions = split.train_sessions.size();
    const std::uint32_t n_threads =
        static_cast<std::uint32_t>(std::min<std::size_t>(hp.threads, n_sessions));

    for (std::uint32_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::vector<double> loss_sum(n_threads, 0.0);
        std::vector<std::uint64_t> update_count(n_threads, 0);

        auto worker = [&](std::uint32_t tid) {
            Rng rng(mix_seed(hp.seed, epoch + 1, tid + 1));
            Rng meta_rng(mix_seed(hp.seed, epoch + 1, tid + 1, 0x5ebaULL));
            std::vector<double> scratch(hp.dim);
            std::vector<ItemId> contexts;
            double lr = last_lr.load(std::memory_order_relaxed);

            const std::size_t begin = n_sessions * tid / n_threads;
            const std::size_t end = n_sessions * (tid + 1) / n_threads;
            for (std::size_t si = begin; si < end; ++si) {
                Session kept = subsample_session(split.train_sessions[si], filter, rng);
                const std::size_t n = kept.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const std::uint32_t radius =
                        1 + static_cast<std::uint32_t>(uniform_below(rng, hp.window));
                    const std::size_t lo = i > radius ? i - radius : 0;
                    const std::size_t hi = std::min(i + radius, n - 1);
                    contexts.clear();
                    for (std::size_t j = lo; j <= hi; ++j)
                        if (j != i) contexts.push_back(kept[j]);
                    if (contexts.empty()) continue;

                    const std::uint64_t done = schedule_pairs.fetch_add(
                                                   contexts.size(), std::memory_order_relaxed) +
                                               contexts.size();
                    const double progress = std::min(1.0, double(done) / expected_total);
                    lr = std::max(hp.lr_min, hp.lr0 - lr_span * progress);

                    const ItemId center = kept[i];
                    for (ItemId ctx : contexts) {
                        auto negs = draw_negatives(table, hp.negatives, ctx, rng);
                        loss_sum[tid] +=
                            detail::update_pair(model, center, ctx, negs, lr, scratch);
                        ++update_count[tid];
                    }
                    if (side) {
                        auto all = augment_pairs(center, contexts, *side);
                        for (std::size_t p = contexts.size(); p < all.size(); ++p) {
                            const auto& wp = all[p];
                            std::optional<ItemId> forbid;
                            if (wp.context < side->item_count) forbid = wp.context;
                            auto negs =
                                draw_negatives(table, hp.negatives, forbid, meta_rng);
                            loss_sum[tid] += detail::update_pair(model, wp.center, wp.context,
                                                                 negs, lr * wp.weight, scratch);
                            ++update_count[tid];
                        }
                    }
                }
            }
            last_lr.store(lr, std::memory_order_relaxed);
        };

        if (n_threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (std::uint32_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }

        double epoch_loss = 0.0;
        std::uint64_t epoch_updates = 0;
        for (std::uint32_t t = 0; t < n_threads; ++t) {
            epoch_loss += loss_sum[t];
            epoch_updates += update_count[t];
        }
        if (epoch_updates == 0) {
            std::cerr << "seq2vec: warning: epoch " << epoch + 1
                      << " had an empty training stream after subsampling; skipped\n";
            report.epoch_mean_loss.push_back(0.0);
        } else {
            report.epoch_mean_loss.push_back(epoch_loss / double(epoch_updates));
        }
        report.epoch_pairs.push_back(epoch_updates);
        report.pairs_processed += epoch_updates;
    }

    report.final_lr = last_lr.load();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(model), std::move(report)};
}

}  // namespace seq2vec
