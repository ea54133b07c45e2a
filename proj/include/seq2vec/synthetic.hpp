#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seq2vec/rng.hpp"

namespace seq2vec::synthetic {

// ---------------------------------------------------------------------------
// Planted-pairs corpus: a fixed set of disjoint item pairs, each session a
// random walk over whole pairs so the two members are always adjacent. The
// final transition of every session is a pair-internal step, which makes the
// held-out next-event trivially learnable by a good model and hopeless for a
// random one.
// ---------------------------------------------------------------------------
struct PlantedPairsConfig {
    std::size_t sessions = 5000;
    std::size_t pair_count = 50;
    std::size_t min_pairs_per_session = 3;
    std::size_t max_pairs_per_session = 8;
    std::uint64_t seed = 42;
};

inline std::vector<std::vector<std::string>> planted_pairs_corpus(const PlantedPairsConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<std::vector<std::string>> sessions;
    sessions.reserve(cfg.sessions);
    for (std::size_t s = 0; s < cfg.sessions; ++s) {
        const std::size_t span = cfg.max_pairs_per_session - cfg.min_pairs_per_session + 1;
        const std::size_t n_pairs = cfg.min_pairs_per_session + uniform_below(rng, span);
        std::vector<std::string> session;
        session.reserve(2 * n_pairs);
        for (std::size_t p = 0; p < n_pairs; ++p) {
            const std::uint64_t pair = uniform_below(rng, cfg.pair_count);
            session.push_back("p" + std::to_string(pair) + "a");
            session.push_back("p" + std::to_string(pair) + "b");
        }
        sessions.push_back(std::move(session));
    }
    return sessions;
}

// Expected target for a planted-pairs query token, e.g. "p7a" -> "p7b".
inline std::string planted_partner(const std::string& token) {
    std::string partner = token;
    partner.back() = partner.back() == 'a' ? 'b' : 'a';
    return partner;
}

// ---------------------------------------------------------------------------
// Popularity-skewed corpus: item popularity follows a Zipf law and each
// session draws all of its items from one contiguous popularity block, so
// items within a session share the same order of popularity.
// ---------------------------------------------------------------------------
struct ZipfBlocksConfig {
    std::size_t sessions = 3000;
    std::size_t items = 400;
    std::size_t blocks = 8;
    std::size_t session_len = 16;
    double zipf_exponent = 1.0;
    std::uint64_t seed = 42;
};

inline std::vector<std::vector<std::string>> zipf_blocks_corpus(const ZipfBlocksConfig& cfg) {
    Rng rng(cfg.seed);

    std::vector<double> weight(cfg.items);
    for (std::size_t i = 0; i < cfg.items; ++i)
        weight[i] = 1.0 / std::pow(double(i + 1), cfg.zipf_exponent);

    // cumulative weights per block for inverse-CDF draws within a block
    const std::size_t block_size = (cfg.items + cfg.blocks - 1) / cfg.blocks;
    std::vector<std::vector<double>> block_cum(cfg.blocks);
    std::vector<double> block_total(cfg.blocks, 0.0);
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const std::size_t lo = b * block_size;
        const std::size_t hi = std::min(lo + block_size, cfg.items);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            acc += weight[i];
            block_cum[b].push_back(acc);
        }
        block_total[b] = acc;
    }
    double grand_total = 0.0;
    for (double t : block_total) grand_total += t;

    auto draw_block = [&]() {
        double u = uniform01(rng) * grand_total;
        for (std::size_t b = 0; b + 1 < cfg.blocks; ++b) {
            if (u < block_total[b]) return b;
            u -= block_total[b];
        }
        return cfg.blocks - 1;
    };
    auto draw_item = [&](std::size_t b) {
        const auto& cum = block_cum[b];
        double u = uniform01(rng) * block_total[b];
        std::size_t lo = 0, hi = cum.size();
        while (lo + 1 < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cum[mid - 1])
                hi = mid;
            else
                lo = mid;
        }
        return b * block_size + lo;
    };

    std::vector<std::vector<std::string>> sessions;
    sessions.reserve(cfg.sessions);
    for (std::size_t s = 0; s < cfg.sessions; ++s) {
        const std::size_t b = draw_block();
        std::vector<std::string> session;
        session.reserve(cfg.session_len);
        for (std::size_t i = 0; i < cfg.session_len; ++i)
            session.push_back("i" + std::to_string(draw_item(b)));
        sessions.push_back(std::move(session));
    }
    return sessions;
}

// ---------------------------------------------------------------------------
// Toy corpus for demos and CLI smoke tests: a few popularity-tiered genres,
// sessions stay within a genre, every 5 consecutive items share an artist.
// ---------------------------------------------------------------------------
struct ToyCorpus {
    std::vector<std::vector<std::string>> sessions;
    std::vector<std::pair<std::string, std::string>> artist_of;  // item -> artist rows
};

inline ToyCorpus toy_corpus(std::size_t sessions = 300, std::size_t items = 40,
                            std::uint64_t seed = 7) {
    ZipfBlocksConfig cfg;
    cfg.sessions = sessions;
    cfg.items = items;
    cfg.blocks = 4;
    cfg.session_len = 8;
    cfg.seed = seed;

    ToyCorpus toy;
    toy.sessions = zipf_blocks_corpus(cfg);
    for (std::size_t i = 0; i < items; ++i)
        toy.artist_of.emplace_back("i" + std::to_string(i), "artist" + std::to_string(i / 5));
    return toy;
}

}  // namespace seq2vec::synthetic
