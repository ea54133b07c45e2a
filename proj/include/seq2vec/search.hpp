#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seq2vec/corpus.hpp"
#include "seq2vec/eval.hpp"
#include "seq2vec/rng.hpp"
#include "seq2vec/sgns.hpp"

namespace seq2vec {

// ---------------------------------------------------------------------------
// GridSpec: one value list per hyperparameter. Dimensions left empty fall
// back to a single default value, so a spec only has to name what it sweeps.
// Declaration order of the dimensions (epochs, window, subsample, alpha, dim,
// negatives, lr) fixes the enumeration order.
// ---------------------------------------------------------------------------
struct GridSpec {
    std::vector<std::uint32_t> epochs;
    std::vector<std::uint32_t> window;
    std::vector<double> subsample;
    std::vector<double> alpha;
    std::vector<std::uint32_t> dim;
    std::vector<std::uint32_t> negatives;
    std::vector<double> lr;
    Hyperparameters defaults;

    std::size_t size() const {
        auto n = [](const auto& v) { return v.empty() ? std::size_t(1) : v.size(); };
        return n(epochs) * n(window) * n(subsample) * n(alpha) * n(dim) * n(negatives) * n(lr);
    }
};

inline GridSpec parse_grid_spec(const nlohmann::json& j) {
    GridSpec spec;
    auto read_u32 = [&](const char* key, std::vector<std::uint32_t>& out) {
        if (j.contains(key)) out = j.at(key).get<std::vector<std::uint32_t>>();
    };
    auto read_f64 = [&](const char* key, std::vector<double>& out) {
        if (j.contains(key)) out = j.at(key).get<std::vector<double>>();
    };
    read_u32("epochs", spec.epochs);
    read_u32("window", spec.window);
    read_f64("subsample", spec.subsample);
    read_f64("alpha", spec.alpha);
    read_u32("dim", spec.dim);
    read_u32("negatives", spec.negatives);
    read_f64("lr", spec.lr);

    for (auto v : spec.epochs)
        if (v < 1) throw std::invalid_argument("grid: epochs values must be >= 1");
    for (auto v : spec.window)
        if (v < 1) throw std::invalid_argument("grid: window values must be >= 1");
    for (auto v : spec.subsample)
        if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("grid: subsample values must be in (0,1]");
    for (auto v : spec.alpha)
        if (!std::isfinite(v)) throw std::invalid_argument("grid: alpha values must be finite");
    for (auto v : spec.dim)
        if (v < 1) throw std::invalid_argument("grid: dim values must be >= 1");
    for (auto v : spec.negatives)
        if (v < 1) throw std::invalid_argument("grid: negatives values must be >= 1");
    for (auto v : spec.lr)
        if (!(v > 0.0)) throw std::invalid_argument("grid: lr values must be positive");
    return spec;
}

inline GridSpec load_grid_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid spec: " + path);
    nlohmann::json j;
    in >> j;
    return parse_grid_spec(j);
}

// The three bundled presets (also shipped as files under data/presets/).
inline GridSpec grid_preset(const std::string& name) {
    GridSpec spec;
    auto steps_u32 = [](std::uint32_t from, std::uint32_t to, std::uint32_t step) {
        std::vector<std::uint32_t> v;
        for (std::uint32_t x = from; x <= to; x += step) v.push_back(x);
        return v;
    };
    if (name == "paper-full" || name == "paper-4hp") {
        spec.epochs = steps_u32(10, 200, 10);
        spec.window = {3, 7, 12, 15};
        spec.subsample = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
        spec.alpha = {-1.4, -1.2, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0,
                      0.2,  0.4,  0.6,  0.8,  1.0,  1.2,  1.4};
        if (name == "paper-full") {
            spec.dim = {50, 100, 150, 200};
            spec.negatives = {5, 10, 15, 20};
            spec.lr = {0.0025, 0.025, 0.25};
        } else {
            spec.dim = {50};
            spec.negatives = {5};
            spec.lr = {0.025};
        }
        return spec;
    }
    if (name == "desk") {
        spec.epochs = {5, 15, 30};
        spec.window = {3, 5};
        spec.subsample = {1e-3, 1.0};
        spec.alpha = {-1.0, -0.5, 0.0, 0.5, 1.0};
        spec.dim = {32};
        spec.negatives = {5};
        spec.lr = {0.05};
        return spec;
    }
    throw std::invalid_argument("unknown grid preset: " + name +
                                " (expected paper-full, paper-4hp or desk)");
}

// Cartesian product in lexicographic order of the dimension declaration
// (epochs slowest, lr fastest). Values keep their listed order.
inline std::vector<Hyperparameters> enumerate_grid(const GridSpec& spec) {
    auto or_default = [](const auto& list, auto fallback) {
        using T = std::decay_t<decltype(fallback)>;
        if (list.empty()) return std::vector<T>{fallback};
        return std::vector<T>(list.begin(), list.end());
    };
    const auto epochs = or_default(spec.epochs, spec.defaults.epochs);
    const auto window = or_default(spec.window, spec.defaults.window);
    const auto subsample = or_default(spec.subsample, spec.defaults.subsample);
    const auto alpha = or_default(spec.alpha, spec.defaults.alpha);
    const auto dim = or_default(spec.dim, spec.defaults.dim);
    const auto negatives = or_default(spec.negatives, spec.defaults.negatives);
    const auto lr = or_default(spec.lr, spec.defaults.lr0);

    std::vector<Hyperparameters> out;
    out.reserve(epochs.size() * window.size() * subsample.size() * alpha.size() * dim.size() *
                negatives.size() * lr.size());
    for (auto n : epochs)
        for (auto L : window)
            for (auto t : subsample)
                for (auto a : alpha)
                    for (auto d : dim)
                        for (auto k : negatives)
                            for (auto r : lr) {
                                Hyperparameters hp = spec.defaults;
                                hp.epochs = n;
                                hp.window = L;
                                hp.subsample = t;
                                hp.alpha = a;
                                hp.dim = d;
                                hp.negatives = k;
                                hp.lr0 = r;
                                hp.lr_min = default_lr_min(r);
                                out.push_back(hp);
                            }
    return out;
}

// ---------------------------------------------------------------------------
// TrialResult and its JSONL encoding.
// ---------------------------------------------------------------------------
struct TrialResult {
    std::size_t config_index = 0;
    Hyperparameters hp;
    std::uint64_t seed = 0;
    bool done = false;
    double val_hr = 0.0;
    double val_ndcg = 0.0;
    std::optional<double> test_hr;    // filled only for selected configs
    std::optional<double> test_ndcg;
    std::string error;                // non-empty iff failed
    double wall_seconds = 0.0;
};

inline nlohmann::json hp_to_json(const Hyperparameters& hp) {
    return nlohmann::json{{"epochs", hp.epochs},      {"window", hp.window},
                          {"subsample", hp.subsample}, {"alpha", hp.alpha},
                          {"dim", hp.dim},             {"negatives", hp.negatives},
                          {"lr0", hp.lr0},             {"lr_min", hp.lr_min}};
}

inline Hyperparameters hp_from_json(const nlohmann::json& j, Hyperparameters base = {}) {
    base.epochs = j.value("epochs", base.epochs);
    base.window = j.value("window", base.window);
    base.subsample = j.value("subsample", base.subsample);
    base.alpha = j.value("alpha", base.alpha);
    base.dim = j.value("dim", base.dim);
    base.negatives = j.value("negatives", base.negatives);
    base.lr0 = j.value("lr0", base.lr0);
    base.lr_min = j.value("lr_min", default_lr_min(base.lr0));
    return base;
}

inline bool same_grid_point(const Hyperparameters& a, const Hyperparameters& b) {
    return a.epochs == b.epochs && a.window == b.window && a.subsample == b.subsample &&
           a.alpha == b.alpha && a.dim == b.dim && a.negatives == b.negatives && a.lr0 == b.lr0;
}

inline nlohmann::json to_json(const TrialResult& r) {
    nlohmann::json j;
    j["config_index"] = r.config_index;
    j["hp"] = hp_to_json(r.hp);
    j["seed"] = r.seed;
    j["status"] = r.done ? "done" : "failed";
    if (r.done) {
        j["validation"] = {{"hr", r.val_hr}, {"ndcg", r.val_ndcg}};
    } else {
        j["validation"] = nullptr;
    }
    if (r.test_hr) {
        j["test"] = {{"hr", *r.test_hr}, {"ndcg", *r.test_ndcg}};
    } else {
        j["test"] = nullptr;
    }
    j["error"] = r.error.empty() ? nlohmann::json() : nlohmann::json(r.error);
    j["wall_time_sec"] = r.wall_seconds;
    return j;
}

inline TrialResult trial_from_json(const nlohmann::json& j) {
    TrialResult r;
    r.config_index = j.at("config_index").get<std::size_t>();
    r.hp = hp_from_json(j.at("hp"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.done = j.at("status").get<std::string>() == "done";
    if (r.done && j.contains("validation") && !j.at("validation").is_null()) {
        r.val_hr = j.at("validation").at("hr").get<double>();
        r.val_ndcg = j.at("validation").at("ndcg").get<double>();
    }
    if (j.contains("test") && !j.at("test").is_null()) {
        r.test_hr = j.at("test").at("hr").get<double>();
        r.test_ndcg = j.at("test").at("ndcg").get<double>();
    }
    if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    r.wall_seconds = j.value("wall_time_sec", 0.0);
    return r;
}

inline std::vector<TrialResult> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::vector<TrialResult> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(trial_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("bad results line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// run_search: execute grid trials, appending one JSONL record per completed
// trial. Each trial trains single-threaded with a seed derived from
// (base_seed, config_index), so scores do not depend on completion order;
// parallelism comes from running trials concurrently. With resume=true,
// configurations already present in the results file are skipped.
// ---------------------------------------------------------------------------
struct SearchOptions {
    std::string results_path;          // empty: in-memory only
    std::optional<std::size_t> budget; // max trials this invocation
    bool resume = false;
    std::uint64_t base_seed = 1;
    unsigned jobs = 1;                 // concurrent trials
    std::size_t K = 10;
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t config_index) {
    return mix_seed(base_seed, 0x7261ULL, config_index);
}

inline std::vector<TrialResult> run_search(const GridSpec& spec, const SplitCorpus& split,
                                           const Vocabulary& vocab, const EvalSplit& eval_split,
                                           const SearchOptions& options) {
    const std::vector<Hyperparameters> configs = enumerate_grid(spec);
    if (eval_split.validation_pairs.empty())
        throw std::invalid_argument("run_search needs a non-empty validation pair set");

    std::vector<std::optional<TrialResult>> results(configs.size());
    if (options.resume && !options.results_path.empty()) {
        std::ifstream probe(options.results_path);
        if (probe.good()) {
            for (auto& r : load_results(options.results_path)) {
                if (r.config_index >= configs.size() ||
                    !same_grid_point(r.hp, configs[r.config_index]))
                    throw std::runtime_error("results file does not match this grid; refusing to resume");
                results[r.config_index] = std::move(r);
            }
        }
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < configs.size(); ++i)
        if (!results[i]) pending.push_back(i);
    if (options.budget && pending.size() > *options.budget) pending.resize(*options.budget);

    std::ofstream out;
    if (!options.results_path.empty()) {
        out.open(options.results_path, options.resume ? std::ios::app : std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write results file: " + options.results_path);
    }

    std::mutex write_mutex;
    std::atomic<std::size_t> next{0};

    auto run_trial = [&](std::size_t config_index) {
        TrialResult r;
        r.config_index = config_index;
        r.hp = configs[config_index];
        r.hp.seed = trial_seed(options.base_seed, config_index);
        r.hp.threads = 1;
        r.seed = r.hp.seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto [model, train_report] = train(split, vocab, r.hp);
            auto scores = evaluate(model, eval_split.validation_pairs, options.K);
            r.val_hr = scores.hr;
            r.val_ndcg = scores.ndcg;
            r.done = true;
        } catch (const std::exception& e) {
            r.done = false;
            r.error = e.what();
        }
        r.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::lock_guard<std::mutex> lock(write_mutex);
        if (out.is_open()) {
            out << to_json(r).dump() << '\n';
            out.flush();  // completed records survive a kill
        }
        results[config_index] = std::move(r);
    };

    auto worker = [&] {
        while (true) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            run_trial(pending[slot]);
        }
    };

    const unsigned jobs = std::max(1u, options.jobs);
    if (jobs == 1 || pending.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(jobs, pending.size()); ++t)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<TrialResult> done;
    done.reserve(configs.size());
    for (auto& r : results)
        if (r) done.push_back(std::move(*r));
    return done;
}

// ---------------------------------------------------------------------------
// select_best: argmax of validation HR; ties prefer fewer epochs, then a
// smaller window, then the earlier grid point.
// ---------------------------------------------------------------------------
inline const TrialResult& select_best(const std::vector<TrialResult>& results) {
    const TrialResult* best = nullptr;
    for (const auto& r : results) {
        if (!r.done) continue;
        if (!best) {
            best = &r;
            continue;
        }
        if (r.val_hr != best->val_hr) {
            if (r.val_hr > best->val_hr) best = &r;
        } else if (r.hp.epochs != best->hp.epochs) {
            if (r.hp.epochs < best->hp.epochs) best = &r;
        } else if (r.hp.window != best->hp.window) {
            if (r.hp.window < best->hp.window) best = &r;
        } else if (r.config_index < best->config_index) {
            best = &r;
        }
    }
    if (!best) throw std::runtime_error("no successful trials to select from");
    return *best;
}

// Best validation HR per alpha value, ordered by alpha. Alphas whose trials
// all failed are omitted with a warning.
inline std::vector<std::pair<double, double>> alpha_profile(
    const std::vector<TrialResult>& results) {
    std::map<double, std::optional<double>> best;
    for (const auto& r : results) {
        auto& slot = best[r.hp.alpha];
        if (r.done && (!slot || r.val_hr > *slot)) slot = r.val_hr;
    }
    std::vector<std::pair<double, double>> profile;
    for (const auto& [alpha, hr] : best) {
        if (!hr) {
            std::cerr << "seq2vec: warning: all trials failed for alpha=" << alpha
                      << "; omitted from profile\n";
            continue;
        }
        profile.emplace_back(alpha, *hr);
    }
    return profile;
}

inline std::string alpha_profile_csv(const std::vector<std::pair<double, double>>& profile) {
    std::ostringstream out;
    out.precision(12);
    out << "alpha,best_validation_hr\n";
    for (const auto& [alpha, hr] : profile) out << alpha << ',' << hr << '\n';
    return out.str();
}

}  // namespace seq2vec
