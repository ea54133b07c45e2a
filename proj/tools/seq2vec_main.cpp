// seq2vec command-line interface: train / eval / grid / report / histogram.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seq2vec/seq2vec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seq2vec;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

unsigned default_threads() {
    if (const char* env = std::getenv("SEQ2VEC_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Everything a command needs, merged from config file defaults and flags.
struct RunConfig {
    std::string data;
    std::string format = "lines";
    CsvColumns csv_columns;
    std::int64_t min_count = 1;
    std::string meta;
    double lambda = 1.0;
    Hyperparameters hp;
    std::size_t pairs = 1000;
    std::size_t folds = 1;
    std::size_t K = 10;
    std::string slices;  // "", "coldstart"
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: SEQ2VEC_THREADS or hardware
    std::string out = "runs/latest";

    unsigned resolved_threads() const { return threads ? threads : default_threads(); }
};

// Per-command flag holder; optionals so a config file can fill the gaps.
struct Flags {
    std::optional<std::string> data, format, meta, slices, out;
    std::optional<std::string> csv_session, csv_item, csv_time;
    std::optional<std::int64_t> min_count;
    std::optional<double> lambda;
    std::optional<std::uint32_t> window, epochs, dim, negatives;
    std::optional<double> subsample, alpha, lr, lr_min;
    std::optional<std::size_t> pairs, folds, K;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string config_path;

    void add_common(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--data", data, "dataset file");
        cmd->add_option("--format", format, "dataset format: lines, csv_retail, csv_events");
        cmd->add_option("--csv-session", csv_session, "CSV column holding the session id");
        cmd->add_option("--csv-item", csv_item, "CSV column holding the item token");
        cmd->add_option("--csv-time", csv_time, "CSV column holding the timestamp");
        cmd->add_option("--min-count", min_count, "drop tokens seen fewer times than this");
        cmd->add_option("--seed", seed, "base random seed");
        cmd->add_option("--threads", threads,
                        "worker threads (default: SEQ2VEC_THREADS or hardware)");
        cmd->add_option("--out", out, "output directory");
    }

    void add_hyper(CLI::App* cmd) {
        cmd->add_option("--window", window, "L: maximum context window");
        cmd->add_option("--epochs", epochs, "n: training epochs");
        cmd->add_option("--subsample", subsample, "t: subsampling threshold");
        cmd->add_option("--alpha", alpha, "negative-sampling distribution exponent");
        cmd->add_option("--dim", dim, "d: embedding dimension");
        cmd->add_option("--negatives", negatives, "k: negatives per pair");
        cmd->add_option("--lr", lr, "initial learning rate");
        cmd->add_option("--lr-min", lr_min, "learning-rate floor (default lr * 1e-4)");
    }

    void add_eval(CLI::App* cmd) {
        cmd->add_option("--pairs", pairs, "evaluation pairs per split side");
        cmd->add_option("--folds", folds, "evaluation folds (>=2 retrains per fold)");
        cmd->add_option("--K", K, "prediction list length");
        cmd->add_option("--slices", slices, "extra report slices: coldstart");
    }

    RunConfig merge() const {
        RunConfig rc;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config file: " + config_path);
            json j;
            in >> j;
            rc.data = j.value("data", rc.data);
            rc.format = j.value("format", rc.format);
            if (j.contains("csv_columns")) {
                const auto& c = j.at("csv_columns");
                rc.csv_columns.session = c.value("session", "");
                rc.csv_columns.item = c.value("item", "");
                rc.csv_columns.time = c.value("time", "");
            }
            rc.min_count = j.value("min_count", rc.min_count);
            rc.meta = j.value("meta", rc.meta);
            rc.lambda = j.value("lambda", rc.lambda);
            if (j.contains("hyperparameters")) rc.hp = hp_from_json(j.at("hyperparameters"), rc.hp);
            if (j.contains("eval")) {
                const auto& e = j.at("eval");
                rc.pairs = e.value("pairs", rc.pairs);
                rc.folds = e.value("folds", rc.folds);
                rc.K = e.value("K", rc.K);
                rc.slices = e.value("slices", rc.slices);
            }
            rc.seed = j.value("seed", rc.seed);
            rc.threads = j.value("threads", rc.threads);
            rc.out = j.value("out", rc.out);
        }
        auto take = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        take(rc.data, data);
        take(rc.format, format);
        take(rc.csv_columns.session, csv_session);
        take(rc.csv_columns.item, csv_item);
        take(rc.csv_columns.time, csv_time);
        take(rc.min_count, min_count);
        take(rc.meta, meta);
        take(rc.lambda, lambda);
        take(rc.hp.window, window);
        take(rc.hp.epochs, epochs);
        take(rc.hp.subsample, subsample);
        take(rc.hp.alpha, alpha);
        take(rc.hp.dim, dim);
        take(rc.hp.negatives, negatives);
        if (lr) {
            rc.hp.lr0 = *lr;
            rc.hp.lr_min = default_lr_min(*lr);
        }
        take(rc.hp.lr_min, lr_min);
        take(rc.pairs, pairs);
        take(rc.folds, folds);
        take(rc.K, K);
        take(rc.slices, slices);
        take(rc.seed, seed);
        take(rc.threads, threads);
        take(rc.out, out);
        rc.hp.seed = rc.seed;
        return rc;
    }
};

void require_file(const std::string& path, const char* what) {
    if (path.empty()) {
        std::cerr << "seq2vec: no " << what << " given\n";
        std::exit(kExitUsage);
    }
    if (!fs::exists(path)) {
        std::cerr << "seq2vec: " << what << " not found: " << path << '\n';
        std::exit(kExitUsage);
    }
}

std::vector<std::vector<std::string>> load_dataset(const RunConfig& rc) {
    require_file(rc.data, "dataset file");
    return load_sessions(rc.data, parse_format(rc.format), &rc.csv_columns);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json_file(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------
int cmd_train(const RunConfig& rc, bool full_sessions, bool text_model) {
    auto sequences = load_dataset(rc);
    Vocabulary vocab = build_vocabulary(sequences, rc.min_count);

    SplitCorpus split;
    if (full_sessions) {
        for (std::size_t sid = 0; sid < sequences.size(); ++sid) {
            Session s;
            for (const auto& tok : sequences[sid])
                if (auto idx = vocab.index_of(tok)) s.push_back(*idx);
            if (!s.empty()) split.train_sessions.push_back(std::move(s));
        }
    } else {
        split = split_nep(sequences, vocab);
    }

    SideInfoMap side;
    const bool use_side = !rc.meta.empty();
    if (use_side) {
        require_file(rc.meta, "side-info file");
        side = load_side_info(rc.meta, vocab, rc.lambda);
        std::cout << "side info: " << side.meta_count() << " meta tokens, " << side.skipped_rows
                  << " rows skipped\n";
    }

    Hyperparameters hp = rc.hp;
    hp.threads = rc.resolved_threads();

    std::cout << "training: " << split.train_sessions.size() << " sessions, vocab "
              << vocab.size() << ", dim " << hp.dim << ", epochs " << hp.epochs << ", threads "
              << hp.threads << '\n';
    auto [model, report] = train(split, vocab, hp, use_side ? &side : nullptr);

    fs::create_directories(rc.out);
    const fs::path model_path = fs::path(rc.out) / "model.bin";
    save_model(model_path.string(), model, vocab.tokens, hp);
    if (text_model)
        save_model_text((fs::path(rc.out) / "model.txt").string(), model, vocab.tokens);

    json j;
    j["vocab_size"] = vocab.size();
    j["dim"] = hp.dim;
    j["hp"] = hp_to_json(hp);
    j["seed"] = hp.seed;
    j["threads"] = hp.threads;
    j["train_sessions"] = split.train_sessions.size();
    j["holdout_pairs"] = split.holdout_pairs.size();
    j["epoch_mean_loss"] = report.epoch_mean_loss;
    j["epoch_pairs"] = report.epoch_pairs;
    j["pairs_processed"] = report.pairs_processed;
    j["wall_time_sec"] = report.wall_seconds;
    j["final_lr"] = report.final_lr;
    if (use_side)
        j["meta"] = {{"tokens", side.meta_count()}, {"skipped_rows", side.skipped_rows},
                     {"lambda", side.lambda}};
    else
        j["meta"] = nullptr;
    write_json_file(fs::path(rc.out) / "train_report.json", j);

    std::cout << "model written to " << model_path.string() << " (" << report.pairs_processed
              << " updates, " << report.wall_seconds << " s)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------
struct FoldOutcome {
    std::uint64_t seed;
    double hr;
    double ndcg;
};

int cmd_eval(const RunConfig& rc, const std::string& model_path, bool csv) {
    require_file(model_path, "model file");
    LoadedModel loaded = load_model(model_path);
    auto sequences = load_dataset(rc);

    const bool coldstart = rc.slices == "coldstart";
    if (!rc.slices.empty() && !coldstart)
        throw std::runtime_error("unknown --slices mode: " + rc.slices);

    EvalReport report;
    report.K = rc.K;
    report.folds = std::max<std::size_t>(1, rc.folds);

    std::vector<double> hr_folds, ndcg_folds;
    std::map<std::string, std::vector<double>> slice_hr, slice_ndcg, slice_pairs;

    auto accumulate_slices = [&](const EmbeddingModel& model, const std::vector<IdPair>& pairs,
                                 const std::vector<Session>& train_sessions,
                                 std::uint32_t window) {
        auto slices = coldstart_slices(pairs, train_sessions, window);
        auto record = [&](const std::string& label, const std::vector<IdPair>& subset) {
            slice_pairs[label].push_back(double(subset.size()));
            if (subset.empty()) return;
            auto s = evaluate(model, subset, rc.K, rc.resolved_threads());
            slice_hr[label].push_back(s.hr);
            slice_ndcg[label].push_back(s.ndcg);
        };
        record("pair_freq=0", slices.zero);
        record("pair_freq<3", slices.below);
    };

    if (report.folds == 1) {
        // evaluate the stored model as-is on one fresh pair sample
        SplitCorpus split = split_nep(sequences, [&] {
            std::unordered_map<std::string, ItemId> index;
            for (std::size_t i = 0; i < loaded.tokens.size(); ++i)
                index.emplace(loaded.tokens[i], static_cast<ItemId>(i));
            return index;
        }());
        EvalSplit eval_split = sample_eval_split(split, rc.pairs, mix_seed(rc.seed, 0xe7a1ULL, 0));
        if (eval_split.test_pairs.empty())
            throw std::runtime_error("no evaluation pairs available (need >= 2 holdout pairs)");
        auto scores = evaluate(loaded.model, eval_split.test_pairs, rc.K, rc.resolved_threads());
        hr_folds.push_back(scores.hr);
        ndcg_folds.push_back(scores.ndcg);
        if (coldstart)
            accumulate_slices(loaded.model, eval_split.test_pairs, split.train_sessions,
                              loaded.hp.window);
    } else {
        // each fold: fresh training seed + fresh pair sample, config from the
        // model header, vocabulary rebuilt from this dataset
        Vocabulary vocab = build_vocabulary(sequences, rc.min_count);
        SplitCorpus split = split_nep(sequences, vocab);
        for (std::size_t fold = 0; fold < report.folds; ++fold) {
            Hyperparameters hp = loaded.hp;
            hp.seed = mix_seed(rc.seed, 0xf01dULL, fold);
            hp.threads = rc.resolved_threads();
            EvalSplit eval_split =
                sample_eval_split(split, rc.pairs, mix_seed(rc.seed, 0xe7a1ULL, fold));
            if (eval_split.test_pairs.empty())
                throw std::runtime_error("no evaluation pairs available (need >= 2 holdout pairs)");
            auto [model, train_report] = train(split, vocab, hp);
            auto scores = evaluate(model, eval_split.test_pairs, rc.K, rc.resolved_threads());
            hr_folds.push_back(scores.hr);
            ndcg_folds.push_back(scores.ndcg);
            if (coldstart)
                accumulate_slices(model, eval_split.test_pairs, split.train_sessions, hp.window);
            std::cout << "fold " << fold + 1 << "/" << report.folds << ": hr=" << scores.hr
                      << " ndcg=" << scores.ndcg << '\n';
        }
    }

    report.hr = MetricSummary::from_folds(hr_folds);
    report.ndcg = MetricSummary::from_folds(ndcg_folds);
    if (coldstart) {
        for (const auto& [label, counts] : slice_pairs) {
            SliceSummary s;
            double total = 0.0;
            for (double c : counts) total += c;
            s.mean_pair_count = total / double(counts.size());
            if (slice_hr.count(label)) {
                s.hr = MetricSummary::from_folds(slice_hr[label]);
                s.ndcg = MetricSummary::from_folds(slice_ndcg[label]);
            }
            report.slices[label] = s;
        }
    }

    json j = to_json(report);
    j["model"] = model_path;
    j["data"] = rc.data;
    j["pairs_requested"] = rc.pairs;
    j["seed"] = rc.seed;

    fs::create_directories(rc.out);
    write_json_file(fs::path(rc.out) / "eval_report.json", j);
    if (csv) {
        std::ostringstream out;
        out.precision(12);
        out << "fold,hr,ndcg\n";
        for (std::size_t i = 0; i < hr_folds.size(); ++i)
            out << i << ',' << hr_folds[i] << ',' << ndcg_folds[i] << '\n';
        write_text_file(fs::path(rc.out) / "eval_folds.csv", out.str());
    }

    std::cout << "hr@" << rc.K << " = " << report.hr.mean;
    if (report.folds >= 2) std::cout << " +/- " << report.hr.ci95;
    std::cout << ", ndcg@" << rc.K << " = " << report.ndcg.mean;
    if (report.folds >= 2) std::cout << " +/- " << report.ndcg.ci95;
    std::cout << " (" << report.folds << " fold" << (report.folds > 1 ? "s" : "") << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------
int cmd_grid(const RunConfig& rc, const std::string& preset, const std::string& grid_file,
             std::optional<std::size_t> budget, bool resume, unsigned trial_jobs) {
    if (preset.empty() == grid_file.empty()) {
        std::cerr << "seq2vec: grid needs exactly one of --preset or --grid\n";
        return kExitUsage;
    }
    GridSpec spec;
    if (!preset.empty()) {
        spec = grid_preset(preset);
    } else {
        require_file(grid_file, "grid spec file");
        spec = load_grid_spec(grid_file);
    }

    auto sequences = load_dataset(rc);
    Vocabulary vocab = build_vocabulary(sequences, rc.min_count);
    SplitCorpus split = split_nep(sequences, vocab);
    EvalSplit eval_split = sample_eval_split(split, rc.pairs, mix_seed(rc.seed, 0xe7a1ULL, 0));
    if (eval_split.validation_pairs.empty())
        throw std::runtime_error("no evaluation pairs available (need >= 2 holdout pairs)");

    fs::create_directories(rc.out);
    SearchOptions options;
    options.results_path = (fs::path(rc.out) / "results.jsonl").string();
    options.budget = budget;
    options.resume = resume;
    options.base_seed = rc.seed;
    options.jobs = trial_jobs ? trial_jobs : rc.resolved_threads();
    options.K = rc.K;

    std::cout << "grid: " << spec.size() << " configurations, "
              << eval_split.validation_pairs.size() << " validation pairs, jobs "
              << options.jobs << '\n';
    auto results = run_search(spec, split, vocab, eval_split, options);
    std::cout << "sweep finished: " << results.size() << " trial records in "
              << options.results_path << '\n';

    const TrialResult& best = select_best(results);

    // test metrics only for the selected configuration
    TrialResult selected = best;
    {
        Hyperparameters hp = best.hp;
        hp.seed = best.seed;
        hp.threads = 1;
        auto [model, train_report] = train(split, vocab, hp);
        auto scores = evaluate(model, eval_split.test_pairs, rc.K, rc.resolved_threads());
        selected.test_hr = scores.hr;
        selected.test_ndcg = scores.ndcg;
    }

    json bj;
    bj["best"] = to_json(selected);
    bj["grid_size"] = spec.size();
    bj["trials"] = results.size();
    bj["K"] = rc.K;
    bj["validation_pairs"] = eval_split.validation_pairs.size();
    bj["test_pairs"] = eval_split.test_pairs.size();
    bj["seed"] = rc.seed;
    bj["preset"] = preset.empty() ? json() : json(preset);
    bj["data"] = rc.data;
    write_json_file(fs::path(rc.out) / "best_config.json", bj);

    write_text_file(fs::path(rc.out) / "alpha_profile.csv",
                    alpha_profile_csv(alpha_profile(results)));

    std::cout << "best config (validation hr@" << rc.K << " = " << best.val_hr << "): "
              << hp_to_json(best.hp).dump() << '\n';
    std::cout << "test hr@" << rc.K << " = " << *selected.test_hr << ", ndcg@" << rc.K << " = "
              << *selected.test_ndcg << '\n';
    std::cout << format_comparison_table(build_comparison(results), rc.K);
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------
int cmd_report(const std::string& results_path, const std::string& csv_path, std::size_t K) {
    require_file(results_path, "results file");
    auto results = load_results(results_path);
    auto rows = build_comparison(results);
    for (const auto& row : rows) {
        if (!row.trial && row.label == "out-of-the-box")
            std::cerr << "seq2vec: warning: sweep does not contain the default configuration\n";
    }
    std::cout << format_comparison_table(rows, K);
    if (!csv_path.empty()) write_text_file(csv_path, comparison_csv(rows, K));
    return 0;
}

// ---------------------------------------------------------------------------
// histogram
// ---------------------------------------------------------------------------
int cmd_histogram(const RunConfig& rc, const std::string& out_path) {
    auto sequences = load_dataset(rc);
    Vocabulary vocab = build_vocabulary(sequences, rc.min_count);
    std::ostringstream out;
    out.precision(12);
    out << "rank,log_count\n";
    for (const auto& [rank, log_count] : count_histogram(vocab))
        out << rank << ',' << log_count << '\n';
    if (out_path.empty())
        std::cout << out.str();
    else
        write_text_file(out_path, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seq2vec: SGNS item embeddings with next-event-prediction evaluation"};
    app.require_subcommand(1);

    Flags train_flags, eval_flags, grid_flags, hist_flags;
    bool full_sessions = false, text_model = false, eval_csv = false, resume = false;
    std::string model_path, results_path, report_csv, preset, grid_file, hist_out;
    std::optional<std::size_t> budget;
    unsigned trial_jobs = 0;
    std::size_t report_K = 10;

    auto* train_cmd = app.add_subcommand("train", "train one embedding model");
    train_flags.add_common(train_cmd);
    train_flags.add_hyper(train_cmd);
    train_cmd->add_option("--meta", train_flags.meta, "side-info TSV (item<TAB>meta)");
    train_cmd->add_option("--lambda", train_flags.lambda, "weight of meta-involving updates");
    train_cmd->add_flag("--full-sessions", full_sessions,
                        "train on complete sessions instead of the next-event train split");
    train_cmd->add_flag("--text-model", text_model, "also write the text-format model");

    auto* eval_cmd = app.add_subcommand("eval", "next-event-prediction evaluation");
    eval_cmd->add_option("--model", model_path, "model file produced by train")->required();
    eval_flags.add_common(eval_cmd);
    eval_flags.add_eval(eval_cmd);
    eval_cmd->add_flag("--csv", eval_csv, "also write per-fold CSV rows");

    auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search");
    grid_flags.add_common(grid_cmd);
    grid_flags.add_eval(grid_cmd);
    grid_cmd->add_option("--preset", preset, "bundled grid: paper-full, paper-4hp, desk");
    grid_cmd->add_option("--grid", grid_file, "grid spec JSON file");
    grid_cmd->add_option("--budget", budget, "max trials to run this invocation");
    grid_cmd->add_flag("--resume", resume, "skip configurations already in results.jsonl");
    grid_cmd->add_option("--trial-jobs", trial_jobs, "concurrent trials (default: threads)");

    auto* report_cmd = app.add_subcommand("report", "comparison table from sweep results");
    report_cmd->add_option("--results", results_path, "results.jsonl from grid")->required();
    report_cmd->add_option("--csv", report_csv, "also write the table as CSV");
    report_cmd->add_option("--K", report_K, "K used in the sweep (labels only)");

    auto* hist_cmd = app.add_subcommand("histogram", "rank / log-count export");
    hist_flags.add_common(hist_cmd);
    hist_cmd->add_option("--histogram-out", hist_out, "CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_flags.merge(), full_sessions, text_model);
        if (eval_cmd->parsed()) return cmd_eval(eval_flags.merge(), model_path, eval_csv);
        if (grid_cmd->parsed())
            return cmd_grid(grid_flags.merge(), preset, grid_file, budget, resume, trial_jobs);
        if (report_cmd->parsed()) return cmd_report(results_path, report_csv, report_K);
        if (hist_cmd->parsed()) return cmd_histogram(hist_flags.merge(), hist_out);
    } catch (const std::exception& e) {
        std::cerr << "seq2vec: error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
