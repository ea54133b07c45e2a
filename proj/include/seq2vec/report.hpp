#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seq2vec/search.hpp"

namespace seq2vec {

// ---------------------------------------------------------------------------
// Comparison report over a finished sweep: the stock configuration, the best
// configuration found with alpha pinned to its stock value, and the overall
// best. Shows how much of the gain comes from tuning alpha.
// ---------------------------------------------------------------------------
struct ComparisonRow {
    std::string label;
    std::optional<TrialResult> trial;  // empty when the sweep lacks the config
};

inline std::vector<ComparisonRow> build_comparison(const std::vector<TrialResult>& results,
                                                   Hyperparameters defaults = {}) {
    std::vector<ComparisonRow> rows(3);
    rows[0].label = "out-of-the-box";
    rows[1].label = "optimized (alpha fixed)";
    rows[2].label = "fully optimized";

    for (const auto& r : results) {
        if (r.done && same_grid_point(r.hp, defaults)) {
            rows[0].trial = r;
            break;
        }
    }
    std::vector<TrialResult> alpha_fixed;
    for (const auto& r : results)
        if (r.hp.alpha == defaults.alpha) alpha_fixed.push_back(r);
    if (!alpha_fixed.empty()) {
        bool any_done = false;
        for (const auto& r : alpha_fixed) any_done |= r.done;
        if (any_done) rows[1].trial = select_best(alpha_fixed);
    }
    bool any_done = false;
    for (const auto& r : results) any_done |= r.done;
    if (any_done) rows[2].trial = select_best(results);
    return rows;
}

namespace detail {

inline std::string hp_tuple(const Hyperparameters& hp) {
    std::ostringstream s;
    s << '(' << hp.window << ',' << hp.epochs << ',' << hp.subsample << ',' << hp.alpha << ')';
    return s.str();
}

}  // namespace detail

// Fixed-width text table. HR is shown x100 with two decimals, NDCG raw with
// three; the (L,n,t,alpha) tuple identifies the configuration.
inline std::string format_comparison_table(const std::vector<ComparisonRow>& rows,
                                           std::size_t K = 10) {
    std::ostringstream out;
    out << std::left << std::setw(26) << "model" << std::right << std::setw(10)
        << ("HR@" + std::to_string(K)) << std::setw(12) << ("NDCG@" + std::to_string(K))
        << "  (L,n,t,alpha)\n";
    for (const auto& row : rows) {
        out << std::left << std::setw(26) << row.label;
        if (!row.trial) {
            out << std::right << std::setw(10) << "-" << std::setw(12) << "-"
                << "  (not in results)\n";
            continue;
        }
        out << std::right << std::setw(10) << std::fixed << std::setprecision(2)
            << row.trial->val_hr * 100.0 << std::setw(12) << std::setprecision(3)
            << row.trial->val_ndcg << "  " << detail::hp_tuple(row.trial->hp) << '\n';
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows, std::size_t K = 10) {
    std::ostringstream out;
    out.precision(12);
    out << "model,hr@" << K << ",ndcg@" << K << ",window,epochs,subsample,alpha\n";
    for (const auto& row : rows) {
        if (!row.trial) continue;
        const auto& t = *row.trial;
        out << row.label << ',' << t.val_hr << ',' << t.val_ndcg << ',' << t.hp.window << ','
            << t.hp.epochs << ',' << t.hp.subsample << ',' << t.hp.alpha << '\n';
    }
    return out.str();
}

}  // namespace seq2vec
