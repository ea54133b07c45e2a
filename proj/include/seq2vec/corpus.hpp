#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seq2vec/rng.hpp"

namespace seq2vec {

using ItemId = std::uint32_t;
using Session = std::vector<ItemId>;
using IdPair = std::pair<ItemId, ItemId>;  // (query, target)

// ---------------------------------------------------------------------------
// Vocabulary: token <-> index bijection with raw counts. Indices are assigned
// in descending count order, ties broken by lexicographic token order, so
// index 0 is always the most frequent item.
// ---------------------------------------------------------------------------
struct Vocabulary {
    std::vector<std::string> tokens;             // index -> token
    std::unordered_map<std::string, ItemId> index;  // token -> index
    std::vector<std::int64_t> counts;            // index -> raw occurrence count
    std::int64_t total_count = 0;

    std::size_t size() const { return tokens.size(); }

    const std::string& token_of(ItemId i) const { return tokens.at(i); }

    std::optional<ItemId> index_of(const std::string& token) const {
        auto it = index.find(token);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }

    // Relative frequency f(c) of item c among retained tokens.
    double freq(ItemId i) const {
        return static_cast<double>(counts.at(i)) / static_cast<double>(total_count);
    }
};

enum class CorpusFormat { lines, csv_retail, csv_events };

inline CorpusFormat parse_format(const std::string& name) {
    if (name == "lines") return CorpusFormat::lines;
    if (name == "csv_retail") return CorpusFormat::csv_retail;
    if (name == "csv_events") return CorpusFormat::csv_events;
    throw std::invalid_argument("unknown corpus format: " + name);
}

// Column mapping for the CSV loaders; empty fields fall back to the
// per-format defaults below.
struct CsvColumns {
    std::string session;
    std::string item;
    std::string time;
};

inline CsvColumns default_csv_columns(CorpusFormat format) {
    if (format == CorpusFormat::csv_retail) return {"InvoiceNo", "StockCode", "InvoiceDate"};
    return {"session_id", "item_id", "timestamp"};
}

namespace detail {

// RFC4180-ish single-line field splitter (quoted fields, "" escapes).
inline std::vector<std::string> split_csv_row(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (quoted) {
        throw std::runtime_error("malformed CSV row (unterminated quote) at line " +
                                 std::to_string(line_no));
    }
    fields.push_back(std::move(cur));
    return fields;
}

// Sortable key for a timestamp field. Tries a plain number first, then the
// datetime layouts seen in the retail/event dumps this tool ingests.
inline std::optional<double> time_key(const std::string& s) {
    if (s.empty()) return std::nullopt;
    {
        std::size_t pos = 0;
        try {
            double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    static const char* formats[] = {
        "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d",
        "%m/%d/%Y %H:%M:%S", "%m/%d/%Y %H:%M",    "%m/%d/%Y",
    };
    for (const char* fmt : formats) {
        std::tm tm{};
        std::istringstream in(s);
        in >> std::get_time(&tm, fmt);
        if (!in.fail()) {
            // days-since-epoch style key; fine for ordering
            double key = ((tm.tm_year * 12.0 + tm.tm_mon) * 31.0 + tm.tm_mday) * 86400.0 +
                         tm.tm_hour * 3600.0 + tm.tm_min * 60.0 + tm.tm_sec;
            return key;
        }
    }
    return std::nullopt;
}

inline std::vector<std::vector<std::string>> load_lines(std::istream& in) {
    std::vector<std::vector<std::string>> sessions;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> items;
        std::size_t start = 0;
        while (start < line.size()) {
            std::size_t end = line.find(' ', start);
            if (end == std::string::npos) end = line.size();
            if (end > start) items.emplace_back(line.substr(start, end - start));
            start = end + 1;
        }
        if (!items.empty()) sessions.push_back(std::move(items));
    }
    return sessions;
}

inline std::vector<std::vector<std::string>> load_csv(std::istream& in, const CsvColumns& cols) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw std::runtime_error("empty CSV file");
    auto header = split_csv_row(header_line, 1);

    auto column_at = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error("CSV header has no column named '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t session_col = column_at(cols.session);
    const std::size_t item_col = column_at(cols.item);
    const std::size_t time_col = column_at(cols.time);

    struct Row {
        std::string item;
        double time;
        std::size_t input_order;
    };
    std::vector<std::string> session_order;               // first-appearance order
    std::unordered_map<std::string, std::vector<Row>> by_session;

    bool lexicographic_time = false;
    std::vector<std::pair<std::string, std::string>> raw_times;  // (session, raw) if needed

    std::string line;
    std::size_t line_no = 1;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_row(line, line_no);
        if (fields.size() != header.size()) {
            throw std::runtime_error("malformed CSV row (expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()) + ") at line " +
                                     std::to_string(line_no));
        }
        const std::string& session = fields[session_col];
        const std::string& item = fields[item_col];
        const std::string& time = fields[time_col];
        if (session.empty() || item.empty()) continue;  // incomplete row, skip

        auto key = time_key(time);
        if (!key && !lexicographic_time) lexicographic_time = true;

        auto [it, inserted] = by_session.try_emplace(session);
        if (inserted) session_order.push_back(session);
        it->second.push_back(Row{item, key.value_or(0.0), row_index});
        raw_times.emplace_back(session, time);
        ++row_index;
    }

    std::vector<std::vector<std::string>> sessions;
    sessions.reserve(session_order.size());
    for (const auto& sid : session_order) {
        auto& rows = by_session[sid];
        if (lexicographic_time) {
            // at least one unparseable timestamp: order the whole file by the
            // raw strings so the rule stays uniform
            std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
                return raw_times[a.input_order].second < raw_times[b.input_order].second;
            });
        } else {
            std::stable_sort(rows.begin(), rows.end(),
                             [](const Row& a, const Row& b) { return a.time < b.time; });
        }
        std::vector<std::string> items;
        items.reserve(rows.size());
        for (auto& r : rows) items.push_back(std::move(r.item));
        sessions.push_back(std::move(items));
    }
    return sessions;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// load_sessions: one token sequence per user/session, order preserved.
// ---------------------------------------------------------------------------
inline std::vector<std::vector<std::string>> load_sessions(
    const std::string& path, CorpusFormat format, const CsvColumns* columns = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::vector<std::vector<std::string>> sessions;
    if (format == CorpusFormat::lines) {
        sessions = detail::load_lines(in);
    } else {
        CsvColumns cols = default_csv_columns(format);
        if (columns) {
            if (!columns->session.empty()) cols.session = columns->session;
            if (!columns->item.empty()) cols.item = columns->item;
            if (!columns->time.empty()) cols.time = columns->time;
        }
        sessions = detail::load_csv(in, cols);
    }
    if (sessions.empty()) throw std::runtime_error("no sessions found in " + path);
    return sessions;
}

// ---------------------------------------------------------------------------
// build_vocabulary: count tokens, drop those under min_count, assign indices
// by (count desc, token asc).
// ---------------------------------------------------------------------------
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sequences,
                                   std::int64_t min_count = 1) {
    if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

    std::unordered_map<std::string, std::int64_t> raw;
    for (const auto& seq : sequences)
        for (const auto& tok : seq) ++raw[tok];

    std::vector<std::pair<std::string, std::int64_t>> retained;
    retained.reserve(raw.size());
    for (auto& [tok, n] : raw)
        if (n >= min_count) retained.emplace_back(tok, n);
    if (retained.empty()) throw std::runtime_error("vocabulary is empty after min_count filter");

    std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.tokens.reserve(retained.size());
    vocab.counts.reserve(retained.size());
    for (std::size_t i = 0; i < retained.size(); ++i) {
        vocab.tokens.push_back(retained[i].first);
        vocab.counts.push_back(retained[i].second);
        vocab.index.emplace(retained[i].first, static_cast<ItemId>(i));
        vocab.total_count += retained[i].second;
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// SplitCorpus: per-session train prefix plus the held-out final transition.
// ---------------------------------------------------------------------------
struct SplitCorpus {
    struct HoldoutPair {
        ItemId query;
        ItemId target;
        std::size_t session_id;  // index into the original sequence list
    };
    std::vector<Session> train_sessions;
    std::vector<HoldoutPair> holdout_pairs;
};

// OOV tokens are removed before the prefix/pair split, so every holdout
// query is guaranteed to be a trained item.
inline SplitCorpus split_nep(const std::vector<std::vector<std::string>>& sequences,
                             const std::unordered_map<std::string, ItemId>& index_of) {
    SplitCorpus split;
    for (std::size_t sid = 0; sid < sequences.size(); ++sid) {
        Session filtered;
        filtered.reserve(sequences[sid].size());
        for (const auto& tok : sequences[sid]) {
            auto it = index_of.find(tok);
            if (it != index_of.end()) filtered.push_back(it->second);
        }
        if (filtered.empty()) continue;
        if (filtered.size() == 1) {
            split.train_sessions.push_back(std::move(filtered));
            continue;
        }
        ItemId target = filtered.back();
        filtered.pop_back();
        split.holdout_pairs.push_back({filtered.back(), target, sid});
        split.train_sessions.push_back(std::move(filtered));
    }
    if (split.holdout_pairs.empty())
        throw std::runtime_error("no holdout pairs (every session too short): evaluation impossible");
    return split;
}

inline SplitCorpus split_nep(const std::vector<std::vector<std::string>>& sequences,
                             const Vocabulary& vocab) {
    return split_nep(sequences, vocab.index);
}

// ---------------------------------------------------------------------------
// EvalSplit: disjoint test / validation pair samples.
// ---------------------------------------------------------------------------
struct EvalSplit {
    std::vector<IdPair> validation_pairs;
    std::vector<IdPair> test_pairs;
    std::uint64_t fold_seed = 0;
};

// Draws min(n_pairs, available/2) pairs for each of test and validation,
// uniformly without replacement and disjoint from each other.
inline EvalSplit sample_eval_split(const SplitCorpus& split, std::size_t n_pairs,
                                   std::uint64_t seed) {
    if (n_pairs == 0) throw std::invalid_argument("n_pairs must be positive");
    const std::size_t avail = split.holdout_pairs.size();
    const std::size_t m = std::min(n_pairs, avail / 2);

    std::vector<std::size_t> order(avail);
    for (std::size_t i = 0; i < avail; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = avail; i > 1; --i) {  // Fisher-Yates
        std::size_t j = uniform_below(rng, i);
        std::swap(order[i - 1], order[j]);
    }

    EvalSplit out;
    out.fold_seed = seed;
    out.test_pairs.reserve(m);
    out.validation_pairs.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& p = split.holdout_pairs[order[i]];
        out.test_pairs.emplace_back(p.query, p.target);
    }
    for (std::size_t i = m; i < 2 * m; ++i) {
        const auto& p = split.holdout_pairs[order[i]];
        out.validation_pairs.emplace_back(p.query, p.target);
    }
    return out;
}

// ---------------------------------------------------------------------------
// count_histogram: (rank, ln count) rows, most frequent first. Vocabulary
// indices are already count-ordered, so rank == index.
// ---------------------------------------------------------------------------
inline std::vector<std::pair<std::size_t, double>> count_histogram(const Vocabulary& vocab) {
    if (vocab.size() == 0) throw std::invalid_argument("empty vocabulary");
    std::vector<std::pair<std::size_t, double>> rows;
    rows.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i)
        rows.emplace_back(i, std::log(static_cast<double>(vocab.counts[i])));
    return rows;
}

}  // namespace seq2vec
