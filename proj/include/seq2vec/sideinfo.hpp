#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2vec/corpus.hpp"

namespace seq2vec {

// ---------------------------------------------------------------------------
// SideInfoMap: item -> metadata token (e.g. track -> artist). Meta tokens are
// appended to the vocabulary index space, [item_count, item_count + meta
// count), so the two ranges never collide and predictions can be restricted
// to the item range.
// ---------------------------------------------------------------------------
struct SideInfoMap {
    ItemId item_count = 0;
    std::vector<std::string> meta_tokens;               // offset -> token
    std::vector<std::optional<ItemId>> meta_of_item;    // item -> extended index
    double lambda = 1.0;                                // weight of meta-involving updates
    std::size_t skipped_rows = 0;                       // rows naming OOV items

    std::size_t meta_count() const { return meta_tokens.size(); }
    std::size_t extended_size() const { return item_count + meta_tokens.size(); }

    std::optional<ItemId> meta_of(ItemId item) const {
        if (item >= meta_of_item.size()) return std::nullopt;
        return meta_of_item[item];
    }
};

// Loads a UTF-8 TSV of `item<TAB>meta` rows. Rows whose item is not in the
// vocabulary are skipped (counted); a later row for the same item wins. Meta
// indices are assigned lexicographically so the map is independent of row
// order.
inline SideInfoMap load_side_info(const std::string& path, const Vocabulary& vocab,
                                  double lambda = 1.0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open side-info file: " + path);
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");

    SideInfoMap side;
    side.item_count = static_cast<ItemId>(vocab.size());
    side.lambda = lambda;
    side.meta_of_item.assign(vocab.size(), std::nullopt);

    std::vector<std::string> meta_token_of_item(vocab.size());
    std::map<std::string, ItemId> meta_index;  // ordered: lexicographic assignment

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw std::runtime_error("malformed side-info row at line " + std::to_string(line_no) +
                                     " (expected item<TAB>meta)");
        std::string item = line.substr(0, tab);
        std::string meta = line.substr(tab + 1);
        auto idx = vocab.index_of(item);
        if (!idx) {
            ++side.skipped_rows;
            continue;
        }
        meta_token_of_item[*idx] = meta;
        meta_index.emplace(meta, 0);
    }

    ItemId next = side.item_count;
    for (auto& [token, id] : meta_index) id = next++;
    side.meta_tokens.reserve(meta_index.size());
    for (const auto& [token, id] : meta_index) side.meta_tokens.push_back(token);

    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (!meta_token_of_item[i].empty())
            side.meta_of_item[i] = meta_index.at(meta_token_of_item[i]);
    return side;
}

// One training pair; weight scales the learning rate of its update.
struct WeightedPair {
    ItemId center;
    ItemId context;
    double weight;
};

// Expands a (center, contexts) window into the side-info training pairs:
// the item pairs at weight 1, then (center -> meta(context)),
// (meta(center) -> context) and (center -> meta(center)) at weight lambda.
// Pairs whose meta side does not exist are simply not emitted.
inline std::vector<WeightedPair> augment_pairs(ItemId center, const std::vector<ItemId>& contexts,
                                               const SideInfoMap& side) {
    std::vector<WeightedPair> pairs;
    pairs.reserve(contexts.size() * 3 + 1);
    for (ItemId c : contexts) pairs.push_back({center, c, 1.0});

    const double lambda = side.lambda;
    for (ItemId c : contexts)
        if (auto m = side.meta_of(c)) pairs.push_back({center, *m, lambda});
    if (auto mc = side.meta_of(center)) {
        for (ItemId c : contexts) pairs.push_back({*mc, c, lambda});
        pairs.push_back({center, *mc, lambda});
    }
    return pairs;
}

}  // namespace seq2vec
