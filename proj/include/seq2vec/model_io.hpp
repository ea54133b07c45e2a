#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2vec/sgns.hpp"

namespace seq2vec {

inline constexpr const char* kModelMagic = "SEQ2VEC1";

namespace detail {

inline void write_f32_le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    char b[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff),
                 char((bits >> 24) & 0xff)};
    out.write(b, 4);
}

inline float read_f32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t bits = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary model format: a text header (magic line, key=value lines, an
// end_header terminator), the vocabulary tokens one per line, then the W rows
// as little-endian 32-bit floats. Only the item rows are written; the context
// matrix and any metadata rows are training-time state.
// ---------------------------------------------------------------------------
inline void save_model(const std::string& path, const EmbeddingModel& model,
                       const std::vector<std::string>& tokens, const Hyperparameters& hp) {
    if (tokens.size() != model.item_count)
        throw std::invalid_argument("token list does not match model item count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);

    out << kModelMagic << '\n';
    out << "vocab_size=" << model.item_count << '\n';
    out << "dim=" << model.dim << '\n';
    out << "window=" << hp.window << '\n';
    out << "epochs=" << hp.epochs << '\n';
    out << "subsample=" << detail::format_double(hp.subsample) << '\n';
    out << "alpha=" << detail::format_double(hp.alpha) << '\n';
    out << "negatives=" << hp.negatives << '\n';
    out << "lr0=" << detail::format_double(hp.lr0) << '\n';
    out << "lr_min=" << detail::format_double(hp.lr_min) << '\n';
    out << "seed=" << hp.seed << '\n';
    out << "end_header\n";
    for (const auto& t : tokens) out << t << '\n';

    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(model.input.data()),
                  std::streamsize(std::size_t(model.item_count) * model.dim * sizeof(float)));
    } else {
        for (std::size_t i = 0; i < std::size_t(model.item_count) * model.dim; ++i)
            detail::write_f32_le(out, model.input[i]);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct LoadedModel {
    EmbeddingModel model;  // W only; context is empty
    std::vector<std::string> tokens;
    Hyperparameters hp;
};

inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);

    std::string line;
    if (!std::getline(in, line) || line != kModelMagic)
        throw std::runtime_error("not a " + std::string(kModelMagic) + " model file: " + path);

    LoadedModel loaded;
    std::uint32_t vocab_size = 0, dim = 0;
    bool have_vocab = false, have_dim = false;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed model header line: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "vocab_size") {
            vocab_size = static_cast<std::uint32_t>(std::stoul(value));
            have_vocab = true;
        } else if (key == "dim") {
            dim = static_cast<std::uint32_t>(std::stoul(value));
            have_dim = true;
        } else if (key == "window") {
            loaded.hp.window = static_cast<std::uint32_t>(std::stoul(value));
        } else if (key == "epochs") {
            loaded.hp.epochs = static_cast<std::uint32_t>(std::stoul(value));
        } else if (key == "subsample") {
            loaded.hp.subsample = std::stod(value);
        } else if (key == "alpha") {
            loaded.hp.alpha = std::stod(value);
        } else if (key == "negatives") {
            loaded.hp.negatives = static_cast<std::uint32_t>(std::stoul(value));
        } else if (key == "lr0") {
            loaded.hp.lr0 = std::stod(value);
        } else if (key == "lr_min") {
            loaded.hp.lr_min = std::stod(value);
        } else if (key == "seed") {
            loaded.hp.seed = std::stoull(value);
        }
        // unknown keys are ignored for forward compatibility
    }
    if (!have_vocab || !have_dim)
        throw std::runtime_error("model header missing vocab_size or dim: " + path);
    loaded.hp.dim = dim;

    loaded.tokens.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("model file truncated in vocabulary section: " + path);
        loaded.tokens.push_back(line);
    }

    loaded.model.dim = dim;
    loaded.model.item_count = vocab_size;
    loaded.model.row_count = vocab_size;
    loaded.model.input.resize(std::size_t(vocab_size) * dim);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(loaded.model.input.data()),
                std::streamsize(std::size_t(vocab_size) * dim * sizeof(float)));
        if (in.gcount() != std::streamsize(std::size_t(vocab_size) * dim * sizeof(float)))
            throw std::runtime_error("model file truncated in weight section: " + path);
    } else {
        for (std::size_t i = 0; i < std::size_t(vocab_size) * dim; ++i)
            loaded.model.input[i] = detail::read_f32_le(in);
        if (!in) throw std::runtime_error("model file truncated in weight section: " + path);
    }
    return loaded;
}

// Text interchange format: one `token v1 .. vd` line per item.
inline void save_model_text(const std::string& path, const EmbeddingModel& model,
                            const std::vector<std::string>& tokens) {
    if (tokens.size() != model.item_count)
        throw std::invalid_argument("token list does not match model item count");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model.item_count << ' ' << model.dim << '\n';
    out.precision(9);
    for (std::uint32_t i = 0; i < model.item_count; ++i) {
        out << tokens[i];
        for (float v : model.input_row(i)) out << ' ' << v;
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace seq2vec
