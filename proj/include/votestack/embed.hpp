#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "votestack/common.hpp"

namespace votestack {

// Fixed-length index encoding of one token sequence. Positions at and past
// true_length hold the PAD index.
struct EncodedSequence {
    std::vector<std::int32_t> indices;
    int true_length = 0;

    int max_len() const { return static_cast<int>(indices.size()); }
};

// Pre-trained embedding lookup table. Row 0 is PAD (all zeros, never
// trained), row 1 is OOV (mean of all loaded vectors), vocabulary rows start
// at 2. The matrix is row-major so per-token rows are contiguous.
template <typename Scalar = float>
struct EmbeddingTable {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kOov = 1;

    std::unordered_map<std::string, std::int32_t> vocab;  // token -> row index >= 2
    Matrix matrix;                                        // (|vocab| + 2) x dim
    int dim = 0;
    std::string file_hash;  // content hash of the source file

    std::int32_t row_of(const std::string& token) const {
        auto it = vocab.find(token);
        return it == vocab.end() ? kOov : it->second;
    }
};

namespace detail {

// Splits on single spaces/tabs; empty fields from repeated separators are
// skipped, matching how the published .vec files pad lines.
inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start < line.size()) {
        while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
        std::size_t end = start;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        if (end > start) fields.push_back(line.substr(start, end - start));
        start = end;
    }
    return fields;
}

inline bool parse_long(std::string_view s, long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// Loads the word2vec/fastText text format: a `<vocab_size> <dim>` header
// followed by `<token> <v1> ... <v_dim>` lines. At most vocab_size data
// lines are consumed; duplicate tokens keep their first occurrence.
template <typename Scalar = float>
EmbeddingTable<Scalar> load_embeddings(const std::string& path) {
    std::string content = read_file(path);
    if (content.empty()) {
        throw FormatError(path + ": empty embedding file");
    }

    EmbeddingTable<Scalar> table;
    table.file_hash = hex64(fnv1a64(content.data(), content.size()));

    std::size_t pos = 0;
    long line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= content.size()) return false;
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        line = std::string_view(content).substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view header;
    next_line(header);
    auto header_fields = detail::split_fields(header);
    long vocab_size = 0, dim = 0;
    if (header_fields.size() != 2 || !detail::parse_long(header_fields[0], vocab_size) ||
        !detail::parse_long(header_fields[1], dim) || vocab_size < 0) {
        throw FormatError(path + ": line 1: expected header `<vocab_size> <dim>`");
    }
    if (dim <= 0) {
        throw ArgumentError(path + ": embedding dimension must be positive, got " +
                            std::to_string(dim));
    }
    table.dim = static_cast<int>(dim);

    std::vector<std::string> tokens;
    std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> rows;
    std::string_view line;
    while (static_cast<long>(rows.size()) < vocab_size && next_line(line)) {
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (static_cast<long>(fields.size()) != dim + 1) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                              std::to_string(dim + 1) + " fields, got " +
                              std::to_string(fields.size()));
        }
        std::string token(fields[0]);
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row(dim);
        for (long j = 0; j < dim; ++j) {
            double value = 0;
            if (!detail::parse_double(fields[static_cast<std::size_t>(j + 1)], value)) {
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": unparsable vector value");
            }
            row(j) = static_cast<Scalar>(value);
        }
        if (table.vocab.count(token)) continue;  // keep first occurrence
        table.vocab.emplace(std::move(token), static_cast<std::int32_t>(rows.size()) + 2);
        rows.push_back(std::move(row));
    }

    table.matrix.setZero(static_cast<Eigen::Index>(rows.size()) + 2, dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table.matrix.row(static_cast<Eigen::Index>(r) + 2) = rows[r];
    }
    if (!rows.empty()) {
        table.matrix.row(EmbeddingTable<Scalar>::kOov) =
            table.matrix.bottomRows(static_cast<Eigen::Index>(rows.size())).colwise().mean();
    }
    return table;
}

enum class TruncationSide { Tail, Head };

// Maps tokens to embedding rows (vocab row or OOV) and pads with PAD up to
// max_len. Longer sequences lose their tail by default (sentiment cues
// cluster early in short social-media texts); Head keeps the last max_len
// tokens instead.
template <typename Scalar>
EncodedSequence encode_sequence(const std::vector<std::string>& tokens,
                                const EmbeddingTable<Scalar>& table, int max_len,
                                TruncationSide truncation = TruncationSide::Tail) {
    if (max_len < 1) {
        throw ArgumentError("max_len must be at least 1, got " + std::to_string(max_len));
    }
    EncodedSequence seq;
    seq.indices.assign(static_cast<std::size_t>(max_len), EmbeddingTable<Scalar>::kPad);
    seq.true_length = std::min<int>(static_cast<int>(tokens.size()), max_len);
    const int skip = truncation == TruncationSide::Head
                         ? static_cast<int>(tokens.size()) - seq.true_length
                         : 0;
    for (int i = 0; i < seq.true_length; ++i) {
        seq.indices[static_cast<std::size_t>(i)] =
            table.row_of(tokens[static_cast<std::size_t>(skip + i)]);
    }
    return seq;
}

// Smallest length L >= 1 such that at least `percentile` of the sequences
// have length <= L.
int suggest_max_len(const std::vector<std::vector<std::string>>& dataset, double percentile);

}  // namespace votestack
