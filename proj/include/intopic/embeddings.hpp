#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/linalg.hpp"

namespace intopic {

/// Word vectors of a single dimension, one row per word.
class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> words, Matrix vectors);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(m_vectors.cols()); }
    [[nodiscard]] std::size_t size() const noexcept { return m_words.size(); }
    [[nodiscard]] std::vector<std::string> const& words() const noexcept { return m_words; }
    [[nodiscard]] Matrix const& vectors() const noexcept { return m_vectors; }
    [[nodiscard]] std::optional<int> index_of(std::string_view word) const;
    [[nodiscard]] bool contains(std::string_view word) const { return index_of(word).has_value(); }
    /// Throws NotFoundError for unknown words.
    [[nodiscard]] std::span<double const> vector(std::string_view word) const;
    [[nodiscard]] std::span<double const> row(std::size_t i) const;

  private:
    std::vector<std::string> m_words;
    Matrix m_vectors;
    std::unordered_map<std::string, int> m_index;
};

/// Text vector format: optional "count dim" header line, then `word v1 ... vL`.
EmbeddingTable load_embeddings(std::filesystem::path const& path, std::optional<int> expected_dim = std::nullopt);
EmbeddingTable parse_embeddings(std::istream& in, std::optional<int> expected_dim = std::nullopt);
void save_embeddings(EmbeddingTable const& table, std::filesystem::path const& path);

struct MissingPolicy {
    enum class Kind { error, random_init };
    Kind kind = Kind::random_init;
    std::uint64_t seed = 0;

    static MissingPolicy error() { return {Kind::error, 0}; }
    static MissingPolicy random_init(std::uint64_t seed) { return {Kind::random_init, seed}; }
};

/// Returns rho (V x L): row i holds the vector of vocabulary word i. Missing
/// words either fail (listing all of them) or draw from N(0, 0.1^2).
Matrix align_to_vocabulary(EmbeddingTable const& table, Vocabulary const& vocab, MissingPolicy policy);

/// a.b / (|a| |b|). Throws DimensionError on size mismatch and
/// InvalidArgument for an all-zero vector.
double cosine(std::span<double const> a, std::span<double const> b);

struct Neighbor {
    std::string word;
    double similarity;

    friend bool operator==(Neighbor const&, Neighbor const&) = default;
};

struct NeighborQuery {
    int k = 10;
    /// Only words in this vocabulary are candidates.
    Vocabulary const* restrict_to = nullptr;
    /// Candidate excluded from the results (usually the query word itself).
    std::optional<std::string> exclude;
};

/// Exhaustive top-k cosine scan; ties broken lexicographically. Zero-norm
/// candidates are skipped.
std::vector<Neighbor> nearest_words(std::span<double const> query, EmbeddingTable const& table, NeighborQuery const& q);

}  // namespace intopic
