#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/embeddings.hpp"
#include "intopic/linalg.hpp"

namespace intopic {

struct SyntheticOptions {
    int topics = 3;
    int vocab_size = 30;
    int docs = 300;
    int doc_len = 50;
    /// Dirichlet weight on each document's dominant topic (others get 1).
    /// Infinity makes every document single-topic.
    double concentration = 5.0;
    std::uint64_t seed = 0;
};

/// Planted-topic corpus: topic k owns the disjoint word block
/// [k*V/K, (k+1)*V/K) and puts all of its mass there.
struct SyntheticCorpus {
    std::vector<Document> documents;
    /// Generated word strings; index matches the columns of planted_beta and
    /// lexicographic order matches index order.
    std::vector<std::string> words;
    Matrix planted_beta;  // K x V
    /// Dominant topic of each document.
    std::vector<int> planted_topic;

    [[nodiscard]] int block_of(int word) const;
    [[nodiscard]] std::vector<std::string> block_words(int topic) const;
};

SyntheticCorpus generate_synthetic_corpus(SyntheticOptions const& options);

/// Word vectors clustered by planted block: a random unit centroid per block
/// plus isotropic noise of scale `spread / sqrt(dim)`, all multiplied by `norm`.
inline constexpr double kPlantedNorm = 3.0;
EmbeddingTable planted_embeddings(SyntheticCorpus const& corpus, int dim, double spread, std::uint64_t seed,
                                  double norm = kPlantedNorm);

}  // namespace intopic
