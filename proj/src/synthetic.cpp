#include "intopic/synthetic.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "intopic/error.hpp"

namespace intopic {

namespace {

std::string padded(char prefix, int value, int width)
{
    auto digits = std::to_string(value);
    return prefix + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') +
           digits;
}

int block_start(int topic, int topics, int vocab) { return topic * vocab / topics; }

}  // namespace

int SyntheticCorpus::block_of(int word) const
{
    auto const k = static_cast<int>(planted_beta.rows());
    auto const v = static_cast<int>(planted_beta.cols());
    for (int t = 0; t < k; ++t) {
        if (word >= block_start(t, k, v) && word < block_start(t + 1, k, v)) {
            return t;
        }
    }
    throw InvalidArgument("word index out of range");
}

std::vector<std::string> SyntheticCorpus::block_words(int topic) const
{
    auto const k = static_cast<int>(planted_beta.rows());
    auto const v = static_cast<int>(planted_beta.cols());
    return {words.begin() + block_start(topic, k, v), words.begin() + block_start(topic + 1, k, v)};
}

SyntheticCorpus generate_synthetic_corpus(SyntheticOptions const& o)
{
    if (o.topics < 2) {
        throw InvalidArgument("synthetic corpus needs at least 2 topics");
    }
    if (o.vocab_size < 5 * o.topics) {
        throw InvalidArgument("synthetic corpus needs vocab_size >= 5 * topics");
    }
    if (o.docs < 1 || o.doc_len < 1 || !(o.concentration > 0.0)) {
        throw InvalidArgument("synthetic corpus needs docs, doc_len, concentration > 0");
    }
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticCorpus out;
    int const width = std::max(3, static_cast<int>(std::to_string(o.vocab_size - 1).size()));
    for (int v = 0; v < o.vocab_size; ++v) {
        out.words.push_back(padded('w', v, width));
    }

    out.planted_beta = Matrix::Zero(o.topics, o.vocab_size);
    for (int k = 0; k < o.topics; ++k) {
        int lo = block_start(k, o.topics, o.vocab_size);
        int hi = block_start(k + 1, o.topics, o.vocab_size);
        double total = 0.0;
        for (int v = lo; v < hi; ++v) {
            // Jittered weights avoid exact ties among top words.
            double w = 1.0 + unit(rng);
            out.planted_beta(k, v) = w;
            total += w;
        }
        out.planted_beta.row(k) /= total;
    }

    std::vector<std::discrete_distribution<int>> word_dists;
    for (int k = 0; k < o.topics; ++k) {
        std::vector<double> row(out.planted_beta.row(k).begin(), out.planted_beta.row(k).end());
        word_dists.emplace_back(row.begin(), row.end());
    }
    std::uniform_int_distribution<int> pick_topic(0, o.topics - 1);
    std::gamma_distribution<double> gamma_one(1.0, 1.0);
    bool const pure = std::isinf(o.concentration);
    std::gamma_distribution<double> gamma_dom(pure ? 1.0 : o.concentration, 1.0);
    int const id_width = std::max(4, static_cast<int>(std::to_string(o.docs - 1).size()));

    for (int d = 0; d < o.docs; ++d) {
        int dominant = pick_topic(rng);
        std::vector<double> theta(static_cast<std::size_t>(o.topics), 0.0);
        if (pure) {
            theta[static_cast<std::size_t>(dominant)] = 1.0;
        } else {
            for (int k = 0; k < o.topics; ++k) {
                theta[static_cast<std::size_t>(k)] = k == dominant ? gamma_dom(rng) : gamma_one(rng);
            }
        }
        std::discrete_distribution<int> mix(theta.begin(), theta.end());
        std::string text;
        for (int n = 0; n < o.doc_len; ++n) {
            int k = mix(rng);
            int w = word_dists[static_cast<std::size_t>(k)](rng);
            if (n) {
                text += ' ';
            }
            text += out.words[static_cast<std::size_t>(w)];
        }
        Document doc;
        doc.id = padded('d', d, id_width);
        doc.text = std::move(text);
        out.documents.push_back(std::move(doc));
        out.planted_topic.push_back(dominant);
    }
    return out;
}

EmbeddingTable planted_embeddings(SyntheticCorpus const& corpus, int dim, double spread, std::uint64_t seed,
                                  double norm)
{
    if (dim < 1) {
        throw InvalidArgument("planted_embeddings: dim must be >= 1");
    }
    if (!(norm > 0.0)) {
        throw InvalidArgument("planted_embeddings: norm must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto const k = corpus.planted_beta.rows();
    Matrix centroids(k, dim);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (int j = 0; j < dim; ++j) {
            centroids(t, j) = normal(rng);
        }
        centroids.row(t).normalize();
    }
    auto const v = static_cast<Eigen::Index>(corpus.words.size());
    Matrix vectors(v, dim);
    double const scale = spread / std::sqrt(static_cast<double>(dim));
    for (Eigen::Index w = 0; w < v; ++w) {
        vectors.row(w) = centroids.row(corpus.block_of(static_cast<int>(w)));
        for (int j = 0; j < dim; ++j) {
            vectors(w, j) += scale * normal(rng);
        }
    }
    vectors *= norm;
    return EmbeddingTable(corpus.words, std::move(vectors));
}

}  // namespace intopic
