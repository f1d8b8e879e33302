#include "intopic/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "intopic/error.hpp"

namespace intopic {

MissingWordsError::MissingWordsError(std::vector<std::string> words)
    : Error([&] {
          std::string msg = "words missing from embedding table:";
          for (auto const& w : words) {
              msg += " " + w;
          }
          return msg;
      }()),
      m_words(std::move(words))
{}

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Matrix vectors)
    : m_words(std::move(words)), m_vectors(std::move(vectors))
{
    if (static_cast<Eigen::Index>(m_words.size()) != m_vectors.rows()) {
        throw DimensionError("embedding table: word count and row count differ");
    }
    m_index.reserve(m_words.size());
    for (std::size_t i = 0; i < m_words.size(); ++i) {
        m_index.emplace(m_words[i], static_cast<int>(i));
    }
}

std::optional<int> EmbeddingTable::index_of(std::string_view word) const
{
    auto it = m_index.find(std::string(word));
    if (it == m_index.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<double const> EmbeddingTable::vector(std::string_view word) const
{
    auto i = index_of(word);
    if (!i) {
        throw NotFoundError("no embedding for '" + std::string(word) + "'");
    }
    return row(static_cast<std::size_t>(*i));
}

std::span<double const> EmbeddingTable::row(std::size_t i) const
{
    return {m_vectors.data() + i * static_cast<std::size_t>(m_vectors.cols()), static_cast<std::size_t>(m_vectors.cols())};
}

EmbeddingTable parse_embeddings(std::istream& in, std::optional<int> expected_dim)
{
    std::vector<std::string> words;
    std::vector<std::vector<double>> rows;
    std::optional<std::size_t> dim;
    if (expected_dim) {
        dim = static_cast<std::size_t>(*expected_dim);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) {
            continue;
        }
        std::vector<double> values;
        std::string tok;
        while (fields >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw ParseError("non-numeric component for '" + word + "'", lineno);
            }
            values.push_back(v);
        }
        // "count dim" header: two integer fields on the first line.
        if (lineno == 1 && values.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) {
            auto header_dim = static_cast<std::size_t>(values[0]);
            if (dim && *dim != header_dim) {
                throw DimensionError("header declares dimension " + std::to_string(header_dim) + ", expected " +
                                     std::to_string(*dim));
            }
            dim = header_dim;
            continue;
        }
        if (!dim) {
            dim = values.size();
        }
        if (values.size() != *dim) {
            throw DimensionError("word '" + word + "' has " + std::to_string(values.size()) +
                                 " components, expected " + std::to_string(*dim) + " (line " +
                                 std::to_string(lineno) + ")");
        }
        words.push_back(std::move(word));
        rows.push_back(std::move(values));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim.value_or(0)));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return EmbeddingTable(std::move(words), std::move(m));
}

EmbeddingTable load_embeddings(std::filesystem::path const& path, std::optional<int> expected_dim)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open embedding file " + path.string());
    }
    return parse_embeddings(in, expected_dim);
}

void save_embeddings(EmbeddingTable const& table, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write embedding file " + path.string());
    }
    out.precision(17);
    out << table.size() << ' ' << table.dim() << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.words()[i];
        for (double v : table.row(i)) {
            out << ' ' << v;
        }
        out << '\n';
    }
}

Matrix align_to_vocabulary(EmbeddingTable const& table, Vocabulary const& vocab, MissingPolicy policy)
{
    auto const dim = table.dim();
    Matrix rho(static_cast<Eigen::Index>(vocab.size()), dim);
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (auto j = table.index_of(vocab.word(i))) {
            rho.row(static_cast<Eigen::Index>(i)) = table.vectors().row(*j);
        } else {
            missing.push_back(i);
        }
    }
    if (missing.empty()) {
        return rho;
    }
    if (policy.kind == MissingPolicy::Kind::error) {
        std::vector<std::string> names;
        for (auto i : missing) {
            names.push_back(vocab.word(i));
        }
        throw MissingWordsError(std::move(names));
    }
    std::mt19937_64 rng(policy.seed);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (auto i : missing) {
        for (int j = 0; j < dim; ++j) {
            rho(static_cast<Eigen::Index>(i), j) = normal(rng);
        }
    }
    return rho;
}

double cosine(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size()) {
        throw DimensionError("cosine: dimensions differ");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw InvalidArgument("cosine: zero vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<Neighbor> nearest_words(std::span<double const> query, EmbeddingTable const& table, NeighborQuery const& q)
{
    if (q.k < 1) {
        throw InvalidArgument("nearest_words: k must be >= 1");
    }
    if (static_cast<int>(query.size()) != table.dim()) {
        throw DimensionError("nearest_words: query dimension differs from table");
    }
    double qnorm = 0.0;
    for (double v : query) {
        qnorm += v * v;
    }
    if (qnorm == 0.0) {
        throw InvalidArgument("nearest_words: zero query vector");
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        auto const& w = table.words()[i];
        if (q.exclude && w == *q.exclude) {
            continue;
        }
        if (q.restrict_to && !q.restrict_to->contains(w)) {
            continue;
        }
        auto row = table.row(i);
        bool zero = std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
        if (zero) {
            continue;
        }
        scored.emplace_back(cosine(query, row), i);
    }
    auto better = [&](auto const& x, auto const& y) {
        if (x.first != y.first) {
            return x.first > y.first;
        }
        return table.words()[x.second] < table.words()[y.second];
    };
    auto k = std::min<std::size_t>(static_cast<std::size_t>(q.k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    std::vector<Neighbor> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({table.words()[scored[i].second], scored[i].first});
    }
    return out;
}

}  // namespace intopic
