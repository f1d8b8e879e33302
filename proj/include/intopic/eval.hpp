#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/interact.hpp"
#include "intopic/linalg.hpp"

namespace intopic {

// ---------------------------------------------------------------------------
// Coherence and diversity.

inline constexpr double kNpmiEpsilon = 1e-12;

/// Document-level (boolean) occurrence statistics over a vocabulary.
class CooccurrenceStats {
  public:
    explicit CooccurrenceStats(BowCorpus const& corpus);

    [[nodiscard]] int doc_count() const noexcept { return m_doc_count; }
    [[nodiscard]] Vocabulary const& vocab() const noexcept { return m_vocab; }
    /// Number of documents containing the word (0 for unknown words).
    [[nodiscard]] int word_doc_freq(std::string_view word) const;
    [[nodiscard]] int pair_doc_freq(std::string_view a, std::string_view b) const;

  private:
    [[nodiscard]] std::vector<int> const* postings(std::string_view word) const;

    Vocabulary m_vocab;
    int m_doc_count = 0;
    std::vector<std::vector<int>> m_postings;  // sorted doc indices per word
};

/// log2((p(a,b) + eps) / (p(a) p(b))). Throws InvalidArgument when either word
/// occurs in no document.
double pmi(std::string_view a, std::string_view b, CooccurrenceStats const& stats);

/// PMI / -log2(p(a,b) + eps), in [-1, 1]. Never co-occurring pairs give -1;
/// pairs present in every document give 1.
double npmi(std::string_view a, std::string_view b, CooccurrenceStats const& stats);

struct CoherenceResult {
    std::vector<double> per_topic;
    double mean = 0.0;
};

/// Mean NPMI over all unordered pairs of each topic's first `top_n` words.
/// A topic with fewer than two words scores 0; a pair with a word absent from
/// the reference corpus scores -1.
CoherenceResult topic_coherence(std::vector<std::vector<std::string>> const& top_word_lists,
                                CooccurrenceStats const& stats, int top_n = 10);
CoherenceResult topic_coherence(Matrix const& beta, std::vector<std::string> const& words,
                                CooccurrenceStats const& stats, int top_n = 10);

/// Distinct words across all topics' first `top_n` words over (K * top_n).
double topic_diversity(std::vector<std::vector<std::string>> const& top_word_lists, int top_n = 25);
double topic_diversity(Matrix const& beta, std::vector<std::string> const& words, int top_n = 25);

// ---------------------------------------------------------------------------
// BM25.

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class Bm25Index {
  public:
    /// Indexes each document's text with the corpus tokenizer.
    explicit Bm25Index(std::vector<Document> const& docs, Bm25Params params = {});

    [[nodiscard]] std::size_t doc_count() const noexcept { return m_doc_ids.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return m_avgdl; }
    [[nodiscard]] Bm25Params params() const noexcept { return m_params; }
    [[nodiscard]] std::vector<std::string> const& doc_ids() const noexcept { return m_doc_ids; }
    [[nodiscard]] int doc_length(std::string_view doc_id) const;
    [[nodiscard]] int term_doc_count(std::string_view term) const;
    [[nodiscard]] int term_freq(std::string_view term, std::string_view doc_id) const;
    [[nodiscard]] double idf(std::string_view term) const;

    /// Sum over query tokens (repeats included) of the Okapi term weight.
    /// Throws NotFoundError for unknown documents.
    [[nodiscard]] double score(std::string_view query, std::string_view doc_id) const;
    [[nodiscard]] double score_tokens(std::vector<std::string> const& query_tokens, std::string_view doc_id) const;

  private:
    [[nodiscard]] std::size_t index_of(std::string_view doc_id) const;

    Bm25Params m_params;
    std::vector<std::string> m_doc_ids;
    std::unordered_map<std::string, std::size_t> m_doc_index;
    std::vector<std::unordered_map<std::string, int>> m_term_freqs;
    std::vector<int> m_doc_lengths;
    std::unordered_map<std::string, int> m_term_doc_counts;
    double m_avgdl = 0.0;
};

inline Bm25Index build_bm25_index(std::vector<Document> const& docs, Bm25Params params = {})
{
    return Bm25Index(docs, params);
}

inline double bm25_score(std::string_view query, std::string_view doc_id, Bm25Index const& index)
{
    return index.score(query, doc_id);
}

/// Descending score, ties by doc id.
std::vector<DocScore> rank_documents(std::string_view query, std::vector<std::string> const& doc_ids,
                                     Bm25Index const& index);

// ---------------------------------------------------------------------------
// Before/after report.

struct TopicRanking {
    int topic_id = 0;
    std::optional<double> before;  // absent when the topic had no documents
    std::optional<double> after;
    int new_documents = 0;

    [[nodiscard]] std::optional<double> delta() const
    {
        if (before && after) {
            return *after - *before;
        }
        return std::nullopt;
    }
};

struct RankingReport {
    std::string query;
    int top_n = 5;
    std::vector<TopicRanking> topics;
    std::optional<double> aggregate_before;
    std::optional<double> aggregate_after;
};

/// Mean BM25 of each topic's first `top_n` documents before and after, plus
/// the number of documents new to each topic. Aggregates average the present
/// per-topic means.
RankingReport ranking_report(std::string_view query, std::vector<TopicState> const& before,
                             std::vector<TopicState> const& after, Bm25Index const& index, int top_n = 5);

/// Plain-text rendering with a fixed field order; numbers round-trip exactly.
std::string render_report(RankingReport const& report);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Planted-truth helpers.

/// Greedy one-to-one matching of learned to reference topics by top-word
/// overlap (largest overlap first, ties by lower learned then reference id).
/// Returns the reference topic for each learned topic, -1 when unmatched.
std::vector<int> match_topics(std::vector<std::vector<std::string>> const& learned,
                              std::vector<std::vector<std::string>> const& reference);

/// Fraction of documents whose matched argmax-theta topic equals the truth.
double assignment_accuracy(Matrix const& theta, std::vector<int> const& matching, std::vector<int> const& truth);

}  // namespace intopic
