#include "intopic/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "intopic/error.hpp"
#include "intopic/etm.hpp"

namespace intopic {

CooccurrenceStats::CooccurrenceStats(BowCorpus const& corpus)
    : m_vocab(corpus.vocab), m_doc_count(static_cast<int>(corpus.num_docs())), m_postings(corpus.vocab.size())
{
    if (corpus.num_docs() == 0) {
        throw InvalidArgument("co-occurrence statistics need a non-empty corpus");
    }
    for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
        for (auto const& e : corpus.rows[d]) {
            if (e.count > 0) {
                m_postings[static_cast<std::size_t>(e.word)].push_back(static_cast<int>(d));
            }
        }
    }
}

std::vector<int> const* CooccurrenceStats::postings(std::string_view word) const
{
    auto i = m_vocab.index_of(word);
    if (!i) {
        return nullptr;
    }
    return &m_postings[static_cast<std::size_t>(*i)];
}

int CooccurrenceStats::word_doc_freq(std::string_view word) const
{
    auto p = postings(word);
    return p ? static_cast<int>(p->size()) : 0;
}

int CooccurrenceStats::pair_doc_freq(std::string_view a, std::string_view b) const
{
    auto pa = postings(a);
    auto pb = postings(b);
    if (!pa || !pb) {
        return 0;
    }
    int n = 0;
    auto i = pa->begin();
    auto j = pb->begin();
    while (i != pa->end() && j != pb->end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

namespace {

struct PairProbs {
    double p_a;
    double p_b;
    double p_ab;
    int joint;
};

PairProbs pair_probs(std::string_view a, std::string_view b, CooccurrenceStats const& stats)
{
    int fa = stats.word_doc_freq(a);
    int fb = stats.word_doc_freq(b);
    if (fa == 0 || fb == 0) {
        throw InvalidArgument("word absent from reference corpus: '" + std::string(fa == 0 ? a : b) + "'");
    }
    int joint = stats.pair_doc_freq(a, b);
    double n = stats.doc_count();
    return {fa / n, fb / n, joint / n, joint};
}

}  // namespace

double pmi(std::string_view a, std::string_view b, CooccurrenceStats const& stats)
{
    auto p = pair_probs(a, b, stats);
    return std::log2((p.p_ab + kNpmiEpsilon) / (p.p_a * p.p_b));
}

double npmi(std::string_view a, std::string_view b, CooccurrenceStats const& stats)
{
    auto p = pair_probs(a, b, stats);
    if (p.joint == 0) {
        return -1.0;
    }
    if (p.joint == stats.doc_count()) {
        return 1.0;
    }
    double value = std::log2((p.p_ab + kNpmiEpsilon) / (p.p_a * p.p_b)) / -std::log2(p.p_ab + kNpmiEpsilon);
    return std::clamp(value, -1.0, 1.0);
}

CoherenceResult topic_coherence(std::vector<std::vector<std::string>> const& lists, CooccurrenceStats const& stats,
                                int top_n)
{
    if (top_n < 1) {
        throw InvalidArgument("top_n must be >= 1");
    }
    CoherenceResult out;
    for (auto const& list : lists) {
        auto n = std::min<std::size_t>(list.size(), static_cast<std::size_t>(top_n));
        double total = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                bool present = stats.word_doc_freq(list[i]) > 0 && stats.word_doc_freq(list[j]) > 0;
                total += present ? npmi(list[i], list[j], stats) : -1.0;
                ++pairs;
            }
        }
        out.per_topic.push_back(pairs ? total / pairs : 0.0);
    }
    if (!out.per_topic.empty()) {
        double s = 0.0;
        for (double x : out.per_topic) {
            s += x;
        }
        out.mean = s / static_cast<double>(out.per_topic.size());
    }
    return out;
}

namespace {

std::vector<std::vector<std::string>> top_lists(Matrix const& beta, std::vector<std::string> const& words, int n)
{
    std::vector<std::vector<std::string>> out;
    for (Eigen::Index k = 0; k < beta.rows(); ++k) {
        out.push_back(top_words(row_span(beta, k), n, words));
    }
    return out;
}

}  // namespace

CoherenceResult topic_coherence(Matrix const& beta, std::vector<std::string> const& words,
                                CooccurrenceStats const& stats, int top_n)
{
    return topic_coherence(top_lists(beta, words, top_n), stats, top_n);
}

double topic_diversity(std::vector<std::vector<std::string>> const& lists, int top_n)
{
    if (lists.empty() || top_n < 1) {
        throw InvalidArgument("topic_diversity needs topics and top_n >= 1");
    }
    std::set<std::string> distinct;
    for (auto const& list : lists) {
        if (list.size() < static_cast<std::size_t>(top_n)) {
            throw InvalidArgument("topic_diversity: a topic has fewer than top_n words");
        }
        distinct.insert(list.begin(), list.begin() + top_n);
    }
    return static_cast<double>(distinct.size()) / static_cast<double>(lists.size() * static_cast<std::size_t>(top_n));
}

double topic_diversity(Matrix const& beta, std::vector<std::string> const& words, int top_n)
{
    if (top_n > beta.cols()) {
        throw InvalidArgument("topic_diversity: top_n exceeds vocabulary size");
    }
    return topic_diversity(top_lists(beta, words, top_n), top_n);
}

// ---------------------------------------------------------------------------

Bm25Index::Bm25Index(std::vector<Document> const& docs, Bm25Params params) : m_params(params)
{
    if (docs.empty()) {
        throw InvalidArgument("BM25 index needs a non-empty corpus");
    }
    long total = 0;
    for (auto const& doc : docs) {
        if (!m_doc_index.emplace(doc.id, m_doc_ids.size()).second) {
            throw DuplicateIdError(doc.id);
        }
        m_doc_ids.push_back(doc.id);
        std::unordered_map<std::string, int> tf;
        auto tokens = tokenize(doc.text);
        for (auto& t : tokens) {
            ++tf[t];
        }
        for (auto const& [term, count] : tf) {
            ++m_term_doc_counts[term];
        }
        m_doc_lengths.push_back(static_cast<int>(tokens.size()));
        total += static_cast<long>(tokens.size());
        m_term_freqs.push_back(std::move(tf));
    }
    m_avgdl = static_cast<double>(total) / static_cast<double>(docs.size());
}

std::size_t Bm25Index::index_of(std::string_view doc_id) const
{
    auto it = m_doc_index.find(std::string(doc_id));
    if (it == m_doc_index.end()) {
        throw NotFoundError("unknown document '" + std::string(doc_id) + "'");
    }
    return it->second;
}

int Bm25Index::doc_length(std::string_view doc_id) const { return m_doc_lengths[index_of(doc_id)]; }

int Bm25Index::term_doc_count(std::string_view term) const
{
    auto it = m_term_doc_counts.find(std::string(term));
    return it == m_term_doc_counts.end() ? 0 : it->second;
}

int Bm25Index::term_freq(std::string_view term, std::string_view doc_id) const
{
    auto const& tf = m_term_freqs[index_of(doc_id)];
    auto it = tf.find(std::string(term));
    return it == tf.end() ? 0 : it->second;
}

double Bm25Index::idf(std::string_view term) const
{
    double n = term_doc_count(term);
    double big_n = static_cast<double>(doc_count());
    return std::log((big_n - n + 0.5) / (n + 0.5) + 1.0);
}

double Bm25Index::score_tokens(std::vector<std::string> const& query_tokens, std::string_view doc_id) const
{
    auto d = index_of(doc_id);
    auto const& tf = m_term_freqs[d];
    double const norm = 1.0 - m_params.b + m_params.b * m_doc_lengths[d] / m_avgdl;
    double s = 0.0;
    for (auto const& q : query_tokens) {
        auto it = tf.find(q);
        if (it == tf.end()) {
            continue;
        }
        double f = it->second;
        s += idf(q) * f * (m_params.k1 + 1.0) / (f + m_params.k1 * norm);
    }
    return s;
}

double Bm25Index::score(std::string_view query, std::string_view doc_id) const
{
    return score_tokens(tokenize(query), doc_id);
}

std::vector<DocScore> rank_documents(std::string_view query, std::vector<std::string> const& doc_ids,
                                     Bm25Index const& index)
{
    auto tokens = tokenize(query);
    std::vector<DocScore> out;
    out.reserve(doc_ids.size());
    for (auto const& id : doc_ids) {
        out.push_back({id, index.score_tokens(tokens, id)});
    }
    std::sort(out.begin(), out.end(), [](DocScore const& a, DocScore const& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.doc_id < b.doc_id;
    });
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> mean_top(TopicState const& s, std::vector<std::string> const& tokens, Bm25Index const& index,
                               int top_n)
{
    auto n = std::min<std::size_t>(s.documents.size(), static_cast<std::size_t>(top_n));
    if (n == 0) {
        return std::nullopt;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += index.score_tokens(tokens, s.documents[i].doc_id);
    }
    return total / static_cast<double>(n);
}

std::optional<double> mean_present(std::vector<std::optional<double>> const& xs)
{
    double s = 0.0;
    int n = 0;
    for (auto const& x : xs) {
        if (x) {
            s += *x;
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return s / n;
}

}  // namespace

RankingReport ranking_report(std::string_view query, std::vector<TopicState> const& before,
                             std::vector<TopicState> const& after, Bm25Index const& index, int top_n)
{
    if (before.size() != after.size()) {
        throw InvalidArgument("ranking_report: before and after have different topic counts");
    }
    if (top_n < 1) {
        throw InvalidArgument("ranking_report: top_n must be >= 1");
    }
    auto tokens = tokenize(query);
    RankingReport r;
    r.query = std::string(query);
    r.top_n = top_n;
    std::vector<std::optional<double>> befores;
    std::vector<std::optional<double>> afters;
    for (std::size_t i = 0; i < before.size(); ++i) {
        TopicRanking t;
        t.topic_id = before[i].topic_id;
        t.before = mean_top(before[i], tokens, index, top_n);
        t.after = mean_top(after[i], tokens, index, top_n);
        t.new_documents = static_cast<int>(diff_documents(before[i], after[i]).size());
        befores.push_back(t.before);
        afters.push_back(t.after);
        r.topics.push_back(t);
    }
    r.aggregate_before = mean_present(befores);
    r.aggregate_after = mean_present(afters);
    return r;
}

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string opt(std::optional<double> v) { return v ? format_double(*v) : "absent"; }

}  // namespace

std::string render_report(RankingReport const& r)
{
    std::ostringstream out;
    out << "query: " << r.query << '\n';
    out << "top_n: " << r.top_n << '\n';
    out << "topics: " << r.topics.size() << '\n';
    for (auto const& t : r.topics) {
        out << "topic " << t.topic_id << ": before=" << opt(t.before) << " after=" << opt(t.after)
            << " delta=" << opt(t.delta()) << " new_documents=" << t.new_documents << '\n';
    }
    out << "aggregate: before=" << opt(r.aggregate_before) << " after=" << opt(r.aggregate_after) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------

std::vector<int> match_topics(std::vector<std::vector<std::string>> const& learned,
                              std::vector<std::vector<std::string>> const& reference)
{
    struct Cand {
        int overlap;
        int learned;
        int reference;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < learned.size(); ++i) {
        std::set<std::string> a(learned[i].begin(), learned[i].end());
        for (std::size_t j = 0; j < reference.size(); ++j) {
            int n = 0;
            for (auto const& w : reference[j]) {
                n += a.contains(w) ? 1 : 0;
            }
            cands.push_back({n, static_cast<int>(i), static_cast<int>(j)});
        }
    }
    std::sort(cands.begin(), cands.end(), [](Cand const& x, Cand const& y) {
        if (x.overlap != y.overlap) {
            return x.overlap > y.overlap;
        }
        if (x.learned != y.learned) {
            return x.learned < y.learned;
        }
        return x.reference < y.reference;
    });
    std::vector<int> match(learned.size(), -1);
    std::vector<bool> used(reference.size(), false);
    for (auto const& c : cands) {
        if (match[static_cast<std::size_t>(c.learned)] == -1 && !used[static_cast<std::size_t>(c.reference)]) {
            match[static_cast<std::size_t>(c.learned)] = c.reference;
            used[static_cast<std::size_t>(c.reference)] = true;
        }
    }
    return match;
}

double assignment_accuracy(Matrix const& theta, std::vector<int> const& matching, std::vector<int> const& truth)
{
    if (static_cast<std::size_t>(theta.rows()) != truth.size() || theta.rows() == 0) {
        throw DimensionError("assignment_accuracy: theta rows and truth length differ");
    }
    int ok = 0;
    for (Eigen::Index d = 0; d < theta.rows(); ++d) {
        Eigen::Index best = 0;
        theta.row(d).maxCoeff(&best);
        ok += matching[static_cast<std::size_t>(best)] == truth[static_cast<std::size_t>(d)] ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(theta.rows());
}

}  // namespace intopic
