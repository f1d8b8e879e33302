#include "intopic/interact.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <unordered_set>

#include "intopic/error.hpp"

namespace intopic {

std::string to_string(RelabelMode mode)
{
    switch (mode) {
    case RelabelMode::embedding_literal:
        return "embedding_literal";
    case RelabelMode::embedding_convex:
        return "embedding_convex";
    case RelabelMode::distribution:
        return "distribution";
    }
    return "unknown";
}

RelabelMode parse_relabel_mode(std::string_view text)
{
    if (text == "embedding_literal" || text == "literal") {
        return RelabelMode::embedding_literal;
    }
    if (text == "embedding_convex" || text == "convex" || text == "embedding") {
        return RelabelMode::embedding_convex;
    }
    if (text == "distribution") {
        return RelabelMode::distribution;
    }
    throw InvalidArgument("unknown relabel mode '" + std::string(text) + "'");
}

RowVector move_topic_embedding(Eigen::Ref<RowVector const> alpha, Eigen::Ref<RowVector const> word, double lambda,
                               RelabelMode mode)
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1]");
    }
    if (alpha.size() != word.size()) {
        throw DimensionError("topic and word embeddings differ in dimension");
    }
    RowVector out(alpha.size());
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
        switch (mode) {
        case RelabelMode::embedding_literal:
            out[j] = lambda * (word[j] - alpha[j]) + (1.0 - lambda) * alpha[j];
            break;
        case RelabelMode::embedding_convex:
            out[j] = (1.0 - lambda) * alpha[j] + lambda * word[j];
            break;
        case RelabelMode::distribution:
            throw InvalidArgument("distribution mode does not move topic embeddings");
        }
    }
    return out;
}

double default_boost(std::span<double const> beta_row, int target)
{
    auto top = *std::max_element(beta_row.begin(), beta_row.end());
    return top - beta_row[static_cast<std::size_t>(target)];
}

RowVector boost_distribution(std::span<double const> beta_row, int target, double delta,
                             std::span<WeightedWord const> neighbors, double lambda)
{
    if (target < 0 || static_cast<std::size_t>(target) >= beta_row.size()) {
        throw InvalidArgument("boost target out of range");
    }
    if (!(delta >= 0.0)) {
        throw InvalidArgument("boost delta must be >= 0");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1]");
    }
    RowVector raw(static_cast<Eigen::Index>(beta_row.size()));
    for (std::size_t v = 0; v < beta_row.size(); ++v) {
        raw[static_cast<Eigen::Index>(v)] = beta_row[v];
    }
    raw[target] += delta;
    for (auto const& n : neighbors) {
        if (n.word == target) {
            continue;
        }
        if (n.word < 0 || static_cast<std::size_t>(n.word) >= beta_row.size()) {
            throw InvalidArgument("neighbor index out of range");
        }
        raw[n.word] += lambda * std::max(0.0, n.similarity) * delta;
    }
    double total = 0.0;
    for (Eigen::Index v = 0; v < raw.size(); ++v) {
        total += raw[v];
    }
    return raw / total;
}

Assignment reassign_documents(Matrix const& beta, Matrix const& theta, BowCorpus const& corpus)
{
    auto const k_topics = beta.rows();
    if (theta.rows() != static_cast<Eigen::Index>(corpus.num_docs()) || theta.cols() != k_topics) {
        throw DimensionError("reassign_documents: theta shape does not match corpus and beta");
    }
    Matrix log_beta = beta.array().log().matrix();
    Assignment out;
    out.topic_of_doc.resize(corpus.num_docs());
    out.score_of_doc.resize(corpus.num_docs());
    out.topic_docs.assign(static_cast<std::size_t>(k_topics), {});
    Vector log_score(k_topics);
    for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
        auto const di = static_cast<Eigen::Index>(d);
        int const len = corpus.doc_lengths[d];
        for (Eigen::Index k = 0; k < k_topics; ++k) {
            double ll = 0.0;
            if (len > 0) {
                for (auto const& e : corpus.rows[d]) {
                    ll += e.count * log_beta(k, e.word);
                }
                ll /= static_cast<double>(len);
            }
            log_score[k] = std::log(theta(di, k)) + ll;
        }
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < k_topics; ++k) {
            if (log_score[k] > log_score[best]) {
                best = k;
            }
        }
        out.topic_of_doc[d] = static_cast<int>(best);
        out.score_of_doc[d] = std::exp(log_score[best]);
        out.topic_docs[static_cast<std::size_t>(best)].push_back(static_cast<int>(d));
    }
    for (auto& docs : out.topic_docs) {
        std::sort(docs.begin(), docs.end(), [&](int a, int b) {
            auto sa = out.score_of_doc[static_cast<std::size_t>(a)];
            auto sb = out.score_of_doc[static_cast<std::size_t>(b)];
            if (sa != sb) {
                return sa > sb;
            }
            return corpus.doc_ids[static_cast<std::size_t>(a)] < corpus.doc_ids[static_cast<std::size_t>(b)];
        });
    }
    return out;
}

std::vector<std::string> diff_documents(TopicState const& before, TopicState const& after)
{
    if (before.topic_id != after.topic_id) {
        throw InvalidArgument("diff_documents: topic ids differ");
    }
    std::unordered_set<std::string> old;
    for (auto const& d : before.documents) {
        old.insert(d.doc_id);
    }
    std::vector<std::string> out;
    for (auto const& d : after.documents) {
        if (!old.contains(d.doc_id)) {
            out.push_back(d.doc_id);
        }
    }
    return out;
}

std::optional<std::size_t> TopicContext::doc_index(std::string_view id) const
{
    auto it = m_doc_index.find(std::string(id));
    if (it == m_doc_index.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::shared_ptr<TopicContext const> make_topic_context(std::shared_ptr<EtmModel const> model,
                                                       std::vector<Document> documents,
                                                       std::optional<EmbeddingTable> similarity)
{
    if (!model) {
        throw InvalidArgument("make_topic_context: no model");
    }
    auto ctx = std::make_shared<TopicContext>();
    ctx->model = std::move(model);
    auto const& vocab = ctx->model->vocab;
    for (auto& doc : documents) {
        doc.tokens = tokenize(doc.text);
        std::erase_if(doc.tokens, [&](std::string const& t) { return !vocab.contains(t); });
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (!ctx->m_doc_index.emplace(documents[i].id, i).second) {
            throw DuplicateIdError(documents[i].id);
        }
    }
    ctx->corpus = to_bow(documents, vocab);
    ctx->documents = std::move(documents);
    ctx->theta = infer_theta_all(ctx->model->params.encoder, ctx->corpus);
    if (similarity) {
        if (similarity->dim() != ctx->model->config.embedding_dim) {
            throw DimensionError("similarity table dimension differs from the model embedding dimension");
        }
        ctx->similarity = std::move(*similarity);
    } else {
        ctx->similarity = EmbeddingTable(vocab.words(), ctx->model->params.rho);
    }
    return ctx;
}

std::string utc_timestamp()
{
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Workbench::Workbench(std::shared_ptr<TopicContext const> context, WorkbenchOptions options)
    : m_context(std::move(context)), m_options(options)
{
    auto const& model = *m_context->model;
    auto v0 = std::make_shared<ModelVersion>();
    v0->number = 0;
    v0->alpha = model.params.alpha;
    v0->beta = model.beta.size() ? model.beta : compute_beta(model.params);
    v0->labels.assign(static_cast<std::size_t>(model.config.topics), std::nullopt);
    v0->assignment = reassign_documents(v0->beta, m_context->theta, m_context->corpus);
    m_initial = v0;
    m_current = v0;
}

void Workbench::check_request(RelabelRequest const& r) const
{
    if (r.topic_id < 0 || r.topic_id >= topics()) {
        throw NotFoundError("no topic " + std::to_string(r.topic_id));
    }
    if (r.label_word.empty()) {
        throw InvalidArgument("label word is empty");
    }
    if (!(r.lambda >= 0.0 && r.lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1]");
    }
    if (r.delta && !(*r.delta >= 0.0)) {
        throw InvalidArgument("delta must be >= 0");
    }
    if (r.neighbor_count < 0) {
        throw InvalidArgument("neighbor_count must be >= 0");
    }
    if (!m_context->model->vocab.contains(r.label_word) || !m_context->similarity.contains(r.label_word)) {
        throw OovWordError(r.label_word);
    }
    auto const& labels = m_current->labels;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (static_cast<int>(k) != r.topic_id && labels[k] && *labels[k] == r.label_word) {
            throw DuplicateLabelError(r.label_word, static_cast<int>(k));
        }
    }
}

UpdateRecord Workbench::relabel(RelabelRequest const& r)
{
    check_request(r);
    auto const& ctx = *m_context;
    auto const& model = *ctx.model;
    auto const k = static_cast<Eigen::Index>(r.topic_id);
    int const target = *model.vocab.index_of(r.label_word);

    auto next = std::make_shared<ModelVersion>(*m_current);
    next->number = m_next_number;

    if (r.mode == RelabelMode::distribution) {
        auto row = row_span(m_current->beta, k);
        double delta = r.delta ? *r.delta : default_boost(row, target);
        std::vector<WeightedWord> neighbors;
        if (r.neighbor_count > 0) {
            NeighborQuery q;
            q.k = r.neighbor_count;
            q.restrict_to = &model.vocab;
            q.exclude = r.label_word;
            for (auto const& n : nearest_words(ctx.similarity.vector(r.label_word), ctx.similarity, q)) {
                neighbors.push_back({*model.vocab.index_of(n.word), std::max(0.0, n.similarity)});
            }
        }
        next->beta.row(k) = boost_distribution(row, target, delta, neighbors, r.lambda);
    } else {
        auto word = ctx.similarity.vector(r.label_word);
        RowVector w = Eigen::Map<RowVector const>(word.data(), static_cast<Eigen::Index>(word.size()));
        next->alpha.row(k) = move_topic_embedding(m_current->alpha.row(k), w, r.lambda, r.mode);
        next->beta.row(k) = compute_beta_row(model.params.rho, next->alpha.row(k));
    }
    next->labels[static_cast<std::size_t>(k)] = r.label_word;
    next->assignment = reassign_documents(next->beta, ctx.theta, ctx.corpus);

    UpdateRecord rec;
    rec.request = r;
    rec.before = topic_state(r.topic_id, *m_current);
    rec.after = topic_state(r.topic_id, *next);
    rec.new_documents = diff_documents(rec.before, rec.after);
    rec.timestamp = utc_timestamp();

    ++m_next_number;
    publish(std::move(next));
    m_log.push_back({LogEntry::Kind::relabel, rec, rec.timestamp});
    return rec;
}

void Workbench::publish(std::shared_ptr<ModelVersion const> next)
{
    m_history.push_back(m_current);
    while (m_history.size() > m_options.history_depth) {
        m_history.pop_front();
    }
    m_current = std::move(next);
}

void Workbench::undo()
{
    if (m_history.empty()) {
        throw EmptyHistoryError();
    }
    m_current = m_history.back();
    m_history.pop_back();
    auto ts = utc_timestamp();
    m_log.push_back({LogEntry::Kind::undo, std::nullopt, ts});
}

void Workbench::replay(std::span<LogEntry const> entries)
{
    for (auto const& e : entries) {
        if (e.kind == LogEntry::Kind::undo) {
            undo();
        } else if (e.record) {
            relabel(e.record->request);
        }
    }
}

TopicState Workbench::topic_state(int topic, ModelVersion const& version) const
{
    if (topic < 0 || topic >= topics()) {
        throw NotFoundError("no topic " + std::to_string(topic));
    }
    auto const& ctx = *m_context;
    auto const k = static_cast<Eigen::Index>(topic);
    TopicState s;
    s.topic_id = topic;
    s.label = version.labels[static_cast<std::size_t>(topic)];
    s.top_words = top_words(row_span(version.beta, k), m_options.top_words, ctx.model->vocab.words());
    for (int d : version.assignment.topic_docs[static_cast<std::size_t>(topic)]) {
        s.documents.push_back({ctx.corpus.doc_ids[static_cast<std::size_t>(d)],
                               version.assignment.score_of_doc[static_cast<std::size_t>(d)]});
    }
    s.beta_row = version.beta.row(k);
    return s;
}

std::vector<TopicState> Workbench::topic_states(ModelVersion const& version) const
{
    std::vector<TopicState> out;
    for (int k = 0; k < topics(); ++k) {
        out.push_back(topic_state(k, version));
    }
    return out;
}

}  // namespace intopic
