#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <string>
#include <utility>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/embeddings.hpp"
#include "intopic/etm.hpp"

namespace intopic {

enum class RelabelMode {
    embedding_literal,  // alpha' = lambda (w - alpha) + (1 - lambda) alpha, as printed
    embedding_convex,   // alpha' = (1 - lambda) alpha + lambda w
    distribution,       // additive boost of P(w | t) and of similar words
};

std::string to_string(RelabelMode mode);
/// Accepts the enum names plus the short forms "literal", "convex".
RelabelMode parse_relabel_mode(std::string_view text);

struct RelabelRequest {
    int topic_id = 0;
    std::string label_word;
    double lambda = 0.5;
    RelabelMode mode = RelabelMode::embedding_convex;
    /// Boost for the label word (distribution mode); default is the gap to
    /// the topic's current top word.
    std::optional<double> delta;
    int neighbor_count = 10;

    friend bool operator==(RelabelRequest const&, RelabelRequest const&) = default;
};

struct DocScore {
    std::string doc_id;
    double score;

    friend bool operator==(DocScore const&, DocScore const&) = default;
};

struct TopicState {
    int topic_id = 0;
    std::optional<std::string> label;
    std::vector<std::string> top_words;
    /// Sorted by score descending, ties by doc id.
    std::vector<DocScore> documents;
    RowVector beta_row;
};

struct UpdateRecord {
    RelabelRequest request;
    TopicState before;
    TopicState after;
    std::vector<std::string> new_documents;
    std::string timestamp;
};

// ---------------------------------------------------------------------------
// Pure update rules.

/// New topic embedding for the two embedding modes. lambda must lie in [0,1].
RowVector move_topic_embedding(Eigen::Ref<RowVector const> alpha, Eigen::Ref<RowVector const> word, double lambda,
                               RelabelMode mode);

/// max_v beta[v] - beta[target].
double default_boost(std::span<double const> beta_row, int target);

struct WeightedWord {
    int word;
    double similarity;  // clipped to >= 0 by the caller's neighbor search
};

/// raw[target] += delta; raw[s] += lambda * sim(s) * delta for each neighbor;
/// the row is then renormalized to sum to one.
RowVector boost_distribution(std::span<double const> beta_row, int target, double delta,
                             std::span<WeightedWord const> neighbors, double lambda);

// ---------------------------------------------------------------------------
// Document assignment.

struct Assignment {
    std::vector<int> topic_of_doc;
    std::vector<double> score_of_doc;
    /// Document indices per topic, best score first.
    std::vector<std::vector<int>> topic_docs;
};

/// score(d,k) = theta[d,k] * exp(mean over the tokens of d of log beta[k,v]);
/// empty documents use theta alone. Each document goes to its best topic.
Assignment reassign_documents(Matrix const& beta, Matrix const& theta, BowCorpus const& corpus);

/// Ids in `after` but not in `before`, in `after` order. Throws
/// InvalidArgument when the topic ids differ.
std::vector<std::string> diff_documents(TopicState const& before, TopicState const& after);

// ---------------------------------------------------------------------------
// Versioned interactive state.

/// Immutable inputs shared by every session: the trained model, the corpus
/// mapped onto its vocabulary, cached topic proportions, and the table used
/// for label vectors and word similarity.
struct TopicContext {
    std::shared_ptr<EtmModel const> model;
    std::vector<Document> documents;
    BowCorpus corpus;
    Matrix theta;  // D x K, deterministic encoder output
    EmbeddingTable similarity;

    [[nodiscard]] std::optional<std::size_t> doc_index(std::string_view id) const;

  private:
    friend std::shared_ptr<TopicContext const> make_topic_context(std::shared_ptr<EtmModel const>,
                                                                  std::vector<Document>,
                                                                  std::optional<EmbeddingTable>);
    std::unordered_map<std::string, std::size_t> m_doc_index;
};

/// Tokenizes `documents`, maps them onto the model vocabulary and encodes
/// them. Similarity defaults to the model's rho; a pretrained table must have
/// the model's embedding dimension.
std::shared_ptr<TopicContext const> make_topic_context(std::shared_ptr<EtmModel const> model,
                                                       std::vector<Document> documents,
                                                       std::optional<EmbeddingTable> similarity = std::nullopt);

struct ModelVersion {
    int number = 0;
    Matrix alpha;
    Matrix beta;
    std::vector<std::optional<std::string>> labels;
    Assignment assignment;
};

struct LogEntry {
    enum class Kind { relabel, undo };
    Kind kind = Kind::relabel;
    std::optional<UpdateRecord> record;
    std::string timestamp;
};

struct WorkbenchOptions {
    int top_words = 10;
    std::size_t history_depth = 50;
};

/// Single-writer interactive state: every relabel publishes a new immutable
/// ModelVersion; the first version is kept for before/after comparisons.
class Workbench {
  public:
    explicit Workbench(std::shared_ptr<TopicContext const> context, WorkbenchOptions options = {});

    [[nodiscard]] TopicContext const& context() const noexcept { return *m_context; }
    [[nodiscard]] std::shared_ptr<ModelVersion const> current() const noexcept { return m_current; }
    [[nodiscard]] std::shared_ptr<ModelVersion const> initial() const noexcept { return m_initial; }
    [[nodiscard]] int topics() const noexcept { return m_context->model->config.topics; }
    [[nodiscard]] std::vector<LogEntry> const& log() const noexcept { return m_log; }
    [[nodiscard]] std::size_t undo_depth() const noexcept { return m_history.size(); }

    /// Validates and applies a relabel in either mode. Throws NotFoundError
    /// (topic id), OovWordError, DuplicateLabelError, InvalidArgument.
    UpdateRecord relabel(RelabelRequest const& request);
    /// Restores the previous version. Throws EmptyHistoryError.
    void undo();
    /// Re-applies a log from the initial version.
    void replay(std::span<LogEntry const> entries);

    [[nodiscard]] TopicState topic_state(int topic, ModelVersion const& version) const;
    [[nodiscard]] TopicState topic_state(int topic) const { return topic_state(topic, *m_current); }
    [[nodiscard]] std::vector<TopicState> topic_states(ModelVersion const& version) const;

  private:
    void check_request(RelabelRequest const& request) const;
    void publish(std::shared_ptr<ModelVersion const> next);

    std::shared_ptr<TopicContext const> m_context;
    WorkbenchOptions m_options;
    std::shared_ptr<ModelVersion const> m_initial;
    std::shared_ptr<ModelVersion const> m_current;
    std::deque<std::shared_ptr<ModelVersion const>> m_history;
    std::vector<LogEntry> m_log;
    int m_next_number = 1;
};

/// Current UTC time as ISO-8601.
std::string utc_timestamp();

}  // namespace intopic
