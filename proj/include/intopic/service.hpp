#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intopic/eval.hpp"
#include "intopic/interact.hpp"
#include "intopic/serialize.hpp"

namespace httplib {
class Server;
}

namespace intopic {

inline constexpr std::size_t kMaxSelection = 5;

/// Read-only view published after every mutation.
struct SessionSnapshot {
    std::shared_ptr<ModelVersion const> version;
    std::size_t log_size = 0;
    std::size_t undo_depth = 0;
};

/// One participant's interactive state. Mutations are serialized on a single
/// writer lock; readers take the latest published snapshot and never wait
/// for a relabel to finish.
class Session {
  public:
    Session(std::string id, std::shared_ptr<TopicContext const> context, WorkbenchOptions options = {},
            std::optional<std::filesystem::path> audit_log = std::nullopt);

    [[nodiscard]] std::string const& id() const noexcept { return m_id; }
    [[nodiscard]] TopicContext const& context() const noexcept { return m_workbench.context(); }
    [[nodiscard]] SessionSnapshot snapshot() const;
    [[nodiscard]] std::shared_ptr<ModelVersion const> initial() const { return m_workbench.initial(); }

    UpdateRecord relabel(RelabelRequest const& request);
    /// Applies the requests in order under one writer lock. Stops at the
    /// first failure; earlier updates stay applied.
    std::vector<UpdateRecord> relabel_batch(std::vector<RelabelRequest> const& requests);
    void undo();
    [[nodiscard]] std::vector<LogEntry> log() const;

    [[nodiscard]] TopicState topic_state(int topic, ModelVersion const& version) const
    {
        return m_workbench.topic_state(topic, version);
    }
    [[nodiscard]] std::vector<TopicState> topic_states(ModelVersion const& version) const
    {
        return m_workbench.topic_states(version);
    }

    /// Replaces the selection for `question_id`. Throws InvalidArgument with
    /// more than kMaxSelection ids and NotFoundError for unknown documents.
    void select(std::string const& question_id, std::vector<std::string> doc_ids,
                std::optional<std::string> question = std::nullopt);
    [[nodiscard]] std::map<std::string, std::vector<std::string>> selections() const;
    [[nodiscard]] std::optional<std::string> question() const;

  private:
    void publish_locked();
    void write_audit(LogEntry const& entry);

    std::string m_id;
    Workbench m_workbench;
    std::optional<std::filesystem::path> m_audit_log;

    mutable std::mutex m_write;
    mutable std::mutex m_publish;
    SessionSnapshot m_snapshot;

    mutable std::mutex m_select;
    std::map<std::string, std::vector<std::string>> m_selections;
    std::optional<std::string> m_question;
};

struct ServiceOptions {
    WorkbenchOptions workbench;
    /// Sessions append their update log to `<audit_dir>/<session>.jsonl` and
    /// replay an existing file when first opened.
    std::optional<std::filesystem::path> audit_dir;
};

struct Request {
    std::string method;
    std::string path;
    std::multimap<std::string, std::string> params;
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Routes API requests to sessions (selected by the `session` query
/// parameter, default "default"). Independent of any transport.
class Service {
  public:
    explicit Service(std::shared_ptr<TopicContext const> context, ServiceOptions options = {});

    [[nodiscard]] TopicContext const& context() const noexcept { return *m_context; }
    [[nodiscard]] Bm25Index const& index() const noexcept { return m_index; }

    /// Returns the session, creating it on first use.
    Session& session(std::string const& id);

    Response handle(Request const& request);

    /// Registers every /api route on `server`.
    void mount(httplib::Server& server);

  private:
    std::shared_ptr<TopicContext const> m_context;
    ServiceOptions m_options;
    Bm25Index m_index;
    std::mutex m_sessions_mutex;
    std::map<std::string, std::unique_ptr<Session>> m_sessions;
};

/// Before/after report for a session: version 0 against the latest version.
RankingReport session_report(Session const& session, Bm25Index const& index, std::string_view query,
                             int top_n = 5);

/// Blocks serving HTTP on host:port until the server is stopped.
void serve(Service& service, std::string const& host, int port);

}  // namespace intopic
