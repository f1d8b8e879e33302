#include "intopic/service.hpp"

#include <charconv>
#include <string>

#include <httplib.h>

#include "intopic/error.hpp"

namespace intopic {

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, std::shared_ptr<TopicContext const> context, WorkbenchOptions options,
                 std::optional<std::filesystem::path> audit_log)
    : m_id(std::move(id)), m_workbench(std::move(context), options), m_audit_log(std::move(audit_log))
{
    if (m_audit_log) {
        auto entries = load_log(*m_audit_log);
        m_workbench.replay(entries);
    }
    publish_locked();
}

SessionSnapshot Session::snapshot() const
{
    std::lock_guard lock(m_publish);
    return m_snapshot;
}

void Session::publish_locked()
{
    SessionSnapshot next{m_workbench.current(), m_workbench.log().size(), m_workbench.undo_depth()};
    std::lock_guard lock(m_publish);
    m_snapshot = std::move(next);
}

void Session::write_audit(LogEntry const& entry)
{
    if (m_audit_log) {
        append_log(*m_audit_log, entry);
    }
}

UpdateRecord Session::relabel(RelabelRequest const& request)
{
    std::lock_guard lock(m_write);
    auto rec = m_workbench.relabel(request);
    publish_locked();
    write_audit(m_workbench.log().back());
    return rec;
}

std::vector<UpdateRecord> Session::relabel_batch(std::vector<RelabelRequest> const& requests)
{
    std::lock_guard lock(m_write);
    std::vector<UpdateRecord> out;
    try {
        for (auto const& r : requests) {
            out.push_back(m_workbench.relabel(r));
            write_audit(m_workbench.log().back());
        }
    } catch (...) {
        publish_locked();
        throw;
    }
    publish_locked();
    return out;
}

void Session::undo()
{
    std::lock_guard lock(m_write);
    m_workbench.undo();
    publish_locked();
    write_audit(m_workbench.log().back());
}

std::vector<LogEntry> Session::log() const
{
    std::lock_guard lock(m_write);
    return m_workbench.log();
}

void Session::select(std::string const& question_id, std::vector<std::string> doc_ids,
                     std::optional<std::string> question)
{
    if (doc_ids.size() > kMaxSelection) {
        throw InvalidArgument("at most " + std::to_string(kMaxSelection) + " documents per question");
    }
    for (auto const& id : doc_ids) {
        if (!context().doc_index(id)) {
            throw NotFoundError("no document '" + id + "'");
        }
    }
    std::lock_guard lock(m_select);
    m_selections[question_id] = std::move(doc_ids);
    if (question) {
        m_question = std::move(question);
    }
}

std::map<std::string, std::vector<std::string>> Session::selections() const
{
    std::lock_guard lock(m_select);
    return m_selections;
}

std::optional<std::string> Session::question() const
{
    std::lock_guard lock(m_select);
    return m_question;
}

RankingReport session_report(Session const& session, Bm25Index const& index, std::string_view query, int top_n)
{
    auto current = session.snapshot().version;
    auto before = session.topic_states(*session.initial());
    auto after = session.topic_states(*current);
    return ranking_report(query, before, after, index, top_n);
}

// ---------------------------------------------------------------------------
// Routing

namespace {

struct HttpError {
    int status;
    std::string reason;
    std::string message;
};

Response json_response(int status, Json const& body)
{
    return {status, "application/json", body.dump()};
}

Response error_response(int status, std::string const& reason, std::string const& message)
{
    return json_response(status, {{"error", reason}, {"message", message}});
}

std::optional<std::string> param(Request const& req, std::string const& key)
{
    auto it = req.params.find(key);
    if (it == req.params.end()) {
        return std::nullopt;
    }
    return it->second;
}

int parse_int(std::string_view text, std::string const& what)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw HttpError{400, "bad_request", "invalid " + what + " '" + std::string(text) + "'"};
    }
    return v;
}

int topic_from_path(std::string_view segment)
{
    int k = 0;
    auto [ptr, ec] = std::from_chars(segment.data(), segment.data() + segment.size(), k);
    if (ec != std::errc{} || ptr != segment.data() + segment.size()) {
        throw HttpError{404, "not_found", "no topic '" + std::string(segment) + "'"};
    }
    return k;
}

std::vector<std::string_view> split_path(std::string_view path)
{
    std::vector<std::string_view> out;
    while (!path.empty()) {
        auto slash = path.find('/');
        auto part = path.substr(0, slash);
        if (!part.empty()) {
            out.push_back(part);
        }
        if (slash == std::string_view::npos) {
            break;
        }
        path.remove_prefix(slash + 1);
    }
    return out;
}

Json parse_body(Request const& req)
{
    if (req.body.empty()) {
        return Json::object();
    }
    try {
        return Json::parse(req.body);
    } catch (Json::exception const& e) {
        throw HttpError{400, "bad_request", std::string("malformed body: ") + e.what()};
    }
}

/// lambda gets its own reason code so clients can point at the slider.
RelabelRequest read_relabel(Json const& body, int topic, double lambda_default)
{
    if (!body.is_object()) {
        throw HttpError{400, "bad_request", "relabel body must be an object"};
    }
    auto r = relabel_request_from_json(body, lambda_default);
    r.topic_id = topic;
    if (!(r.lambda >= 0.0 && r.lambda <= 1.0)) {
        throw HttpError{400, "invalid_lambda", "lambda must lie in [0, 1]"};
    }
    return r;
}

Json topic_summary(TopicState const& s)
{
    Json j = {
        {"topic_id", s.topic_id},
        {"top_words", s.top_words},
        {"document_count", s.documents.size()},
    };
    j["label"] = s.label ? Json(*s.label) : Json(nullptr);
    return j;
}

}  // namespace

Service::Service(std::shared_ptr<TopicContext const> context, ServiceOptions options)
    : m_context(std::move(context)), m_options(std::move(options)), m_index(m_context->documents)
{
    if (m_options.audit_dir) {
        std::filesystem::create_directories(*m_options.audit_dir);
    }
}

Session& Service::session(std::string const& id)
{
    std::lock_guard lock(m_sessions_mutex);
    auto it = m_sessions.find(id);
    if (it == m_sessions.end()) {
        std::optional<std::filesystem::path> audit;
        if (m_options.audit_dir) {
            audit = *m_options.audit_dir / (id + ".jsonl");
        }
        it = m_sessions.emplace(id, std::make_unique<Session>(id, m_context, m_options.workbench, audit)).first;
    }
    return *it->second;
}

Response Service::handle(Request const& req)
{
    try {
        auto parts = split_path(req.path);
        if (parts.size() < 2 || parts[0] != "api") {
            throw HttpError{404, "not_found", "no route " + req.path};
        }
        auto session_id = param(req, "session").value_or("default");
        if (session_id.empty() || session_id.find_first_of("/\\.") != std::string::npos) {
            throw HttpError{400, "bad_request", "invalid session id"};
        }
        auto& s = session(session_id);
        double const lambda_default = m_context->model->config.lambda_default;
        bool const get = req.method == "GET";
        bool const post = req.method == "POST";

        if (get && parts.size() == 2 && parts[1] == "session") {
            auto snap = s.snapshot();
            Json labels = Json::array();
            for (auto const& l : snap.version->labels) {
                labels.push_back(l ? Json(*l) : Json(nullptr));
            }
            Json j = {
                {"session_id", s.id()},
                {"version", snap.version->number},
                {"topics", s.context().model->config.topics},
                {"documents", s.context().corpus.doc_ids.size()},
                {"labels", std::move(labels)},
                {"selections", s.selections()},
                {"updates", snap.log_size},
                {"undo_depth", snap.undo_depth},
                {"lambda_default", lambda_default},
            };
            auto q = s.question();
            j["question"] = q ? Json(*q) : Json(nullptr);
            return json_response(200, j);
        }
        if (get && parts.size() == 2 && parts[1] == "topics") {
            auto snap = s.snapshot();
            Json topics = Json::array();
            for (auto const& st : s.topic_states(*snap.version)) {
                topics.push_back(topic_summary(st));
            }
            return json_response(200, {{"version", snap.version->number}, {"topics", std::move(topics)}});
        }
        if (parts.size() >= 3 && parts[1] == "topics") {
            int k = topic_from_path(parts[2]);
            if (get && parts.size() == 3) {
                auto snap = s.snapshot();
                auto st = s.topic_state(k, *snap.version);
                auto limit = param(req, "limit");
                auto j = to_json(st, limit ? std::optional<std::size_t>(std::max(0, parse_int(*limit, "limit")))
                                           : std::nullopt);
                j["version"] = snap.version->number;
                return json_response(200, j);
            }
            if (get && parts.size() == 4 && parts[3] == "documents") {
                auto snap = s.snapshot();
                auto st = s.topic_state(k, *snap.version);
                auto limit = param(req, "limit");
                std::size_t n = limit ? static_cast<std::size_t>(std::max(0, parse_int(*limit, "limit")))
                                      : st.documents.size();
                auto j = to_json(st, n);
                return json_response(200, {{"topic_id", k},
                                           {"version", snap.version->number},
                                           {"document_count", st.documents.size()},
                                           {"documents", j["documents"]}});
            }
            if (post && parts.size() == 4 && parts[3] == "label") {
                auto rec = s.relabel(read_relabel(parse_body(req), k, lambda_default));
                auto j = to_json(rec);
                j["version"] = s.snapshot().version->number;
                return json_response(200, j);
            }
        }
        if (post && parts.size() == 3 && parts[1] == "labels" && parts[2] == "batch") {
            auto body = parse_body(req);
            auto it = body.find("updates");
            if (it == body.end() || !it->is_array()) {
                throw HttpError{400, "bad_request", "expected an 'updates' array"};
            }
            std::vector<RelabelRequest> requests;
            for (auto const& u : *it) {
                if (!u.is_object() || !u.contains("topic_id") || !u["topic_id"].is_number_integer()) {
                    throw HttpError{400, "bad_request", "each update needs an integer topic_id"};
                }
                requests.push_back(read_relabel(u, u["topic_id"].get<int>(), lambda_default));
            }
            Json records = Json::array();
            for (auto const& rec : s.relabel_batch(requests)) {
                records.push_back(to_json(rec));
            }
            return json_response(200, {{"version", s.snapshot().version->number}, {"records", std::move(records)}});
        }
        if (post && parts.size() == 2 && parts[1] == "selections") {
            auto body = parse_body(req);
            if (!body.is_object() || !body.contains("question_id") || !body.contains("doc_ids")) {
                throw HttpError{400, "bad_request", "expected question_id and doc_ids"};
            }
            std::string qid;
            std::vector<std::string> ids;
            std::optional<std::string> question;
            try {
                qid = body["question_id"].is_string() ? body["question_id"].get<std::string>()
                                                      : body["question_id"].dump();
                ids = body["doc_ids"].get<std::vector<std::string>>();
                if (body.contains("question") && !body["question"].is_null()) {
                    question = body["question"].get<std::string>();
                }
            } catch (Json::exception const&) {
                throw HttpError{400, "bad_request", "selection fields have the wrong type"};
            }
            if (ids.size() > kMaxSelection) {
                throw HttpError{400, "selection_limit",
                                "at most " + std::to_string(kMaxSelection) + " documents per question"};
            }
            s.select(qid, ids, question);
            return json_response(200, {{"question_id", qid}, {"doc_ids", ids}});
        }
        if (get && parts.size() == 2 && parts[1] == "report") {
            auto query = param(req, "query");
            if (!query) {
                throw HttpError{400, "bad_request", "missing query"};
            }
            int top_n = 5;
            if (auto t = param(req, "top_n")) {
                top_n = parse_int(*t, "top_n");
                if (top_n < 1) {
                    throw HttpError{400, "bad_request", "top_n must be >= 1"};
                }
            }
            auto report = session_report(s, m_index, *query, top_n);
            if (param(req, "format") == std::optional<std::string>("text")) {
                return {200, "text/plain", render_report(report)};
            }
            return json_response(200, to_json(report));
        }
        if (post && parts.size() == 2 && parts[1] == "undo") {
            s.undo();
            auto snap = s.snapshot();
            return json_response(200, {{"version", snap.version->number}, {"undo_depth", snap.undo_depth}});
        }
        throw HttpError{404, "not_found", "no route " + req.method + " " + req.path};
    } catch (HttpError const& e) {
        return error_response(e.status, e.reason, e.message);
    } catch (OovWordError const& e) {
        return error_response(422, "oov_word", e.what());
    } catch (DuplicateLabelError const& e) {
        return error_response(409, "duplicate_label", e.what());
    } catch (EmptyHistoryError const& e) {
        return error_response(409, "empty_history", e.what());
    } catch (NotFoundError const& e) {
        return error_response(404, "not_found", e.what());
    } catch (InvalidArgument const& e) {
        return error_response(400, "bad_request", e.what());
    } catch (std::exception const& e) {
        return error_response(500, "internal", e.what());
    }
}

void Service::mount(httplib::Server& server)
{
    auto forward = [this](httplib::Request const& in, httplib::Response& out) {
        Request req{in.method, in.path, {in.params.begin(), in.params.end()}, in.body};
        auto res = handle(req);
        out.status = res.status;
        out.set_content(res.body, res.content_type);
    };
    server.Get(R"(/api/.*)", forward);
    server.Post(R"(/api/.*)", forward);
}

void serve(Service& service, std::string const& host, int port)
{
    httplib::Server server;
    service.mount(server);
    if (!server.bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    server.listen_after_bind();
}

}  // namespace intopic
