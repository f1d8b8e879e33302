#include "intopic/serialize.hpp"

#include <fstream>

#include "intopic/error.hpp"

namespace intopic {

namespace {

template <typename T>
T field(Json const& j, char const* key)
{
    auto it = j.find(key);
    if (it == j.end()) {
        throw InvalidArgument(std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (Json::exception const&) {
        throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(Json const& j, char const* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->get<T>();
    } catch (Json::exception const&) {
        throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
    }
}

Json optional_json(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(RelabelRequest const& r)
{
    Json j = {
        {"topic_id", r.topic_id},
        {"word", r.label_word},
        {"lambda", r.lambda},
        {"mode", to_string(r.mode)},
        {"neighbor_count", r.neighbor_count},
    };
    j["delta"] = optional_json(r.delta);
    return j;
}

RelabelRequest relabel_request_from_json(Json const& j, double lambda_default)
{
    if (!j.is_object()) {
        throw InvalidArgument("relabel request must be an object");
    }
    RelabelRequest r;
    r.topic_id = optional_field<int>(j, "topic_id").value_or(0);
    r.label_word = field<std::string>(j, "word");
    r.lambda = optional_field<double>(j, "lambda").value_or(lambda_default);
    if (auto mode = optional_field<std::string>(j, "mode")) {
        r.mode = parse_relabel_mode(*mode);
    }
    r.delta = optional_field<double>(j, "delta");
    r.neighbor_count = optional_field<int>(j, "neighbor_count").value_or(r.neighbor_count);
    return r;
}

Json to_json(TopicState const& s, std::optional<std::size_t> max_documents)
{
    Json docs = Json::array();
    auto n = std::min(s.documents.size(), max_documents.value_or(s.documents.size()));
    for (std::size_t i = 0; i < n; ++i) {
        docs.push_back({{"id", s.documents[i].doc_id}, {"score", s.documents[i].score}});
    }
    Json j = {
        {"topic_id", s.topic_id},
        {"top_words", s.top_words},
        {"document_count", s.documents.size()},
        {"documents", std::move(docs)},
    };
    j["label"] = s.label ? Json(*s.label) : Json(nullptr);
    return j;
}

TopicState topic_state_from_json(Json const& j)
{
    TopicState s;
    s.topic_id = field<int>(j, "topic_id");
    s.label = optional_field<std::string>(j, "label");
    s.top_words = field<std::vector<std::string>>(j, "top_words");
    for (auto const& d : field<Json>(j, "documents")) {
        s.documents.push_back({field<std::string>(d, "id"), field<double>(d, "score")});
    }
    return s;
}

Json to_json(UpdateRecord const& r)
{
    return {
        {"request", to_json(r.request)},
        {"before", to_json(r.before)},
        {"after", to_json(r.after)},
        {"new_documents", r.new_documents},
        {"timestamp", r.timestamp},
    };
}

UpdateRecord update_record_from_json(Json const& j)
{
    UpdateRecord r;
    r.request = relabel_request_from_json(field<Json>(j, "request"));
    r.before = topic_state_from_json(field<Json>(j, "before"));
    r.after = topic_state_from_json(field<Json>(j, "after"));
    r.new_documents = field<std::vector<std::string>>(j, "new_documents");
    r.timestamp = optional_field<std::string>(j, "timestamp").value_or("");
    return r;
}

Json to_json(LogEntry const& e)
{
    if (e.kind == LogEntry::Kind::undo) {
        return {{"type", "undo"}, {"timestamp", e.timestamp}};
    }
    Json j = to_json(*e.record);
    j["type"] = "relabel";
    return j;
}

LogEntry log_entry_from_json(Json const& j)
{
    auto type = field<std::string>(j, "type");
    LogEntry e;
    e.timestamp = optional_field<std::string>(j, "timestamp").value_or("");
    if (type == "undo") {
        e.kind = LogEntry::Kind::undo;
    } else if (type == "relabel") {
        e.kind = LogEntry::Kind::relabel;
        e.record = update_record_from_json(j);
    } else {
        throw InvalidArgument("unknown log entry type '" + type + "'");
    }
    return e;
}

Json to_json(RankingReport const& r)
{
    Json topics = Json::array();
    for (auto const& t : r.topics) {
        topics.push_back({
            {"topic_id", t.topic_id},
            {"before", optional_json(t.before)},
            {"after", optional_json(t.after)},
            {"delta", optional_json(t.delta())},
            {"new_documents", t.new_documents},
        });
    }
    return {
        {"query", r.query},
        {"top_n", r.top_n},
        {"topics", std::move(topics)},
        {"aggregate", {{"before", optional_json(r.aggregate_before)}, {"after", optional_json(r.aggregate_after)}}},
    };
}

RankingReport ranking_report_from_json(Json const& j)
{
    RankingReport r;
    r.query = field<std::string>(j, "query");
    r.top_n = field<int>(j, "top_n");
    for (auto const& t : field<Json>(j, "topics")) {
        TopicRanking tr;
        tr.topic_id = field<int>(t, "topic_id");
        tr.before = optional_field<double>(t, "before");
        tr.after = optional_field<double>(t, "after");
        tr.new_documents = field<int>(t, "new_documents");
        r.topics.push_back(tr);
    }
    auto agg = field<Json>(j, "aggregate");
    r.aggregate_before = optional_field<double>(agg, "before");
    r.aggregate_after = optional_field<double>(agg, "after");
    return r;
}

std::vector<LogEntry> load_log(std::filesystem::path const& path)
{
    std::vector<LogEntry> out;
    std::ifstream in(path);
    if (!in) {
        return out;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(log_entry_from_json(Json::parse(line)));
        } catch (Json::exception const& e) {
            throw ParseError(std::string("invalid log entry: ") + e.what(), lineno);
        } catch (InvalidArgument const& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

void append_log(std::filesystem::path const& path, LogEntry const& entry)
{
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw Error("cannot append to log " + path.string());
    }
    out << to_json(entry).dump() << '\n';
}

}  // namespace intopic
