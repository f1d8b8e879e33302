#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "intopic/eval.hpp"
#include "intopic/interact.hpp"

namespace intopic {

using Json = nlohmann::json;

Json to_json(RelabelRequest const& r);
/// Missing optional fields take the request defaults; `lambda_default`
/// fills an absent lambda. Throws InvalidArgument on bad field types.
RelabelRequest relabel_request_from_json(Json const& j, double lambda_default = 0.5);

/// `max_documents` truncates the document list; beta_row is never included.
Json to_json(TopicState const& s, std::optional<std::size_t> max_documents = std::nullopt);
TopicState topic_state_from_json(Json const& j);

Json to_json(UpdateRecord const& r);
UpdateRecord update_record_from_json(Json const& j);

/// Audit-log line: {"type": "relabel", ...record} or {"type": "undo"}.
Json to_json(LogEntry const& e);
LogEntry log_entry_from_json(Json const& j);

Json to_json(RankingReport const& r);
RankingReport ranking_report_from_json(Json const& j);

/// Missing file reads as an empty log.
std::vector<LogEntry> load_log(std::filesystem::path const& path);
void append_log(std::filesystem::path const& path, LogEntry const& entry);

}  // namespace intopic
