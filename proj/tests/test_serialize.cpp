#include <doctest.h>

#include <fstream>

#include "intopic/error.hpp"
#include "intopic/serialize.hpp"
#include "support.hpp"

using namespace intopic;

namespace {

UpdateRecord sample_record()
{
    UpdateRecord r;
    r.request = {2, "virus", 0.35, RelabelMode::distribution, 0.125, 4};
    r.before.topic_id = 2;
    r.before.top_words = {"cell", "protein"};
    r.before.documents = {{"d1", 0.5}, {"d2", 0.1 + 0.2}};
    r.after = r.before;
    r.after.label = "virus";
    r.after.top_words = {"virus", "cell"};
    r.after.documents.push_back({"d9", 1e-300});
    r.new_documents = {"d9"};
    r.timestamp = "2026-01-02T03:04:05Z";
    return r;
}

}  // namespace

TEST_CASE("relabel request round trip and defaults")
{
    RelabelRequest r{3, "vaccine", 0.75, RelabelMode::embedding_literal, std::nullopt, 7};
    CHECK(relabel_request_from_json(to_json(r)) == r);

    auto minimal = relabel_request_from_json(Json{{"word", "x"}}, 0.4);
    CHECK(minimal.label_word == "x");
    CHECK(minimal.lambda == 0.4);
    CHECK(minimal.mode == RelabelMode::embedding_convex);
    CHECK_FALSE(minimal.delta.has_value());
    CHECK(minimal.neighbor_count == 10);

    CHECK_THROWS_AS(relabel_request_from_json(Json{{"lambda", 0.5}}), InvalidArgument);
    CHECK_THROWS_AS(relabel_request_from_json(Json{{"word", 5}}), InvalidArgument);
    CHECK_THROWS_AS(relabel_request_from_json(Json{{"word", "x"}, {"mode", "bogus"}}), InvalidArgument);
}

TEST_CASE("update record round trip keeps doubles exact")
{
    auto r = sample_record();
    auto back = update_record_from_json(Json::parse(to_json(r).dump()));
    CHECK(back.request == r.request);
    CHECK(back.before.documents == r.before.documents);
    CHECK(back.after.documents == r.after.documents);
    CHECK(back.after.label == r.after.label);
    CHECK(back.after.top_words == r.after.top_words);
    CHECK(back.new_documents == r.new_documents);
    CHECK(back.timestamp == r.timestamp);
    CHECK_FALSE(to_json(r)["after"].contains("beta_row"));
}

TEST_CASE("topic state document limit")
{
    auto r = sample_record();
    auto j = to_json(r.after, 1);
    CHECK(j["documents"].size() == 1);
    CHECK(j["document_count"] == 3);
}

TEST_CASE("log files append and load")
{
    support::TempDir dir("log");
    auto path = dir / "log.jsonl";
    CHECK(load_log(path).empty());
    LogEntry a{LogEntry::Kind::relabel, sample_record(), "t1"};
    LogEntry b{LogEntry::Kind::undo, std::nullopt, "t2"};
    append_log(path, a);
    append_log(path, b);
    auto back = load_log(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].kind == LogEntry::Kind::relabel);
    CHECK(back[0].record->request == a.record->request);
    CHECK(back[1].kind == LogEntry::Kind::undo);
    CHECK(back[1].timestamp == "t2");

    std::ofstream(path, std::ios::app) << "{not json\n";
    try {
        load_log(path);
        FAIL("expected a parse error");
    } catch (ParseError const& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("ranking report round trip")
{
    RankingReport r;
    r.query = "virus";
    r.top_n = 3;
    TopicRanking t;
    t.topic_id = 1;
    t.after = 0.3;
    t.new_documents = 4;
    r.topics = {t};
    r.aggregate_after = 0.3;
    auto j = to_json(r);
    CHECK(j["topics"][0]["before"].is_null());
    CHECK(j["topics"][0]["delta"].is_null());
    auto back = ranking_report_from_json(j);
    CHECK(back.query == r.query);
    CHECK(back.topics[0].after == t.after);
    CHECK_FALSE(back.topics[0].before.has_value());
    CHECK(back.aggregate_after == r.aggregate_after);
}
