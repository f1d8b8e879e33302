#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "intopic/error.hpp"
#include "intopic/eval.hpp"
#include "intopic/interact.hpp"
#include "support.hpp"

using namespace intopic;

namespace {

RowVector rv(std::initializer_list<double> xs)
{
    RowVector r(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) {
        r[i++] = x;
    }
    return r;
}

struct Fixture {
    support::Planted planted;
    std::shared_ptr<TopicContext const> context;
    /// Learned topic matched to each planted block.
    std::vector<int> topic_of_block;
};

Fixture const& fixture()
{
    static Fixture const f = [] {
        Fixture fx;
        SyntheticOptions so;
        so.seed = 5;
        fx.planted = support::planted(so, 50);
        EtmConfig c;
        c.topics = 3;
        c.embedding_dim = 50;
        c.hidden = 100;
        c.epochs = 60;
        c.seed = 12;
        auto model = std::make_shared<EtmModel>(train(fx.planted.bow, fx.planted.rho, c));
        fx.context = make_topic_context(model, fx.planted.synth.documents);
        std::vector<std::vector<std::string>> learned, blocks;
        for (int k = 0; k < 3; ++k) {
            learned.push_back(top_words(row_span(model->beta, k), 10, model->vocab.words()));
            blocks.push_back(fx.planted.synth.block_words(k));
        }
        auto m = match_topics(learned, blocks);
        fx.topic_of_block.assign(3, -1);
        for (int k = 0; k < 3; ++k) {
            if (m[static_cast<std::size_t>(k)] >= 0) {
                fx.topic_of_block[static_cast<std::size_t>(m[static_cast<std::size_t>(k)])] = k;
            }
        }
        return fx;
    }();
    return f;
}

}  // namespace

TEST_CASE("literal update matches hand arithmetic")
{
    auto lit = RelabelMode::embedding_literal;
    // alpha' = lambda (w - alpha) + (1 - lambda) alpha
    auto a1 = move_topic_embedding(rv({1, 0}), rv({0, 1}), 0.5, lit);
    CHECK(a1 == rv({0, 0.5}));
    auto a2 = move_topic_embedding(rv({2, -1, 4}), rv({0, 3, 4}), 0.25, lit);
    CHECK(a2 == rv({0.25 * -2 + 0.75 * 2, 0.25 * 4 + 0.75 * -1, 0.25 * 0 + 0.75 * 4}));
    CHECK(a2 == rv({1.0, 0.25, 3.0}));
    auto a3 = move_topic_embedding(rv({0.5, 0.5}), rv({1.5, -0.5}), 1.0, lit);
    CHECK(a3 == rv({1.0, -1.0}));
}

TEST_CASE("lambda endpoints")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int t = 0; t < 20; ++t) {
        RowVector a(6), w(6);
        for (int j = 0; j < 6; ++j) {
            a[j] = n(rng);
            w[j] = n(rng);
        }
        CHECK(move_topic_embedding(a, w, 0.0, RelabelMode::embedding_literal) == a);
        CHECK(move_topic_embedding(a, w, 0.0, RelabelMode::embedding_convex) == a);
        CHECK(move_topic_embedding(a, w, 1.0, RelabelMode::embedding_convex) == w);
    }
    CHECK_THROWS_AS(move_topic_embedding(rv({1}), rv({1}), 1.5, RelabelMode::embedding_convex), InvalidArgument);
    CHECK_THROWS_AS(move_topic_embedding(rv({1}), rv({1}), -0.1, RelabelMode::embedding_convex), InvalidArgument);
}

TEST_CASE("distribution boost worked example")
{
    std::vector<double> beta{0.5, 0.3, 0.2};
    CHECK(default_boost(beta, 2) == doctest::Approx(0.3).epsilon(1e-15));
    auto out = boost_distribution(beta, 2, 0.3, {}, 0.0);
    CHECK(out[0] == doctest::Approx(0.5 / 1.3).epsilon(1e-12));
    CHECK(std::abs(out[0] - 0.3846) < 1e-4);
    CHECK(std::abs(out[1] - 0.2308) < 1e-4);
    CHECK(std::abs(out[2] - 0.3846) < 1e-4);
    CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distribution boost spreads to neighbors by similarity")
{
    std::vector<double> beta{0.4, 0.3, 0.2, 0.1};
    std::vector<WeightedWord> nb{{1, 0.5}, {3, 0.0}};
    auto out = boost_distribution(beta, 2, 0.2, nb, 0.4);
    double total = 1.0 + 0.2 + 0.4 * 0.5 * 0.2;
    CHECK(std::abs(out[1] * total - 0.3 - 0.04) < 1e-12);
    CHECK(std::abs(out[2] * total - 0.4) < 1e-12);
    // a zero-similarity neighbor keeps its ratio to untouched words
    CHECK(out[3] / out[0] == doctest::Approx(0.1 / 0.4).epsilon(1e-12));
    CHECK(out[2] > beta[2]);
    CHECK(std::abs(out.sum() - 1.0) < 1e-9);
}

TEST_CASE("reassign_documents follows the score definition")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int const K = 3, V = 6, D = 12;
    Matrix beta(K, V), theta(D, K);
    for (int k = 0; k < K; ++k) {
        for (int v = 0; v < V; ++v) {
            beta(k, v) = u(rng);
        }
        beta.row(k) /= beta.row(k).sum();
    }
    for (int d = 0; d < D; ++d) {
        for (int k = 0; k < K; ++k) {
            theta(d, k) = u(rng);
        }
        theta.row(d) /= theta.row(d).sum();
    }
    BowCorpus corpus;
    for (int d = 0; d < D; ++d) {
        corpus.doc_ids.push_back("d" + std::to_string(d));
        BowRow row;
        int len = 0;
        for (int v = 0; v < V; ++v) {
            int c = d == 0 ? 0 : static_cast<int>(rng() % 3);
            if (c) {
                row.push_back({v, c});
                len += c;
            }
        }
        corpus.rows.push_back(row);
        corpus.doc_lengths.push_back(len);
    }

    auto a = reassign_documents(beta, theta, corpus);
    for (int d = 0; d < D; ++d) {
        std::vector<double> s(K);
        for (int k = 0; k < K; ++k) {
            double ll = 0;
            for (auto const& e : corpus.rows[d]) {
                ll += e.count * std::log(beta(k, e.word));
            }
            double n = corpus.doc_lengths[d];
            s[k] = theta(d, k) * (n > 0 ? std::exp(ll / n) : 1.0);
        }
        int best = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
        CHECK(a.topic_of_doc[d] == best);
        CHECK(a.score_of_doc[d] == doctest::Approx(s[best]).epsilon(1e-12));
    }
    for (auto const& docs : a.topic_docs) {
        for (std::size_t i = 1; i < docs.size(); ++i) {
            CHECK(a.score_of_doc[docs[i - 1]] >= a.score_of_doc[docs[i]]);
        }
    }
    auto again = reassign_documents(beta, theta, corpus);
    CHECK(again.topic_of_doc == a.topic_of_doc);
    CHECK(again.score_of_doc == a.score_of_doc);

    Matrix flat = Matrix::Constant(K, V, 1.0 / V);
    auto f = reassign_documents(flat, theta, corpus);
    for (int d = 0; d < D; ++d) {
        Eigen::Index best;
        theta.row(d).maxCoeff(&best);
        CHECK(f.topic_of_doc[d] == best);
    }
}

TEST_CASE("diff_documents")
{
    TopicState a, b;
    a.documents = {{"d1", 0.5}, {"d2", 0.4}};
    b.documents = {{"d2", 0.6}, {"d3", 0.1}};
    CHECK(diff_documents(a, a).empty());
    CHECK(diff_documents(a, b) == std::vector<std::string>{"d3"});
    b.topic_id = 4;
    CHECK_THROWS_AS(diff_documents(a, b), InvalidArgument);

    std::mt19937_64 rng(1);
    for (int t = 0; t < 30; ++t) {
        TopicState x, y;
        std::set<std::string> sx;
        for (int i = 0; i < 20; ++i) {
            auto id = "d" + std::to_string(i);
            if (rng() % 2) {
                x.documents.push_back({id, 0.0});
                sx.insert(id);
            }
            if (rng() % 2) {
                y.documents.push_back({id, 0.0});
            }
        }
        std::vector<std::string> expect;
        for (auto const& d : y.documents) {
            if (!sx.count(d.doc_id)) {
                expect.push_back(d.doc_id);
            }
        }
        CHECK(diff_documents(x, y) == expect);
    }
}

TEST_CASE("relabel with lambda 0 changes nothing but the label")
{
    Workbench wb(fixture().context);
    auto v0 = wb.current();
    for (auto mode : {RelabelMode::embedding_convex, RelabelMode::embedding_literal}) {
        Workbench w(fixture().context);
        auto rec = w.relabel({0, "w005", 0.0, mode, std::nullopt, 10});
        CHECK(w.current()->beta == v0->beta);
        CHECK(w.current()->alpha == v0->alpha);
        CHECK(rec.after.top_words == rec.before.top_words);
        CHECK(rec.after.documents == rec.before.documents);
        CHECK(rec.new_documents.empty());
        CHECK(rec.after.label == std::optional<std::string>("w005"));
    }
}

TEST_CASE("relabel touches only its own topic row")
{
    for (auto mode : {RelabelMode::embedding_convex, RelabelMode::embedding_literal, RelabelMode::distribution}) {
        Workbench w(fixture().context);
        auto before = w.current();
        w.relabel({1, "w025", 0.7, mode, std::nullopt, 5});
        auto after = w.current();
        CHECK(after->beta.row(1) != before->beta.row(1));
        CHECK(after->beta.row(0) == before->beta.row(0));
        CHECK(after->beta.row(2) == before->beta.row(2));
        CHECK(after->alpha.row(0) == before->alpha.row(0));
        CHECK(std::abs(after->beta.row(1).sum() - 1.0) < 1e-9);
        CHECK(after->number == 1);
        if (mode == RelabelMode::distribution) {
            CHECK(after->alpha == before->alpha);
            int w25 = *fixture().context->model->vocab.index_of("w025");
            CHECK(after->beta(1, w25) > before->beta(1, w25));
        } else {
            CHECK(after->beta.row(1) == compute_beta_row(fixture().context->model->params.rho, after->alpha.row(1)));
        }
    }
}

TEST_CASE("relabel safeguards")
{
    Workbench w(fixture().context);
    CHECK_THROWS_AS(w.relabel({0, "nonword", 0.5}), OovWordError);
    CHECK_THROWS_AS(w.relabel({7, "w001", 0.5}), NotFoundError);
    CHECK_THROWS_AS(w.relabel({0, "w001", 1.5}), InvalidArgument);
    CHECK_THROWS_AS(w.relabel({0, "", 0.5}), InvalidArgument);
    w.relabel({0, "w001", 0.5});
    CHECK_THROWS_AS(w.relabel({1, "w001", 0.5}), DuplicateLabelError);
    CHECK_NOTHROW(w.relabel({0, "w001", 0.5}));
    CHECK(w.log().size() == 2);
}

TEST_CASE("undo restores earlier versions bit for bit")
{
    Workbench w(fixture().context);
    CHECK_THROWS_AS(w.undo(), EmptyHistoryError);
    auto v0 = w.current();
    w.relabel({0, "w012", 0.6});
    auto v1 = w.current();
    w.relabel({2, "w021", 0.9, RelabelMode::distribution});
    w.undo();
    CHECK(w.current()->beta == v1->beta);
    CHECK(w.current()->labels == v1->labels);
    w.undo();
    CHECK(w.current()->beta == v0->beta);
    CHECK(w.current()->alpha == v0->alpha);
    CHECK_THROWS_AS(w.undo(), EmptyHistoryError);
    CHECK(w.log().size() == 4);
}

TEST_CASE("replaying the log reproduces the current version exactly")
{
    Workbench w(fixture().context);
    w.relabel({0, "w012", 0.6});
    w.relabel({2, "w021", 0.9, RelabelMode::distribution});
    w.undo();
    w.relabel({1, "w003", 0.3, RelabelMode::embedding_literal});
    Workbench r(fixture().context);
    r.replay(w.log());
    CHECK(r.current()->beta == w.current()->beta);
    CHECK(r.current()->alpha == w.current()->alpha);
    CHECK(r.current()->labels == w.current()->labels);
    CHECK(r.current()->assignment.topic_of_doc == w.current()->assignment.topic_of_doc);
    CHECK(r.current()->assignment.score_of_doc == w.current()->assignment.score_of_doc);
}

TEST_CASE("boosting a topic toward block-1 words pulls in block-1 documents")
{
    auto const& fx = fixture();
    int owner = fx.topic_of_block[1];
    REQUIRE(owner >= 0);
    int target = (owner + 1) % 3;
    Workbench w(fx.context);
    auto rec = w.relabel({target, fx.planted.synth.block_words(1)[0], 1.0, RelabelMode::distribution});
    REQUIRE_FALSE(rec.new_documents.empty());
    bool block1 = false;
    for (auto const& id : rec.new_documents) {
        auto d = *fx.context->doc_index(id);
        block1 = block1 || fx.planted.synth.planted_topic[d] == 1;
    }
    CHECK(block1);
}

TEST_CASE("parse_relabel_mode")
{
    CHECK(parse_relabel_mode("literal") == RelabelMode::embedding_literal);
    CHECK(parse_relabel_mode("convex") == RelabelMode::embedding_convex);
    CHECK(parse_relabel_mode("distribution") == RelabelMode::distribution);
    for (auto m : {RelabelMode::embedding_literal, RelabelMode::embedding_convex, RelabelMode::distribution}) {
        CHECK(parse_relabel_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_relabel_mode("sideways"), InvalidArgument);
}
