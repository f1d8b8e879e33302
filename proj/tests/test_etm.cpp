#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "intopic/error.hpp"
#include "intopic/etm.hpp"
#include "intopic/eval.hpp"
#include "support.hpp"

using namespace intopic;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, double scale, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

Vector random_vector(Eigen::Index n, double scale, std::mt19937_64& rng)
{
    Matrix m = random_matrix(n, 1, scale, rng);
    return Eigen::Map<Vector>(m.data(), n);
}

EtmParams random_params(int V, int K, int L, int H, double scale, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    EtmParams p;
    p.rho = random_matrix(V, L, 1.0, rng);
    p.alpha = random_matrix(K, L, scale, rng);
    p.encoder.w_in = random_matrix(V, H, scale, rng);
    p.encoder.b_in = random_vector(H, scale, rng);
    p.encoder.w_mu = random_matrix(K, H, scale, rng);
    p.encoder.b_mu = random_vector(K, scale, rng);
    p.encoder.w_logvar = random_matrix(K, H, scale, rng);
    p.encoder.b_logvar = random_vector(K, scale, rng);
    return p;
}

EtmParams zero_encoder_params(Matrix rho, Matrix alpha, int H)
{
    EtmParams p;
    auto V = rho.rows();
    auto K = alpha.rows();
    p.rho = std::move(rho);
    p.alpha = std::move(alpha);
    p.encoder.w_in = Matrix::Zero(V, H);
    p.encoder.b_in = Vector::Zero(H);
    p.encoder.w_mu = Matrix::Zero(K, H);
    p.encoder.b_mu = Vector::Zero(K);
    p.encoder.w_logvar = Matrix::Zero(K, H);
    p.encoder.b_logvar = Vector::Zero(K);
    return p;
}

std::vector<BowRow> random_rows(int D, int V, std::mt19937_64& rng)
{
    std::vector<BowRow> rows(D);
    for (auto& row : rows) {
        for (int v = 0; v < V; ++v) {
            if (rng() % 3 == 0) {
                row.push_back({v, 1 + static_cast<int>(rng() % 4)});
            }
        }
        if (row.empty()) {
            row.push_back({0, 1});
        }
    }
    return rows;
}

int length(BowRow const& row)
{
    int n = 0;
    for (auto const& e : row) {
        n += e.count;
    }
    return n;
}

double softplus_ref(double z) { return std::log(1.0 + std::exp(z)); }

}  // namespace

TEST_CASE("compute_beta")
{
    Matrix rho(3, 1);
    rho << std::log(2.0), 0.0, 0.0;
    Matrix alpha(1, 1);
    alpha << 1.0;
    auto beta = compute_beta(rho, alpha);
    CHECK(beta(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(beta(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(beta(0, 2) == doctest::Approx(0.25).epsilon(1e-12));

    Matrix flat = Matrix::Ones(4, 2);
    Matrix a(2, 2);
    a << 0.3, 0.3, -1.0, 2.0;
    auto uni = compute_beta(flat, Matrix(a.col(0).replicate(1, 2)));
    for (Eigen::Index v = 0; v < 4; ++v) {
        CHECK(uni(0, v) == doctest::Approx(0.25).epsilon(1e-15));
    }
}

TEST_CASE("beta rows are distributions and a single row recomputes bit for bit")
{
    auto p = random_params(50, 7, 8, 4, 1.0, 17);
    auto beta = compute_beta(p);
    for (Eigen::Index k = 0; k < beta.rows(); ++k) {
        CHECK(beta.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(beta.row(k).minCoeff() >= 0.0);
        RowVector row = compute_beta_row(p.rho, p.alpha.row(k));
        CHECK(row == beta.row(k));
    }
}

TEST_CASE("encode: zero weights and hand-sized forward pass")
{
    auto p = zero_encoder_params(Matrix::Zero(2, 1), Matrix::Zero(2, 1), 2);
    BowRow none;
    auto z = encode(p.encoder, none, 0);
    CHECK(z.mu == Vector::Zero(2));
    CHECK(z.logvar == Vector::Zero(2));

    Encoder e;
    e.w_in.resize(2, 2);
    e.w_in << 1.0, -1.0, 0.5, 2.0;
    e.b_in.resize(2);
    e.b_in << 0.1, -0.2;
    e.w_mu.resize(2, 2);
    e.w_mu << 1.0, 0.0, -0.5, 0.25;
    e.b_mu.resize(2);
    e.b_mu << 0.0, 0.3;
    e.w_logvar.resize(2, 2);
    e.w_logvar << 0.2, 0.2, -1.0, 1.0;
    e.b_logvar.resize(2);
    e.b_logvar << -0.1, 0.0;

    // counts (3, 1): x = (0.75, 0.25)
    BowRow row{{0, 3}, {1, 1}};
    double h0 = softplus_ref(0.75 * 1.0 + 0.25 * 0.5 + 0.1);
    double h1 = softplus_ref(0.75 * -1.0 + 0.25 * 2.0 - 0.2);
    auto out = encode(e, row, 4);
    CHECK(out.mu(0) == doctest::Approx(h0).epsilon(1e-14));
    CHECK(out.mu(1) == doctest::Approx(-0.5 * h0 + 0.25 * h1 + 0.3).epsilon(1e-14));
    CHECK(out.logvar(0) == doctest::Approx(0.2 * h0 + 0.2 * h1 - 0.1).epsilon(1e-14));
    CHECK(out.logvar(1) == doctest::Approx(-h0 + h1).epsilon(1e-14));

    auto again = encode(e, row, 4);
    CHECK(again.mu == out.mu);
    CHECK(again.logvar == out.logvar);

    Vector dense(2);
    dense << 0.75, 0.25;
    auto d = encode(e, dense);
    CHECK(d.mu == out.mu);

    e.b_logvar << 50.0, -50.0;
    auto clamped = encode(e, row, 4);
    CHECK(clamped.logvar(0) == kLogvarMax);
    CHECK(clamped.logvar(1) == kLogvarMin);
}

TEST_CASE("reparameterize")
{
    Vector mu(2), lv(2), z(2);
    mu << 0.3, -1.0;
    lv << 0.0, 0.0;
    z << 1.5, -0.5;
    auto det = reparameterize(mu, lv, std::nullopt);
    CHECK(det.delta == mu);
    auto noisy = reparameterize(mu, lv, z);
    CHECK(noisy.delta(0) == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(noisy.delta(1) == doctest::Approx(-1.5).epsilon(1e-15));
    auto sym = reparameterize(Vector::Zero(2), Vector::Zero(2), std::nullopt);
    CHECK(sym.theta(0) == 0.5);
    CHECK(sym.theta(1) == 0.5);

    lv << std::log(4.0), 0.0;
    auto scaled = reparameterize(mu, lv, z);
    CHECK(scaled.delta(0) == doctest::Approx(0.3 + 2.0 * 1.5).epsilon(1e-14));
}

TEST_CASE("elbo special cases")
{
    auto p = zero_encoder_params(Matrix::Zero(5, 2), Matrix::Zero(3, 2), 4);
    BowRow row{{0, 2}, {3, 1}, {4, 4}};
    Vector noise(3);
    noise << 0.4, -1.0, 2.0;
    auto terms = elbo(row, 7, p, std::nullopt);
    CHECK(terms.kl == 0.0);
    CHECK(terms.recon == doctest::Approx(7.0 * std::log(0.2 + 1e-10)).epsilon(1e-14));
    auto noisy = elbo(row, 7, p, noise);
    CHECK(noisy.recon == doctest::Approx(7.0 * std::log(0.2 + 1e-10)).epsilon(1e-14));
    CHECK(noisy.loss == doctest::Approx(-noisy.recon + noisy.kl).epsilon(1e-15));
}

TEST_CASE("elbo hand instance: 3-word document, K = 2")
{
    // beta rows from rho (3x1) and alpha (2x1); encoder outputs mu = b_mu,
    // logvar = b_logvar because all weights are zero.
    Matrix rho(3, 1);
    rho << 1.0, 0.0, -1.0;
    Matrix alpha(2, 1);
    alpha << 0.5, -2.0;
    auto p = zero_encoder_params(rho, alpha, 2);
    p.encoder.b_mu << 0.2, -0.3;
    p.encoder.b_logvar << 0.1, -0.4;
    BowRow row{{0, 1}, {1, 2}};
    Vector noise(2);
    noise << 0.7, -1.1;

    double delta0 = 0.2 + std::exp(0.05) * 0.7;
    double delta1 = -0.3 + std::exp(-0.2) * -1.1;
    double t0 = std::exp(delta0) / (std::exp(delta0) + std::exp(delta1));
    double t1 = 1.0 - t0;
    auto b = [](double a, int v) {
        double z = std::exp(a) + 1.0 + std::exp(-a);
        double logits[3] = {a, 0.0, -a};
        return std::exp(logits[v]) / z;
    };
    double p0 = t0 * b(0.5, 0) + t1 * b(-2.0, 0);
    double p1 = t0 * b(0.5, 1) + t1 * b(-2.0, 1);
    double recon = std::log(p0 + 1e-10) + 2.0 * std::log(p1 + 1e-10);
    double kl = 0.5 * ((std::exp(0.1) + 0.04 - 1.0 - 0.1) + (std::exp(-0.4) + 0.09 - 1.0 + 0.4));

    auto terms = elbo(row, 3, p, noise);
    CHECK(std::abs(terms.recon - recon) < 1e-9);
    CHECK(std::abs(terms.kl - kl) < 1e-9);
    CHECK(std::abs(terms.loss - (kl - recon)) < 1e-9);
}

TEST_CASE("analytic gradients match central finite differences")
{
    int const V = 20, K = 3, L = 6, H = 16, D = 5;
    auto p = random_params(V, K, L, H, 0.3, 101);
    std::mt19937_64 rng(7);
    auto rows = random_rows(D, V, rng);
    std::vector<BatchDoc> batch;
    for (auto const& r : rows) {
        batch.push_back({&r, length(r), random_vector(K, 1.0, rng)});
    }
    auto g = grad_elbo(batch, p, true);
    CHECK(g.mean_loss == doctest::Approx(batch_loss(batch, p)).epsilon(1e-14));

    double const h = 1e-5;
    double worst = 0.0;
    std::string worst_block;
    auto pb = p.blocks(true);
    auto gb = g.grads.blocks(true);
    for (std::size_t b = 0; b < pb.size(); ++b) {
        for (std::size_t i = 0; i < pb[b].values.size(); ++i) {
            double& x = pb[b].values[i];
            double const x0 = x;
            x = x0 + h;
            double up = batch_loss(batch, p);
            x = x0 - h;
            double down = batch_loss(batch, p);
            x = x0;
            double numeric = (up - down) / (2 * h);
            double analytic = gb[b].values[i];
            double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-5});
            if (rel > worst) {
                worst = rel;
                worst_block = pb[b].name;
            }
        }
    }
    INFO("worst block " << worst_block);
    CHECK(worst < 1e-4);
}

TEST_CASE("rho gradient is zero unless train_rho")
{
    auto p = random_params(8, 2, 3, 4, 0.3, 5);
    std::mt19937_64 rng(1);
    auto rows = random_rows(3, 8, rng);
    std::vector<BatchDoc> batch;
    for (auto const& r : rows) {
        batch.push_back({&r, length(r), Vector{}});
    }
    auto g = grad_elbo(batch, p, false);
    CHECK(g.grads.rho.isZero(0.0));
    auto g2 = grad_elbo(batch, p, true);
    CHECK_FALSE(g2.grads.rho.isZero(0.0));
    CHECK(g2.grads.alpha == g.grads.alpha);
}

TEST_CASE("flat instance: alpha gradient vanishes when beta ignores alpha")
{
    std::mt19937_64 rng(2);
    auto p = random_params(6, 3, 4, 5, 0.3, 9);
    p.rho.setZero();
    auto rows = random_rows(4, 6, rng);
    std::vector<BatchDoc> batch;
    for (auto const& r : rows) {
        batch.push_back({&r, length(r), random_vector(3, 1.0, rng)});
    }
    auto g = grad_elbo(batch, p, false);
    CHECK(g.grads.alpha.isZero(0.0));
}

TEST_CASE("doubling a document's counts doubles the alpha gradient")
{
    auto p = random_params(10, 3, 4, 6, 0.3, 31);
    BowRow row{{1, 2}, {4, 1}, {7, 3}};
    BowRow twice{{1, 4}, {4, 2}, {7, 6}};
    std::mt19937_64 rng(4);
    Vector noise = random_vector(3, 1.0, rng);
    BatchDoc a{&row, 6, noise};
    BatchDoc b{&twice, 12, noise};
    auto g1 = grad_elbo(std::span<BatchDoc const>(&a, 1), p, true);
    auto g2 = grad_elbo(std::span<BatchDoc const>(&b, 1), p, true);
    CHECK((g2.grads.alpha - 2.0 * g1.grads.alpha).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g2.grads.rho - 2.0 * g1.grads.rho).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam hand traces")
{
    AdamOptions opt;
    std::vector<double> x{1.0}, g{0.0}, m{0.0}, v{0.0};
    adam_update(x, g, m, v, 1, opt);
    CHECK(x[0] == 1.0);

    x = {1.0};
    g = {0.1};
    m = {0.0};
    v = {0.0};
    adam_update(x, g, m, v, 1, opt);
    // m = 0.01, v = 1e-5; mhat = 0.1, vhat = 0.01
    double step1 = 0.005 * 0.1 / (std::sqrt(0.01) + 1e-8);
    CHECK(std::abs(x[0] - (1.0 - step1)) < 1e-15);
    CHECK(std::abs((1.0 - x[0]) - 0.005) < 1e-6);

    g = {-0.3};
    adam_update(x, g, m, v, 2, opt);
    double m2 = 0.9 * 0.01 + 0.1 * -0.3;
    double v2 = 0.999 * 1e-5 + 0.001 * 0.09;
    double mhat = m2 / (1 - 0.81);
    double vhat = v2 / (1 - 0.999 * 0.999);
    CHECK(std::abs(m[0] - m2) < 1e-16);
    CHECK(std::abs(v[0] - v2) < 1e-18);
    CHECK(std::abs(x[0] - (1.0 - step1 - 0.005 * mhat / (std::sqrt(vhat) + 1e-8))) < 1e-15);
}

TEST_CASE("adam_step leaves rho alone unless trained")
{
    auto p = random_params(5, 2, 3, 4, 0.3, 1);
    auto before = p;
    auto grads = p;  // any non-zero gradient
    auto state = AdamState::for_params(p);
    adam_step(p, grads, state, {}, false);
    CHECK(p.rho == before.rho);
    CHECK(p.alpha != before.alpha);
    CHECK(state.step == 1);
}

TEST_CASE("init_params is seeded with the documented scales")
{
    EtmConfig c;
    c.topics = 5;
    c.embedding_dim = 40;
    c.hidden = 200;
    c.seed = 3;
    std::mt19937_64 rng(0);
    Matrix rho = random_matrix(300, 40, 1.0, rng);
    auto a = init_params(rho, c);
    auto b = init_params(rho, c);
    CHECK(a.alpha == b.alpha);
    CHECK(a.encoder.w_in == b.encoder.w_in);
    CHECK(a.encoder.b_in.isZero(0.0));
    CHECK(a.encoder.b_mu.isZero(0.0));
    double sd = std::sqrt(a.encoder.w_in.squaredNorm() / static_cast<double>(a.encoder.w_in.size()));
    CHECK(sd == doctest::Approx(0.02).epsilon(0.02));
    c.seed = 4;
    CHECK(init_params(rho, c).alpha != a.alpha);
}

TEST_CASE("training is deterministic and learns the planted topics")
{
    SyntheticOptions so;
    so.seed = 5;
    auto pl = support::planted(so, 50);
    EtmConfig c;
    c.topics = 3;
    c.embedding_dim = 50;
    c.hidden = 100;
    c.epochs = 60;
    c.seed = 12;
    std::vector<double> seen;
    auto m1 = train(pl.bow, pl.rho, c, [&](int, double loss) { seen.push_back(loss); });
    auto m2 = train(pl.bow, pl.rho, c);
    CHECK(m1.params.alpha == m2.params.alpha);
    CHECK(m1.params.encoder.w_in == m2.params.encoder.w_in);
    CHECK(m1.loss_curve == m2.loss_curve);
    CHECK(m1.loss_curve == seen);
    CHECK(m1.loss_curve.size() == 60u);
    CHECK(m1.loss_curve.back() < m1.loss_curve.front());
    CHECK(m1.params.rho == pl.rho);

    auto theta = infer_theta_all(m1.params.encoder, pl.bow);
    std::vector<std::vector<std::string>> learned, planted;
    for (int k = 0; k < 3; ++k) {
        learned.push_back(top_words(row_span(m1.beta, k), 10, m1.vocab.words()));
        planted.push_back(pl.synth.block_words(k));
    }
    auto matching = match_topics(learned, planted);
    CHECK(assignment_accuracy(theta, matching, pl.synth.planted_topic) >= 0.7);
    for (Eigen::Index d = 0; d < theta.rows(); ++d) {
        CHECK(theta.row(d).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("training rejects non-finite input")
{
    auto bow = support::bow_all({support::doc("a", "alpha beta beta"), support::doc("b", "beta gamma")});
    Matrix rho = Matrix::Ones(static_cast<Eigen::Index>(bow.num_words()), 4);
    rho(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EtmConfig c;
    c.topics = 2;
    c.embedding_dim = 4;
    c.hidden = 3;
    c.epochs = 1;
    CHECK_THROWS_AS(train(bow, rho, c), Error);
}

TEST_CASE("infer_theta on an empty document")
{
    auto p = random_params(6, 3, 4, 5, 0.5, 8);
    BowRow none;
    auto post = infer_theta(p.encoder, none, 0);
    Vector h = p.encoder.b_in.unaryExpr([](double z) { return softplus_ref(z); });
    Vector mu = p.encoder.w_mu * h + p.encoder.b_mu;
    Vector expect = mu.array().exp() / mu.array().exp().sum();
    CHECK((post.theta - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("top_words ordering")
{
    std::vector<std::string> words{"c", "a", "b", "d"};
    std::vector<double> uniform(4, 0.25);
    CHECK(top_words(uniform, 2, words) == std::vector<std::string>{"a", "b"});
    std::vector<double> hot{0, 0, 0, 1};
    CHECK(top_words(hot, 1, words) == std::vector<std::string>{"d"});

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::string> many;
    std::vector<double> row;
    for (int i = 0; i < 40; ++i) {
        many.push_back("w" + std::to_string(i));
        row.push_back(std::floor(u(rng) * 8) / 8);  // plenty of ties
    }
    std::vector<int> order(40);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        return row[x] != row[y] ? row[x] > row[y] : many[x] < many[y];
    });
    auto got = top_words(row, 10, many);
    for (int i = 0; i < 10; ++i) {
        CHECK(got[i] == many[order[i]]);
    }
}
