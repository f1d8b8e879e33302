#include "intopic/etm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "intopic/error.hpp"

namespace intopic {

void EtmConfig::validate() const
{
    if (topics < 2) {
        throw InvalidArgument("topics must be >= 2");
    }
    if (embedding_dim < 1 || hidden < 1) {
        throw InvalidArgument("embedding_dim and hidden must be >= 1");
    }
    if (!(lr > 0.0)) {
        throw InvalidArgument("lr must be > 0");
    }
    if (epochs < 1) {
        throw InvalidArgument("epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }
    if (!(lambda_default >= 0.0 && lambda_default <= 1.0)) {
        throw InvalidArgument("lambda_default must lie in [0, 1]");
    }
}

namespace {

std::span<double> flat(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> flat(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

bool logvar_in_range(double raw) { return raw >= kLogvarMin && raw <= kLogvarMax; }

// Encoder forward with the intermediates needed for backprop.
struct EncoderTrace {
    Vector h_pre;
    Vector h;
    Vector logvar_raw;
    EncoderOutput out;
};

template <typename ForEachInput>
EncoderTrace encode_trace(Encoder const& enc, ForEachInput&& for_each_input)
{
    EncoderTrace t;
    t.h_pre = enc.b_in;
    for_each_input([&](int word, double x) { t.h_pre.noalias() += x * enc.w_in.row(word).transpose(); });
    t.h = t.h_pre.unaryExpr([](double z) { return softplus(z); });
    t.out.mu = enc.w_mu * t.h + enc.b_mu;
    t.logvar_raw = enc.w_logvar * t.h + enc.b_logvar;
    t.out.logvar = t.logvar_raw.unaryExpr([](double z) { return std::clamp(z, kLogvarMin, kLogvarMax); });
    return t;
}

EncoderTrace encode_trace(Encoder const& enc, BowRow const& row, int doc_length)
{
    return encode_trace(enc, [&](auto&& visit) {
        if (doc_length <= 0) {
            return;
        }
        for (auto const& e : row) {
            visit(e.word, static_cast<double>(e.count) / static_cast<double>(doc_length));
        }
    });
}

double kl_term(Vector const& mu, Vector const& logvar)
{
    double kl = 0.0;
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        kl += std::exp(logvar[k]) + mu[k] * mu[k] - 1.0 - logvar[k];
    }
    return 0.5 * kl;
}

double mixture_prob(Matrix const& beta, Vector const& theta, int word)
{
    double p = 0.0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        p += theta[k] * beta(k, word);
    }
    return p;
}

}  // namespace

EtmParams EtmParams::zeros_like() const
{
    EtmParams z;
    z.rho = Matrix::Zero(rho.rows(), rho.cols());
    z.alpha = Matrix::Zero(alpha.rows(), alpha.cols());
    z.encoder.w_in = Matrix::Zero(encoder.w_in.rows(), encoder.w_in.cols());
    z.encoder.b_in = Vector::Zero(encoder.b_in.size());
    z.encoder.w_mu = Matrix::Zero(encoder.w_mu.rows(), encoder.w_mu.cols());
    z.encoder.b_mu = Vector::Zero(encoder.b_mu.size());
    z.encoder.w_logvar = Matrix::Zero(encoder.w_logvar.rows(), encoder.w_logvar.cols());
    z.encoder.b_logvar = Vector::Zero(encoder.b_logvar.size());
    return z;
}

std::vector<EtmParams::Block> EtmParams::blocks(bool include_rho)
{
    std::vector<Block> out;
    if (include_rho) {
        out.push_back({"rho", flat(rho)});
    }
    out.push_back({"alpha", flat(alpha)});
    out.push_back({"encoder.w_in", flat(encoder.w_in)});
    out.push_back({"encoder.b_in", flat(encoder.b_in)});
    out.push_back({"encoder.w_mu", flat(encoder.w_mu)});
    out.push_back({"encoder.b_mu", flat(encoder.b_mu)});
    out.push_back({"encoder.w_logvar", flat(encoder.w_logvar)});
    out.push_back({"encoder.b_logvar", flat(encoder.b_logvar)});
    return out;
}

RowVector compute_beta_row(Matrix const& rho, Eigen::Ref<RowVector const> alpha_row)
{
    auto const v = rho.rows();
    auto const l = rho.cols();
    if (alpha_row.size() != l) {
        throw DimensionError("compute_beta: topic embedding dimension differs from rho");
    }
    // Plain loops keep the summation order independent of memory alignment.
    RowVector logits(v);
    double const* a = alpha_row.data();
    for (Eigen::Index w = 0; w < v; ++w) {
        double const* r = rho.data() + w * l;
        double s = 0.0;
        for (Eigen::Index j = 0; j < l; ++j) {
            s += r[j] * a[j];
        }
        if (!std::isfinite(s)) {
            throw Error("compute_beta: non-finite logit");
        }
        logits[w] = s;
    }
    double const mx = logits.maxCoeff();
    double total = 0.0;
    for (Eigen::Index w = 0; w < v; ++w) {
        logits[w] = std::exp(logits[w] - mx);
        total += logits[w];
    }
    for (Eigen::Index w = 0; w < v; ++w) {
        logits[w] /= total;
    }
    return logits;
}

Matrix compute_beta(Matrix const& rho, Matrix const& alpha)
{
    Matrix beta(alpha.rows(), rho.rows());
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
        beta.row(k) = compute_beta_row(rho, alpha.row(k));
    }
    return beta;
}

Vector softmax(Eigen::Ref<Vector const> logits)
{
    Vector out(logits.size());
    double const mx = logits.maxCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        total += out[i];
    }
    return out / total;
}

EncoderOutput encode(Encoder const& enc, BowRow const& row, int doc_length)
{
    return encode_trace(enc, row, doc_length).out;
}

EncoderOutput encode(Encoder const& enc, Eigen::Ref<Vector const> x)
{
    if (x.size() != enc.w_in.rows()) {
        throw DimensionError("encode: input length differs from vocabulary size");
    }
    return encode_trace(enc, [&](auto&& visit) {
               for (Eigen::Index v = 0; v < x.size(); ++v) {
                   if (x[v] != 0.0) {
                       visit(static_cast<int>(v), x[v]);
                   }
               }
           })
        .out;
}

Posterior reparameterize(Vector const& mu, Vector const& logvar, std::optional<Vector> const& noise)
{
    if (mu.size() != logvar.size() || (noise && noise->size() != mu.size())) {
        throw DimensionError("reparameterize: shape mismatch");
    }
    Posterior p;
    p.mu = mu;
    p.logvar = logvar;
    if (noise) {
        p.delta = mu + (0.5 * logvar.array()).exp().matrix().cwiseProduct(*noise);
    } else {
        p.delta = mu;
    }
    p.theta = softmax(p.delta);
    return p;
}

ElboTerms elbo(BowRow const& row, int doc_length, EtmParams const& params, Matrix const& beta,
               std::optional<Vector> const& noise)
{
    auto enc = encode(params.encoder, row, doc_length);
    auto post = reparameterize(enc.mu, enc.logvar, noise);
    double recon = 0.0;
    for (auto const& e : row) {
        recon += e.count * std::log(mixture_prob(beta, post.theta, e.word) + kReconEpsilon);
    }
    double kl = kl_term(enc.mu, enc.logvar);
    return {recon, kl, -recon + kl};
}

ElboTerms elbo(BowRow const& row, int doc_length, EtmParams const& params, std::optional<Vector> const& noise)
{
    return elbo(row, doc_length, params, compute_beta(params), noise);
}

namespace {

std::optional<Vector> noise_of(BatchDoc const& d)
{
    if (d.noise.size() == 0) {
        return std::nullopt;
    }
    return d.noise;
}

}  // namespace

double batch_loss(std::span<BatchDoc const> batch, EtmParams const& params)
{
    Matrix beta = compute_beta(params);
    double total = 0.0;
    for (auto const& d : batch) {
        total += elbo(*d.row, d.doc_length, params, beta, noise_of(d)).loss;
    }
    return total / static_cast<double>(batch.size());
}

GradientResult grad_elbo(std::span<BatchDoc const> batch, EtmParams const& params, bool train_rho)
{
    if (batch.empty()) {
        throw InvalidArgument("grad_elbo: empty batch");
    }
    auto const k_topics = params.alpha.rows();
    EtmParams g = params.zeros_like();
    Matrix const beta = compute_beta(params);
    Matrix g_beta = Matrix::Zero(beta.rows(), beta.cols());
    auto const& enc = params.encoder;
    double total = 0.0;

    for (auto const& d : batch) {
        auto t = encode_trace(enc, *d.row, d.doc_length);
        Vector const& mu = t.out.mu;
        Vector const& logvar = t.out.logvar;
        bool const sampled = d.noise.size() != 0;
        Vector sd = (0.5 * logvar.array()).exp().matrix();
        Vector delta = sampled ? Vector(mu + sd.cwiseProduct(d.noise)) : mu;
        Vector theta = softmax(delta);

        // Reconstruction term and its gradient w.r.t. theta and beta.
        double recon = 0.0;
        Vector g_theta = Vector::Zero(k_topics);
        for (auto const& e : *d.row) {
            double p = mixture_prob(beta, theta, e.word) + kReconEpsilon;
            recon += e.count * std::log(p);
            double g_p = -static_cast<double>(e.count) / p;
            for (Eigen::Index k = 0; k < k_topics; ++k) {
                g_theta[k] += g_p * beta(k, e.word);
                g_beta(k, e.word) += g_p * theta[k];
            }
        }
        total += -recon + kl_term(mu, logvar);

        Vector g_delta = theta.cwiseProduct((g_theta.array() - theta.dot(g_theta)).matrix());
        Vector g_mu = g_delta + mu;
        Vector g_lv(k_topics);
        for (Eigen::Index k = 0; k < k_topics; ++k) {
            double from_sample = sampled ? g_delta[k] * d.noise[k] * 0.5 * sd[k] : 0.0;
            double from_kl = 0.5 * (std::exp(logvar[k]) - 1.0);
            g_lv[k] = logvar_in_range(t.logvar_raw[k]) ? from_sample + from_kl : 0.0;
        }

        g.encoder.w_mu.noalias() += g_mu * t.h.transpose();
        g.encoder.b_mu += g_mu;
        g.encoder.w_logvar.noalias() += g_lv * t.h.transpose();
        g.encoder.b_logvar += g_lv;
        Vector g_h = enc.w_mu.transpose() * g_mu + enc.w_logvar.transpose() * g_lv;
        Vector g_hpre = g_h.cwiseProduct(t.h_pre.unaryExpr([](double z) { return sigmoid(z); }));
        g.encoder.b_in += g_hpre;
        if (d.doc_length > 0) {
            for (auto const& e : *d.row) {
                double x = static_cast<double>(e.count) / static_cast<double>(d.doc_length);
                g.encoder.w_in.row(e.word).noalias() += x * g_hpre.transpose();
            }
        }
    }

    // Softmax backprop through every beta row, then into alpha (and rho).
    Matrix g_logits(beta.rows(), beta.cols());
    for (Eigen::Index k = 0; k < beta.rows(); ++k) {
        double inner = beta.row(k).dot(g_beta.row(k));
        g_logits.row(k) = beta.row(k).cwiseProduct((g_beta.row(k).array() - inner).matrix());
    }
    g.alpha.noalias() = g_logits * params.rho;
    if (train_rho) {
        g.rho.noalias() = g_logits.transpose() * params.alpha;
    }

    double const scale = 1.0 / static_cast<double>(batch.size());
    for (auto& b : g.blocks()) {
        for (double& x : b.values) {
            x *= scale;
        }
    }
    return {std::move(g), total * scale};
}

void adam_update(std::span<double> param, std::span<double const> grad, std::span<double> m, std::span<double> v,
                 long step, AdamOptions const& opt)
{
    if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
        throw DimensionError("adam_update: state shape mismatch");
    }
    double const c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
    double const c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        double m_hat = m[i] / c1;
        double v_hat = v[i] / c2;
        param[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
}

AdamState AdamState::for_params(EtmParams const& p) { return {p.zeros_like(), p.zeros_like(), 0}; }

void adam_step(EtmParams& params, EtmParams& grads, AdamState& state, AdamOptions const& opt, bool train_rho)
{
    ++state.step;
    auto p = params.blocks(train_rho);
    auto g = grads.blocks(train_rho);
    auto m = state.m.blocks(train_rho);
    auto v = state.v.blocks(train_rho);
    for (std::size_t i = 0; i < p.size(); ++i) {
        adam_update(p[i].values, g[i].values, m[i].values, v[i].values, state.step, opt);
    }
}

EtmParams init_params(Matrix rho, EtmConfig const& config)
{
    config.validate();
    if (rho.cols() != config.embedding_dim) {
        throw DimensionError("rho has " + std::to_string(rho.cols()) + " columns, config expects " +
                             std::to_string(config.embedding_dim));
    }
    auto const v = rho.rows();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    auto fill = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = normal(rng);
        }
    };
    EtmParams p;
    p.rho = std::move(rho);
    fill(p.alpha, config.topics, config.embedding_dim);
    fill(p.encoder.w_in, v, config.hidden);
    fill(p.encoder.w_mu, config.topics, config.hidden);
    fill(p.encoder.w_logvar, config.topics, config.hidden);
    p.encoder.b_in = Vector::Zero(config.hidden);
    p.encoder.b_mu = Vector::Zero(config.topics);
    p.encoder.b_logvar = Vector::Zero(config.topics);
    return p;
}

EtmModel train(BowCorpus const& corpus, Matrix rho, EtmConfig const& config, EpochCallback const& on_epoch)
{
    config.validate();
    if (static_cast<std::size_t>(rho.rows()) != corpus.num_words()) {
        throw DimensionError("rho rows do not match the corpus vocabulary");
    }
    std::vector<std::size_t> order;
    for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
        if (corpus.doc_lengths[d] > 0) {
            order.push_back(d);
        }
    }
    if (order.empty()) {
        throw InvalidArgument("train: corpus has no non-empty documents");
    }

    EtmModel model;
    model.config = config;
    model.vocab = corpus.vocab;
    model.params = init_params(std::move(rho), config);
    AdamState adam = AdamState::for_params(model.params);
    AdamOptions opt;
    opt.lr = config.lr;

    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 1u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto const batch_size = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
            std::size_t end = std::min(order.size(), start + batch_size);
            std::vector<BatchDoc> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                auto d = order[i];
                Vector noise(config.topics);
                for (Eigen::Index k = 0; k < noise.size(); ++k) {
                    noise[k] = normal(rng);
                }
                batch.push_back({&corpus.rows[d], corpus.doc_lengths[d], std::move(noise)});
            }
            auto result = grad_elbo(batch, model.params, config.train_rho);
            if (!std::isfinite(result.mean_loss)) {
                throw TrainingError("non-finite loss", epoch, batch_index);
            }
            adam_step(model.params, result.grads, adam, opt, config.train_rho);
            epoch_total += result.mean_loss * static_cast<double>(batch.size());
        }
        double mean = epoch_total / static_cast<double>(order.size());
        model.loss_curve.push_back(mean);
        if (on_epoch) {
            on_epoch(epoch, mean);
        }
    }
    model.beta = compute_beta(model.params);
    return model;
}

Posterior infer_theta(Encoder const& enc, BowRow const& row, int doc_length)
{
    auto out = encode(enc, row, doc_length);
    return reparameterize(out.mu, out.logvar, std::nullopt);
}

Posterior infer_theta(EtmModel const& model, BowRow const& row, int doc_length)
{
    return infer_theta(model.params.encoder, row, doc_length);
}

Matrix infer_theta_all(Encoder const& enc, BowCorpus const& corpus)
{
    Matrix theta(static_cast<Eigen::Index>(corpus.num_docs()), enc.b_mu.size());
    for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
        theta.row(static_cast<Eigen::Index>(d)) = infer_theta(enc, corpus.rows[d], corpus.doc_lengths[d]).theta.transpose();
    }
    return theta;
}

std::vector<int> top_word_ids(std::span<double const> beta_row, int n, std::vector<std::string> const& words)
{
    if (n < 1) {
        throw InvalidArgument("top_words: n must be >= 1");
    }
    if (words.size() != beta_row.size()) {
        throw DimensionError("top_words: word list and row lengths differ");
    }
    std::vector<int> idx(beta_row.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto count = std::min<std::size_t>(static_cast<std::size_t>(n), idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), [&](int a, int b) {
        if (beta_row[static_cast<std::size_t>(a)] != beta_row[static_cast<std::size_t>(b)]) {
            return beta_row[static_cast<std::size_t>(a)] > beta_row[static_cast<std::size_t>(b)];
        }
        return words[static_cast<std::size_t>(a)] < words[static_cast<std::size_t>(b)];
    });
    idx.resize(count);
    return idx;
}

std::vector<std::string> top_words(std::span<double const> beta_row, int n, std::vector<std::string> const& words)
{
    std::vector<std::string> out;
    for (int i : top_word_ids(beta_row, n, words)) {
        out.push_back(words[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace intopic
