#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/linalg.hpp"

namespace intopic {

struct EtmConfig {
    int topics = 20;
    int embedding_dim = 300;
    int hidden = 800;
    double lr = 0.005;
    int epochs = 200;
    int batch_size = 64;
    std::uint64_t seed = 0;
    bool train_rho = false;
    double lambda_default = 0.5;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;

    friend bool operator==(EtmConfig const&, EtmConfig const&) = default;
};

/// Two-layer map from the normalized bag of words to the Gaussian heads.
struct Encoder {
    Matrix w_in;       // V x H, row v is the contribution of word v
    Vector b_in;       // H
    Matrix w_mu;       // K x H
    Vector b_mu;       // K
    Matrix w_logvar;   // K x H
    Vector b_logvar;   // K
};

struct EtmParams {
    Matrix rho;    // V x L word embeddings
    Matrix alpha;  // K x L topic embeddings
    Encoder encoder;

    [[nodiscard]] int vocab_size() const { return static_cast<int>(rho.rows()); }
    [[nodiscard]] int topics() const { return static_cast<int>(alpha.rows()); }
    [[nodiscard]] int embedding_dim() const { return static_cast<int>(alpha.cols()); }
    [[nodiscard]] int hidden() const { return static_cast<int>(encoder.b_in.size()); }

    /// Same shapes, all zeros.
    [[nodiscard]] EtmParams zeros_like() const;
    /// Flat views of every parameter block in a fixed order (rho first).
    struct Block {
        char const* name;
        std::span<double> values;
    };
    [[nodiscard]] std::vector<Block> blocks(bool include_rho = true);
};

/// Gaussian parameters produced by the encoder.
struct EncoderOutput {
    Vector mu;
    Vector logvar;
};

struct Posterior {
    Vector mu;
    Vector logvar;
    Vector delta;
    Vector theta;
};

/// Row k = softmax over the vocabulary of rho * alpha_k. Rows are computed
/// independently, so `compute_beta_row` reproduces a row bit for bit.
Matrix compute_beta(Matrix const& rho, Matrix const& alpha);
RowVector compute_beta_row(Matrix const& rho, Eigen::Ref<RowVector const> alpha_row);
inline Matrix compute_beta(EtmParams const& p) { return compute_beta(p.rho, p.alpha); }

/// Numerically stable softmax.
Vector softmax(Eigen::Ref<Vector const> logits);

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// softplus hidden layer, logvar clamped to [kLogvarMin, kLogvarMax].
/// The sparse overload normalizes counts by `doc_length` (zero row allowed).
EncoderOutput encode(Encoder const& enc, BowRow const& row, int doc_length);
EncoderOutput encode(Encoder const& enc, Eigen::Ref<Vector const> normalized_bow);

/// delta = mu + exp(logvar / 2) * noise, or mu when no noise is given.
Posterior reparameterize(Vector const& mu, Vector const& logvar, std::optional<Vector> const& noise);

struct ElboTerms {
    double recon;
    double kl;
    double loss;
};

inline constexpr double kReconEpsilon = 1e-10;

ElboTerms elbo(BowRow const& row, int doc_length, EtmParams const& params, Matrix const& beta,
               std::optional<Vector> const& noise);
ElboTerms elbo(BowRow const& row, int doc_length, EtmParams const& params, std::optional<Vector> const& noise);

struct BatchDoc {
    BowRow const* row;
    int doc_length;
    Vector noise;  // K standard-normal draws
};

struct GradientResult {
    EtmParams grads;  // rho block is zero unless train_rho
    double mean_loss;
};

/// Exact gradients of the mean batch loss (-recon + kl).
GradientResult grad_elbo(std::span<BatchDoc const> batch, EtmParams const& params, bool train_rho);
/// Mean batch loss under the same noise, for finite-difference checks.
double batch_loss(std::span<BatchDoc const> batch, EtmParams const& params);

struct AdamOptions {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update in place; `step` is 1 on the first call.
void adam_update(std::span<double> param, std::span<double const> grad, std::span<double> m, std::span<double> v,
                 long step, AdamOptions const& opt);

struct AdamState {
    EtmParams m;
    EtmParams v;
    long step = 0;

    static AdamState for_params(EtmParams const& p);
};

void adam_step(EtmParams& params, EtmParams& grads, AdamState& state, AdamOptions const& opt, bool train_rho);

struct EtmModel {
    EtmConfig config;
    Vocabulary vocab;
    EtmParams params;
    Matrix beta;
    std::vector<double> loss_curve;
};

/// Seeded initialization (weights N(0, 0.02^2), zero biases).
EtmParams init_params(Matrix rho, EtmConfig const& config);

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Mini-batch Adam on the ELBO with one reparameterized sample per document.
/// Empty documents are skipped. A pure function of (corpus, rho, config).
EtmModel train(BowCorpus const& corpus, Matrix rho, EtmConfig const& config, EpochCallback const& on_epoch = {});

/// Deterministic posterior (delta = mu).
Posterior infer_theta(EtmModel const& model, BowRow const& row, int doc_length);
Posterior infer_theta(Encoder const& enc, BowRow const& row, int doc_length);
/// D x K matrix of deterministic topic proportions.
Matrix infer_theta_all(Encoder const& enc, BowCorpus const& corpus);

/// Indices of the n largest entries, ties broken by the word string.
std::vector<int> top_word_ids(std::span<double const> beta_row, int n, std::vector<std::string> const& words);
std::vector<std::string> top_words(std::span<double const> beta_row, int n, std::vector<std::string> const& words);

inline std::span<double const> row_span(Matrix const& m, Eigen::Index r)
{
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace intopic
