#include "vsam/model.hpp"

#include <algorithm>
#include <cmath>

#include "vsam/errors.hpp"

namespace vsam {

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || pi_dim == 0 || latent_dim == 0 ||
      n_max_headline == 0 || n_max_body == 0 || num_classes < 2) {
    throw ConfigError("model dimensions must be positive (classes >= 2)");
  }
  if (log_sigma_min > log_sigma_max) {
    throw ConfigError("log_sigma_min must not exceed log_sigma_max");
  }
}

namespace {

// uniform(+-1/sqrt(fan_in)) weights, zero bias
Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data({rows, cols}, std::move(data), true);
}

Tensor init_bias(std::size_t n, double value = 0.0) {
  return Tensor::full({n}, value, true);
}

Tensor one_hot(std::size_t index, std::size_t n) {
  std::vector<double> data(n, 0.0);
  data[index] = 1.0;
  return Tensor::from_data({n}, std::move(data));
}

// pi = W2 tanh(W1 x + b1) + b2
Tensor two_layer_mlp(Tape& tape, const Tensor& w1, const Tensor& b1,
                     const Tensor& w2, const Tensor& b2, const Tensor& x) {
  Tensor hidden = tape.tanh(tape.add(tape.matmul(w1, x), b1));
  return tape.add(tape.matmul(w2, hidden), b2);
}

DiagonalGaussian gaussian_head(Tape& tape, const Tensor& mu_w,
                               const Tensor& mu_b, const Tensor& ls_w,
                               const Tensor& ls_b, const Tensor& pi,
                               const ModelConfig& config) {
  Tensor mu = tape.add(tape.matmul(mu_w, pi), mu_b);
  Tensor log_sigma =
      tape.clamp(tape.add(tape.matmul(ls_w, pi), ls_b),
                 config.log_sigma_min, config.log_sigma_max);
  return {mu, log_sigma};
}

Mask all_true(std::size_t n) { return Mask(n, 1); }

}  // namespace

VsamParameters VsamParameters::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  VsamParameters p;
  p.config = config;
  std::size_t d = config.embed_dim;
  std::size_t h = config.hidden_dim;
  std::size_t pi = config.pi_dim;
  std::size_t dz = config.latent_dim;
  std::size_t c = config.num_classes;

  p.prior_w1 = init_weight(h, d, rng);
  p.prior_b1 = init_bias(h);
  p.prior_w2 = init_weight(pi, h, rng);
  p.prior_b2 = init_bias(pi);
  p.prior_mu_w = init_weight(dz, pi, rng);
  p.prior_mu_b = init_bias(dz);
  p.prior_ls_w = init_weight(dz, pi, rng);
  p.prior_ls_b = init_bias(dz, -1.0);  // start near-deterministic

  p.inf_w1 = init_weight(h, d + c, rng);
  p.inf_b1 = init_bias(h);
  p.inf_w2 = init_weight(pi, h, rng);
  p.inf_b2 = init_bias(pi);
  p.post_mu_w = init_weight(dz, pi, rng);
  p.post_mu_b = init_bias(dz);
  p.post_ls_w = init_weight(dz, pi, rng);
  p.post_ls_b = init_bias(dz, -1.0);

  p.attn_headline = init_weight(config.n_max_headline, dz, rng);
  p.attn_body = init_weight(config.n_max_body, dz, rng);
  p.cls_w = init_weight(c, 2 * d, rng);
  p.cls_b = init_bias(c);
  return p;
}

std::vector<std::pair<std::string, Tensor>> VsamParameters::named() const {
  return {
      {"prior_w1", prior_w1},       {"prior_b1", prior_b1},
      {"prior_w2", prior_w2},       {"prior_b2", prior_b2},
      {"prior_mu_w", prior_mu_w},   {"prior_mu_b", prior_mu_b},
      {"prior_ls_w", prior_ls_w},   {"prior_ls_b", prior_ls_b},
      {"inf_w1", inf_w1},           {"inf_b1", inf_b1},
      {"inf_w2", inf_w2},           {"inf_b2", inf_b2},
      {"post_mu_w", post_mu_w},     {"post_mu_b", post_mu_b},
      {"post_ls_w", post_ls_w},     {"post_ls_b", post_ls_b},
      {"attn_headline", attn_headline},
      {"attn_body", attn_body},
      {"cls_w", cls_w},             {"cls_b", cls_b},
  };
}

std::vector<Tensor> VsamParameters::all() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

std::vector<Tensor> VsamParameters::generative() const {
  return {prior_w1, prior_b1, prior_w2,   prior_b2, prior_mu_w, prior_mu_b,
          prior_ls_w, prior_ls_b, attn_headline, attn_body, cls_w, cls_b};
}

std::vector<Tensor> VsamParameters::inference() const {
  return {inf_w1, inf_b1, inf_w2, inf_b2,
          post_mu_w, post_mu_b, post_ls_w, post_ls_b};
}

bool VsamParameters::all_finite() const {
  for (const auto& t : all()) {
    if (!t.all_finite()) return false;
  }
  return true;
}

void VsamParameters::zero_grad() {
  for (auto& t : all()) t.zero_grad();
}

// ----- forward pieces -----

Tensor sentence_matrix(Tape& tape, const EmbeddedSentence& sentence,
                       const EmbeddingMatrix* finetune) {
  if (finetune && finetune->weights.requires_grad()) {
    return tape.gather_columns(finetune->weights, sentence.token_ids,
                               sentence.mask);
  }
  return sentence.embedded;
}

DiagonalGaussian prior_params(Tape& tape, const VsamParameters& params,
                              const Tensor& h_matrix, const Mask& mask) {
  Tensor pooled = tape.mean_pool_columns(h_matrix, mask);
  Tensor pi = two_layer_mlp(tape, params.prior_w1, params.prior_b1,
                            params.prior_w2, params.prior_b2, pooled);
  return gaussian_head(tape, params.prior_mu_w, params.prior_mu_b,
                       params.prior_ls_w, params.prior_ls_b, pi,
                       params.config);
}

DiagonalGaussian posterior_params(Tape& tape, const VsamParameters& params,
                                  const Tensor& h_matrix, const Mask& mask,
                                  std::size_t label) {
  if (label >= params.config.num_classes) {
    throw ContractError("posterior_params: label " + std::to_string(label) +
                        " out of range for " +
                        std::to_string(params.config.num_classes) +
                        " classes");
  }
  Tensor pooled = tape.mean_pool_columns(h_matrix, mask);
  Tensor joint =
      tape.concat(pooled, one_hot(label, params.config.num_classes));
  Tensor pi = two_layer_mlp(tape, params.inf_w1, params.inf_b1, params.inf_w2,
                            params.inf_b2, joint);
  return gaussian_head(tape, params.post_mu_w, params.post_mu_b,
                       params.post_ls_w, params.post_ls_b, pi, params.config);
}

Tensor attention_weights(Tape& tape, const Tensor& attn_projection,
                         const Tensor& z, const Mask& mask) {
  return tape.masked_softmax(tape.tanh(tape.matmul(attn_projection, z)), mask);
}

Tensor sentence_embedding(Tape& tape, const Tensor& h_matrix,
                          const Tensor& attention) {
  return tape.matmul(h_matrix, attention);
}

Tensor classify(Tape& tape, const VsamParameters& params,
                const Tensor& sentence_pair) {
  Tensor logits =
      tape.add(tape.matmul(params.cls_w, sentence_pair), params.cls_b);
  return tape.masked_softmax(logits, all_true(params.config.num_classes));
}

// ----- objective -----

Tensor elbo_objective(Tape& tape, const VsamParameters& params,
                      const EmbeddedSentence& headline,
                      const EmbeddedSentence& body, std::size_t label,
                      std::size_t num_samples, NoiseSource& noise,
                      double kl_weight, ElboReport* report,
                      const EmbeddingMatrix* finetune) {
  if (num_samples < 1) {
    throw ContractError("elbo: at least one sample required");
  }
  std::size_t dz = params.config.latent_dim;

  Tensor h_h = sentence_matrix(tape, headline, finetune);
  Tensor h_b = sentence_matrix(tape, body, finetune);

  DiagonalGaussian prior_h = prior_params(tape, params, h_h, headline.mask);
  DiagonalGaussian prior_b = prior_params(tape, params, h_b, body.mask);
  DiagonalGaussian post_h =
      posterior_params(tape, params, h_h, headline.mask, label);
  DiagonalGaussian post_b =
      posterior_params(tape, params, h_b, body.mask, label);

  Tensor recon_sum;
  for (std::size_t l = 0; l < num_samples; ++l) {
    Tensor z_h = reparameterize(tape, post_h, noise_vector(dz, noise));
    Tensor z_b = reparameterize(tape, post_b, noise_vector(dz, noise));
    Tensor a_h = attention_weights(tape, params.attn_headline, z_h,
                                   headline.mask);
    Tensor a_b = attention_weights(tape, params.attn_body, z_b, body.mask);
    Tensor s_h = sentence_embedding(tape, h_h, a_h);
    Tensor s_b = sentence_embedding(tape, h_b, a_b);
    Tensor probs = classify(tape, params, tape.concat(s_h, s_b));
    Tensor log_p = tape.log(tape.pick(probs, label));
    recon_sum = recon_sum.defined() ? tape.add(recon_sum, log_p) : log_p;
  }
  Tensor reconstruction =
      tape.mul_scalar(recon_sum, 1.0 / static_cast<double>(num_samples));

  Tensor kl = tape.add(kl_divergence(tape, post_h, prior_h),
                       kl_divergence(tape, post_b, prior_b));
  Tensor objective =
      tape.sub(reconstruction, tape.mul_scalar(kl, kl_weight));

  if (report) {
    report->elbo = objective.item();
    report->reconstruction = reconstruction.item();
    report->kl = kl.item();
    report->kl_weight = kl_weight;
    report->samples = num_samples;
  }
  return objective;
}

ElboReport elbo(const VsamParameters& params, const EmbeddedSentence& headline,
                const EmbeddedSentence& body, std::size_t label,
                std::size_t num_samples, NoiseSource& noise,
                double kl_weight) {
  Tape tape(false);
  ElboReport report;
  elbo_objective(tape, params, headline, body, label, num_samples, noise,
                 kl_weight, &report);
  return report;
}

// ----- prediction -----

namespace {

Prediction argmax_prediction(std::vector<double> probs,
                             std::vector<double> attn_h,
                             std::vector<double> attn_b) {
  Prediction out;
  out.probabilities = std::move(probs);
  out.attention_headline = std::move(attn_h);
  out.attention_body = std::move(attn_b);
  out.label = static_cast<std::size_t>(
      std::max_element(out.probabilities.begin(), out.probabilities.end()) -
      out.probabilities.begin());
  return out;
}

}  // namespace

Prediction predict(const VsamParameters& params,
                   const EmbeddedSentence& headline,
                   const EmbeddedSentence& body, PredictMode mode,
                   std::size_t num_samples, NoiseSource* noise) {
  std::size_t dz = params.config.latent_dim;
  std::size_t c = params.config.num_classes;
  Tape tape(false);

  DiagonalGaussian prior_h =
      prior_params(tape, params, headline.embedded, headline.mask);
  DiagonalGaussian prior_b =
      prior_params(tape, params, body.embedded, body.mask);

  std::size_t draws = mode == PredictMode::mean ? 1 : num_samples;
  if (mode == PredictMode::sample && noise == nullptr) {
    throw ContractError("predict: sample mode requires a noise source");
  }
  if (draws < 1) throw ContractError("predict: at least one sample required");

  std::vector<double> probs(c, 0.0);
  std::vector<double> attn_h(headline.mask.size(), 0.0);
  std::vector<double> attn_b(body.mask.size(), 0.0);
  for (std::size_t l = 0; l < draws; ++l) {
    Tensor z_h;
    Tensor z_b;
    if (mode == PredictMode::mean) {
      z_h = prior_h.mu;
      z_b = prior_b.mu;
    } else {
      z_h = reparameterize(tape, prior_h, noise_vector(dz, *noise));
      z_b = reparameterize(tape, prior_b, noise_vector(dz, *noise));
    }
    Tensor a_h =
        attention_weights(tape, params.attn_headline, z_h, headline.mask);
    Tensor a_b = attention_weights(tape, params.attn_body, z_b, body.mask);
    Tensor s_h = sentence_embedding(tape, headline.embedded, a_h);
    Tensor s_b = sentence_embedding(tape, body.embedded, a_b);
    Tensor p = classify(tape, params, tape.concat(s_h, s_b));
    for (std::size_t i = 0; i < c; ++i) probs[i] += p[i];
    for (std::size_t i = 0; i < attn_h.size(); ++i) attn_h[i] += a_h[i];
    for (std::size_t i = 0; i < attn_b.size(); ++i) attn_b[i] += a_b[i];
  }
  double inv = 1.0 / static_cast<double>(draws);
  for (auto& v : probs) v *= inv;
  for (auto& v : attn_h) v *= inv;
  for (auto& v : attn_b) v *= inv;
  return argmax_prediction(std::move(probs), std::move(attn_h),
                           std::move(attn_b));
}

// ----- baselines -----

MeanBaselineParameters MeanBaselineParameters::init(const ModelConfig& config,
                                                    Rng& rng) {
  config.validate();
  MeanBaselineParameters p;
  p.config = config;
  p.w = init_weight(config.num_classes, 2 * config.embed_dim, rng);
  p.b = init_bias(config.num_classes);
  return p;
}

std::vector<std::pair<std::string, Tensor>> MeanBaselineParameters::named()
    const {
  return {{"mean_w", w}, {"mean_b", b}};
}

std::vector<Tensor> MeanBaselineParameters::all() const { return {w, b}; }

namespace {

Tensor cross_entropy(Tape& tape, const Tensor& probs, std::size_t label) {
  return tape.mul_scalar(tape.log(tape.pick(probs, label)), -1.0);
}

Tensor mean_baseline_probs(Tape& tape, const MeanBaselineParameters& params,
                           const EmbeddedSentence& headline,
                           const EmbeddedSentence& body,
                           const EmbeddingMatrix* finetune) {
  Tensor h_h = sentence_matrix(tape, headline, finetune);
  Tensor h_b = sentence_matrix(tape, body, finetune);
  Tensor pooled = tape.concat(tape.mean_pool_columns(h_h, headline.mask),
                              tape.mean_pool_columns(h_b, body.mask));
  Tensor logits = tape.add(tape.matmul(params.w, pooled), params.b);
  return tape.masked_softmax(logits, Mask(params.config.num_classes, 1));
}

Tensor det_attention_probs(Tape& tape, const VsamParameters& params,
                           const EmbeddedSentence& headline,
                           const EmbeddedSentence& body,
                           const EmbeddingMatrix* finetune) {
  Tensor h_h = sentence_matrix(tape, headline, finetune);
  Tensor h_b = sentence_matrix(tape, body, finetune);
  DiagonalGaussian prior_h = prior_params(tape, params, h_h, headline.mask);
  DiagonalGaussian prior_b = prior_params(tape, params, h_b, body.mask);
  Tensor a_h = attention_weights(tape, params.attn_headline, prior_h.mu,
                                 headline.mask);
  Tensor a_b =
      attention_weights(tape, params.attn_body, prior_b.mu, body.mask);
  Tensor s_h = sentence_embedding(tape, h_h, a_h);
  Tensor s_b = sentence_embedding(tape, h_b, a_b);
  return classify(tape, params, tape.concat(s_h, s_b));
}

Prediction extract_prediction(Tape& tape, const Tensor& probs,
                              const std::vector<double>& attn_h,
                              const std::vector<double>& attn_b) {
  (void)tape;
  std::vector<double> p(probs.values().begin(), probs.values().end());
  return argmax_prediction(std::move(p), attn_h, attn_b);
}

}  // namespace

Tensor mean_baseline_loss(Tape& tape, const MeanBaselineParameters& params,
                          const EmbeddedSentence& headline,
                          const EmbeddedSentence& body, std::size_t label,
                          const EmbeddingMatrix* finetune) {
  if (label >= params.config.num_classes) {
    throw ContractError("mean_baseline_loss: label out of range");
  }
  Tensor probs = mean_baseline_probs(tape, params, headline, body, finetune);
  return cross_entropy(tape, probs, label);
}

Prediction mean_baseline_predict(const MeanBaselineParameters& params,
                                 const EmbeddedSentence& headline,
                                 const EmbeddedSentence& body) {
  Tape tape(false);
  Tensor probs =
      mean_baseline_probs(tape, params, headline, body, nullptr);
  return extract_prediction(tape, probs, {}, {});
}

Tensor det_attention_loss(Tape& tape, const VsamParameters& params,
                          const EmbeddedSentence& headline,
                          const EmbeddedSentence& body, std::size_t label,
                          const EmbeddingMatrix* finetune) {
  if (label >= params.config.num_classes) {
    throw ContractError("det_attention_loss: label out of range");
  }
  Tensor probs = det_attention_probs(tape, params, headline, body, finetune);
  return cross_entropy(tape, probs, label);
}

Prediction det_attention_predict(const VsamParameters& params,
                                 const EmbeddedSentence& headline,
                                 const EmbeddedSentence& body) {
  Tape tape(false);
  DiagonalGaussian prior_h =
      prior_params(tape, params, headline.embedded, headline.mask);
  DiagonalGaussian prior_b =
      prior_params(tape, params, body.embedded, body.mask);
  Tensor a_h = attention_weights(tape, params.attn_headline, prior_h.mu,
                                 headline.mask);
  Tensor a_b =
      attention_weights(tape, params.attn_body, prior_b.mu, body.mask);
  Tensor s_h = sentence_embedding(tape, headline.embedded, a_h);
  Tensor s_b = sentence_embedding(tape, body.embedded, a_b);
  Tensor probs = classify(tape, params, tape.concat(s_h, s_b));
  std::vector<double> ah(a_h.values().begin(), a_h.values().end());
  std::vector<double> ab(a_b.values().begin(), a_b.values().end());
  return extract_prediction(tape, probs, ah, ab);
}

}  // namespace vsam
