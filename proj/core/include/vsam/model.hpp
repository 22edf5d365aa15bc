#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vsam/embeddings.hpp"
#include "vsam/gaussian.hpp"
#include "vsam/rng.hpp"
#include "vsam/tensor.hpp"

namespace vsam {

// Dimensions and switches shared by the model and both baselines.
struct ModelConfig {
  std::size_t embed_dim = 16;      // D
  std::size_t hidden_dim = 16;     // MLP hidden width
  std::size_t pi_dim = 8;          // joint representation width
  std::size_t latent_dim = 8;      // d_z
  std::size_t n_max_headline = 32;
  std::size_t n_max_body = 128;
  std::size_t num_classes = 4;
  double log_sigma_min = -8.0;
  double log_sigma_max = 8.0;
  bool finetune_embeddings = false;

  void validate() const;
};

// Every trainable tensor of the generative network (theta: prior MLP, the
// two Gaussian heads l1/l2, per-side attention projections, classifier)
// and the inference network (phi: posterior MLP and heads l3/l4).
// The attention projection maps the latent to one logit per token
// position; headline and body use separate projections because their
// padded lengths differ.
struct VsamParameters {
  ModelConfig config;

  Tensor prior_w1, prior_b1, prior_w2, prior_b2;      // f_theta
  Tensor prior_mu_w, prior_mu_b;                      // l1
  Tensor prior_ls_w, prior_ls_b;                      // l2
  Tensor inf_w1, inf_b1, inf_w2, inf_b2;              // f_phi
  Tensor post_mu_w, post_mu_b;                        // l3
  Tensor post_ls_w, post_ls_b;                        // l4
  Tensor attn_headline, attn_body;                    // W^z per side
  Tensor cls_w, cls_b;                                // g_theta

  static VsamParameters init(const ModelConfig& config, Rng& rng);

  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
  std::vector<Tensor> generative() const;  // theta
  std::vector<Tensor> inference() const;   // phi
  bool all_finite() const;
  void zero_grad();
};

// ----- forward pieces -----

// H -> mean pool -> MLP -> (mu, log_sigma) with the configured clamp.
DiagonalGaussian prior_params(Tape& tape, const VsamParameters& params,
                              const Tensor& h_matrix, const Mask& mask);

// [mean pool ; one-hot label] -> MLP -> (mu, log_sigma).
DiagonalGaussian posterior_params(Tape& tape, const VsamParameters& params,
                                  const Tensor& h_matrix, const Mask& mask,
                                  std::size_t label);

// a = masked_softmax(tanh(W^z z)); zero at padding, sums to 1.
Tensor attention_weights(Tape& tape, const Tensor& attn_projection,
                         const Tensor& z, const Mask& mask);

// s = H a.
Tensor sentence_embedding(Tape& tape, const Tensor& h_matrix,
                          const Tensor& attention);

// Linear + softmax over [s_headline ; s_body]; strictly positive, sums to 1.
Tensor classify(Tape& tape, const VsamParameters& params,
                const Tensor& sentence_pair);

// H as a graph node: a constant copy when embeddings are frozen, a
// gather through the embedding matrix when fine-tuning.
Tensor sentence_matrix(Tape& tape, const EmbeddedSentence& sentence,
                       const EmbeddingMatrix* finetune);

// ----- objective -----

struct ElboReport {
  double elbo = 0.0;            // reconstruction - kl_weight * kl
  double reconstruction = 0.0;  // (1/L) sum_l log p(y | z_l)
  double kl = 0.0;              // KL(q_h||p_h) + KL(q_b||p_b)
  double kl_weight = 1.0;
  std::size_t samples = 0;
};

// Builds the differentiable ELBO for one (headline, body, label) example
// with L reparameterized samples from the posterior. Returns the ELBO as
// a scalar tensor (maximize); the loss is its negation.
Tensor elbo_objective(Tape& tape, const VsamParameters& params,
                      const EmbeddedSentence& headline,
                      const EmbeddedSentence& body, std::size_t label,
                      std::size_t num_samples, NoiseSource& noise,
                      double kl_weight, ElboReport* report = nullptr,
                      const EmbeddingMatrix* finetune = nullptr);

// Value-only convenience.
ElboReport elbo(const VsamParameters& params, const EmbeddedSentence& headline,
                const EmbeddedSentence& body, std::size_t label,
                std::size_t num_samples, NoiseSource& noise,
                double kl_weight = 1.0);

// ----- prediction -----

enum class PredictMode { mean, sample };

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
  std::vector<double> attention_headline;
  std::vector<double> attention_body;
};

// mean: z = mu of the prior per side. sample: average the classifier
// output over num_samples prior draws (noise required).
Prediction predict(const VsamParameters& params,
                   const EmbeddedSentence& headline,
                   const EmbeddedSentence& body, PredictMode mode,
                   std::size_t num_samples = 1,
                   NoiseSource* noise = nullptr);

// ----- deterministic baselines -----

// Mean-pooled embeddings, concatenated, linear softmax classifier.
struct MeanBaselineParameters {
  ModelConfig config;
  Tensor w, b;

  static MeanBaselineParameters init(const ModelConfig& config, Rng& rng);
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::vector<Tensor> all() const;
};

Tensor mean_baseline_loss(Tape& tape, const MeanBaselineParameters& params,
                          const EmbeddedSentence& headline,
                          const EmbeddedSentence& body, std::size_t label,
                          const EmbeddingMatrix* finetune = nullptr);

Prediction mean_baseline_predict(const MeanBaselineParameters& params,
                                 const EmbeddedSentence& headline,
                                 const EmbeddedSentence& body);

// Same architecture as VSAM with z replaced by the deterministic prior
// mean; no sampling, no KL; plain cross-entropy.
Tensor det_attention_loss(Tape& tape, const VsamParameters& params,
                          const EmbeddedSentence& headline,
                          const EmbeddedSentence& body, std::size_t label,
                          const EmbeddingMatrix* finetune = nullptr);

Prediction det_attention_predict(const VsamParameters& params,
                                 const EmbeddedSentence& headline,
                                 const EmbeddedSentence& body);

}  // namespace vsam
