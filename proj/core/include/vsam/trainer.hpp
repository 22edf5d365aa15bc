#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>

#include "vsam/data.hpp"
#include "vsam/model.hpp"
#include "vsam/optimizer.hpp"

namespace vsam {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t samples_per_example = 1;  // L during training
  std::uint64_t seed = 1;
  // nullopt: warm up over the first 10% of total steps; 0 disables warmup.
  std::optional<std::size_t> kl_warmup_steps;
  bool class_weights = false;

  void validate() const;
};

// Dataset embedded once up front; reused across epochs while embeddings
// stay frozen.
struct EmbeddedDataset {
  std::vector<EmbeddedSentence> headlines;
  std::vector<EmbeddedSentence> bodies;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
};

EmbeddedDataset embed_dataset(const Dataset& data, const Vocabulary& vocab,
                              const EmbeddingMatrix& emb,
                              const ModelConfig& config);

// Derive an independent stream seed from a master seed and a salt.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

// Linear 0 -> 1 over the warmup span, then 1.
double kl_warmup_weight(std::size_t step, std::size_t warmup_steps);

// One batch: mean negative ELBO, backward, one Adam update, grads zeroed.
// A non-finite loss aborts before the update and throws NumericalError.
ElboReport train_step(std::span<const std::size_t> batch,
                      const EmbeddedDataset& data, VsamParameters& params,
                      AdamOptimizer& optimizer, const TrainConfig& config,
                      NoiseSource& noise, double kl_weight,
                      std::span<const double> example_weights = {},
                      const EmbeddingMatrix* finetune = nullptr);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_elbo = 0.0;
  double mean_reconstruction = 0.0;
  double mean_kl = 0.0;
  double kl_weight = 0.0;
  double train_accuracy = 0.0;  // percent, mean-mode predictions
};

struct TrainResult {
  std::vector<EpochLog> epochs;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train_vsam(const EmbeddedDataset& data, VsamParameters& params,
                       const TrainConfig& config,
                       const EpochCallback& on_epoch = {},
                       EmbeddingMatrix* finetune = nullptr);

// Cross-entropy loops for the two deterministic baselines. EpochLog's
// mean_elbo field carries the negated mean loss so logs stay uniform.
TrainResult train_mean_baseline(const EmbeddedDataset& data,
                                MeanBaselineParameters& params,
                                const TrainConfig& config,
                                const EpochCallback& on_epoch = {},
                                EmbeddingMatrix* finetune = nullptr);

TrainResult train_det_attention(const EmbeddedDataset& data,
                                VsamParameters& params,
                                const TrainConfig& config,
                                const EpochCallback& on_epoch = {},
                                EmbeddingMatrix* finetune = nullptr);

// Inverse-frequency example weights normalized to mean 1; all ones when
// the flag is off.
std::vector<double> example_weights(const EmbeddedDataset& data,
                                    const TrainConfig& config,
                                    std::size_t num_classes);

}  // namespace vsam
