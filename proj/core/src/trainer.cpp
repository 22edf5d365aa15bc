#include "vsam/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsam/errors.hpp"

namespace vsam {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw ConfigError("learning rate must be >= 0");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (samples_per_example == 0) throw ConfigError("samples must be >= 1");
}

EmbeddedDataset embed_dataset(const Dataset& data, const Vocabulary& vocab,
                              const EmbeddingMatrix& emb,
                              const ModelConfig& config) {
  EmbeddedDataset out;
  out.headlines.reserve(data.examples.size());
  out.bodies.reserve(data.examples.size());
  out.labels.reserve(data.examples.size());
  for (const auto& ex : data.examples) {
    out.headlines.push_back(
        embed(ex.headline, vocab, emb, config.n_max_headline));
    out.bodies.push_back(embed(ex.body, vocab, emb, config.n_max_body));
    out.labels.push_back(static_cast<std::size_t>(ex.stance));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  // splitmix64 finalizer over master + salt
  std::uint64_t z = master + salt * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double kl_warmup_weight(std::size_t step, std::size_t warmup_steps) {
  if (warmup_steps == 0) return 1.0;
  if (step >= warmup_steps) return 1.0;
  return static_cast<double>(step) / static_cast<double>(warmup_steps);
}

std::vector<double> example_weights(const EmbeddedDataset& data,
                                    const TrainConfig& config,
                                    std::size_t num_classes) {
  std::vector<double> weights(data.size(), 1.0);
  if (!config.class_weights) return weights;
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto label : data.labels) ++counts[label];
  std::vector<double> class_weight(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) {
      class_weight[c] = static_cast<double>(data.size()) /
                        (static_cast<double>(num_classes) *
                         static_cast<double>(counts[c]));
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    weights[i] = class_weight[data.labels[i]];
  }
  return weights;
}

ElboReport train_step(std::span<const std::size_t> batch,
                      const EmbeddedDataset& data, VsamParameters& params,
                      AdamOptimizer& optimizer, const TrainConfig& config,
                      NoiseSource& noise, double kl_weight,
                      std::span<const double> example_weights_in,
                      const EmbeddingMatrix* finetune) {
  if (batch.empty()) throw ContractError("train_step: empty batch");

  Tape tape;
  Tensor loss_sum;
  ElboReport mean;
  for (std::size_t idx : batch) {
    ElboReport report;
    Tensor objective = elbo_objective(
        tape, params, data.headlines[idx], data.bodies[idx], data.labels[idx],
        config.samples_per_example, noise, kl_weight, &report, finetune);
    Tensor loss = tape.mul_scalar(objective, -1.0);
    if (!example_weights_in.empty()) {
      loss = tape.mul_scalar(loss, example_weights_in[idx]);
    }
    loss_sum = loss_sum.defined() ? tape.add(loss_sum, loss) : loss;
    mean.elbo += report.elbo;
    mean.reconstruction += report.reconstruction;
    mean.kl += report.kl;
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  Tensor loss = tape.mul_scalar(loss_sum, inv);
  mean.elbo *= inv;
  mean.reconstruction *= inv;
  mean.kl *= inv;
  mean.kl_weight = kl_weight;
  mean.samples = config.samples_per_example;

  if (!std::isfinite(loss.item())) {
    optimizer.zero_grad();
    throw NumericalError("train_step: non-finite loss, parameters unchanged");
  }
  tape.backward(loss);
  optimizer.step();
  optimizer.zero_grad();
  return mean;
}

namespace {

enum class Objective { vsam, mean_embedding, det_attention };

struct LossContext {
  Objective objective;
  VsamParameters* vsam_params = nullptr;
  MeanBaselineParameters* mean_params = nullptr;
};

double train_accuracy(const LossContext& ctx, const EmbeddedDataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prediction pred;
    switch (ctx.objective) {
      case Objective::vsam:
        pred = predict(*ctx.vsam_params, data.headlines[i], data.bodies[i],
                       PredictMode::mean);
        break;
      case Objective::mean_embedding:
        pred = mean_baseline_predict(*ctx.mean_params, data.headlines[i],
                                     data.bodies[i]);
        break;
      case Objective::det_attention:
        pred = det_attention_predict(*ctx.vsam_params, data.headlines[i],
                                     data.bodies[i]);
        break;
    }
    if (pred.label == data.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(data.size());
}

TrainResult run_training(const LossContext& ctx, const EmbeddedDataset& data,
                         const TrainConfig& config,
                         const EpochCallback& on_epoch,
                         EmbeddingMatrix* finetune) {
  config.validate();
  if (data.size() == 0) throw DegenerateInputError("empty training set");

  std::size_t num_classes = ctx.objective == Objective::mean_embedding
                                ? ctx.mean_params->config.num_classes
                                : ctx.vsam_params->config.num_classes;
  bool tune = finetune && (ctx.objective == Objective::mean_embedding
                               ? ctx.mean_params->config.finetune_embeddings
                               : ctx.vsam_params->config.finetune_embeddings);
  const EmbeddingMatrix* tune_ptr = tune ? finetune : nullptr;

  std::vector<Tensor> trainable = ctx.objective == Objective::mean_embedding
                                      ? ctx.mean_params->all()
                                      : ctx.vsam_params->all();
  if (tune) trainable.push_back(finetune->weights);
  AdamOptimizer optimizer(trainable, config.learning_rate);

  Rng shuffle_rng(derive_seed(config.seed, 0x53485546ULL));  // "SHUF"
  Rng noise_rng(derive_seed(config.seed, 0x4E4F4953ULL));    // "NOIS"
  RngNoise noise(noise_rng);

  std::vector<double> weights = example_weights(data, config, num_classes);
  std::span<const double> weight_span =
      config.class_weights ? std::span<const double>(weights)
                           : std::span<const double>();

  std::size_t batches_per_epoch =
      (data.size() + config.batch_size - 1) / config.batch_size;
  std::size_t total_steps = config.epochs * batches_per_epoch;
  std::size_t warmup = config.kl_warmup_steps.value_or(total_steps / 10);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double sum_elbo = 0.0, sum_recon = 0.0, sum_kl = 0.0;
    double last_weight = 1.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      std::size_t begin = b * config.batch_size;
      std::size_t end = std::min(begin + config.batch_size, data.size());
      std::span<const std::size_t> batch(order.data() + begin, end - begin);
      double kl_weight =
          ctx.objective == Objective::vsam ? kl_warmup_weight(step, warmup)
                                           : 1.0;
      last_weight = kl_weight;

      if (ctx.objective == Objective::vsam) {
        ElboReport report =
            train_step(batch, data, *ctx.vsam_params, optimizer, config,
                       noise, kl_weight, weight_span, tune_ptr);
        sum_elbo += report.elbo * static_cast<double>(batch.size());
        sum_recon += report.reconstruction * static_cast<double>(batch.size());
        sum_kl += report.kl * static_cast<double>(batch.size());
      } else {
        Tape tape;
        Tensor loss_sum;
        for (std::size_t idx : batch) {
          Tensor loss =
              ctx.objective == Objective::mean_embedding
                  ? mean_baseline_loss(tape, *ctx.mean_params,
                                       data.headlines[idx], data.bodies[idx],
                                       data.labels[idx], tune_ptr)
                  : det_attention_loss(tape, *ctx.vsam_params,
                                       data.headlines[idx], data.bodies[idx],
                                       data.labels[idx], tune_ptr);
          if (!weight_span.empty()) {
            loss = tape.mul_scalar(loss, weight_span[idx]);
          }
          loss_sum = loss_sum.defined() ? tape.add(loss_sum, loss) : loss;
        }
        Tensor loss = tape.mul_scalar(
            loss_sum, 1.0 / static_cast<double>(batch.size()));
        if (!std::isfinite(loss.item())) {
          optimizer.zero_grad();
          throw NumericalError("training: non-finite loss");
        }
        tape.backward(loss);
        optimizer.step();
        optimizer.zero_grad();
        sum_elbo += -loss.item() * static_cast<double>(batch.size());
      }
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_elbo = sum_elbo / static_cast<double>(data.size());
    log.mean_reconstruction = sum_recon / static_cast<double>(data.size());
    log.mean_kl = sum_kl / static_cast<double>(data.size());
    log.kl_weight = last_weight;
    log.train_accuracy = train_accuracy(ctx, data);
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace

TrainResult train_vsam(const EmbeddedDataset& data, VsamParameters& params,
                       const TrainConfig& config,
                       const EpochCallback& on_epoch,
                       EmbeddingMatrix* finetune) {
  LossContext ctx{Objective::vsam, &params, nullptr};
  return run_training(ctx, data, config, on_epoch, finetune);
}

TrainResult train_mean_baseline(const EmbeddedDataset& data,
                                MeanBaselineParameters& params,
                                const TrainConfig& config,
                                const EpochCallback& on_epoch,
                                EmbeddingMatrix* finetune) {
  LossContext ctx{Objective::mean_embedding, nullptr, &params};
  return run_training(ctx, data, config, on_epoch, finetune);
}

TrainResult train_det_attention(const EmbeddedDataset& data,
                                VsamParameters& params,
                                const TrainConfig& config,
                                const EpochCallback& on_epoch,
                                EmbeddingMatrix* finetune) {
  LossContext ctx{Objective::det_attention, &params, nullptr};
  return run_training(ctx, data, config, on_epoch, finetune);
}

}  // namespace vsam
