#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vsam/model.hpp"
#include "vsam/trainer.hpp"

namespace vsam {

// Single-file binary checkpoint: format version, a flat key=value config
// echo, then named tensors (name, shape, row-major float64 payload).
// Payloads are written bit-exactly, so identical runs produce identical
// files.
struct Checkpoint {
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  std::string get(const std::string& key) const;             // throws if absent
  std::string get_or(const std::string& key, std::string fallback) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// The flat text form of the config echo (also written next to checkpoints).
std::string config_echo(const std::map<std::string, std::string>& config);

// ----- model <-> checkpoint -----

std::map<std::string, std::string> echo_config(const ModelConfig& model,
                                               const TrainConfig& train,
                                               const std::string& kind);

ModelConfig model_config_from(const Checkpoint& ckpt);

Checkpoint make_checkpoint(const VsamParameters& params,
                           const TrainConfig& train,
                           const EmbeddingMatrix* finetuned = nullptr);
Checkpoint make_checkpoint(const MeanBaselineParameters& params,
                           const TrainConfig& train,
                           const EmbeddingMatrix* finetuned = nullptr);

// Copy checkpoint tensors into parameters; every expected tensor must be
// present with a matching shape, otherwise ConfigError.
void restore_parameters(VsamParameters& params, const Checkpoint& ckpt);
void restore_parameters(MeanBaselineParameters& params, const Checkpoint& ckpt);

// True when the checkpoint carries a fine-tuned embedding matrix; copies
// it into emb when shapes agree (ConfigError otherwise).
bool restore_embeddings(EmbeddingMatrix& emb, const Checkpoint& ckpt);

}  // namespace vsam
