#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "vsam/data.hpp"

namespace vsam {

// Per-class accuracy is recall: correct-in-class / gold-count-of-class.
// Classes absent from the gold labels report no value. Micro-F1 pools
// TP/FP/FN across classes; for single-label prediction it equals overall
// accuracy.
struct MetricsReport {
  std::array<std::array<std::size_t, kNumStances>, kNumStances>
      confusion{};  // [gold][pred]
  std::array<std::optional<double>, kNumStances> per_class_accuracy;  // %
  double micro_f1 = 0.0;                                              // %
  std::size_t total = 0;

  std::size_t gold_count(std::size_t c) const;
  std::size_t correct() const;
};

MetricsReport evaluate(std::span<const Stance> predictions,
                       std::span<const Stance> gold);

// Flat key=value lines, one metric per line.
std::string metrics_to_kv(const MetricsReport& report);

// JSON document with the same content.
std::string metrics_to_json(const MetricsReport& report);

// Parses the key=value form back; throws IoError on malformed input.
MetricsReport metrics_from_kv(const std::string& text);

}  // namespace vsam
