#include "vsam/metrics.hpp"

#include <charconv>
#include <sstream>

#include <json.hpp>

#include "vsam/errors.hpp"

namespace vsam {

std::size_t MetricsReport::gold_count(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < kNumStances; ++p) n += confusion[c][p];
  return n;
}

std::size_t MetricsReport::correct() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < kNumStances; ++c) n += confusion[c][c];
  return n;
}

MetricsReport evaluate(std::span<const Stance> predictions,
                       std::span<const Stance> gold) {
  if (predictions.size() != gold.size()) {
    throw ContractError("evaluate: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(gold.size()) +
                        " gold labels");
  }
  if (gold.empty()) {
    throw ContractError("evaluate: empty label lists");
  }

  MetricsReport report;
  report.total = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++report.confusion[static_cast<std::size_t>(gold[i])]
                      [static_cast<std::size_t>(predictions[i])];
  }

  for (std::size_t c = 0; c < kNumStances; ++c) {
    std::size_t n_gold = report.gold_count(c);
    if (n_gold == 0) continue;
    report.per_class_accuracy[c] =
        100.0 * static_cast<double>(report.confusion[c][c]) /
        static_cast<double>(n_gold);
  }

  // Pooled counts: every error is one FP for the predicted class and one
  // FN for the gold class, so FP == FN == total - TP.
  std::size_t tp = report.correct();
  std::size_t fp = report.total - tp;
  std::size_t fn = report.total - tp;
  report.micro_f1 = 100.0 * static_cast<double>(2 * tp) /
                    static_cast<double>(2 * tp + fp + fn);
  return report;
}

std::string metrics_to_kv(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "total=" << report.total << '\n';
  out << "micro_f1=" << report.micro_f1 << '\n';
  for (std::size_t c = 0; c < kNumStances; ++c) {
    out << "accuracy_" << kStanceNames[c] << '=';
    if (report.per_class_accuracy[c]) {
      out << *report.per_class_accuracy[c];
    } else {
      out << "undefined";
    }
    out << '\n';
  }
  for (std::size_t g = 0; g < kNumStances; ++g) {
    for (std::size_t p = 0; p < kNumStances; ++p) {
      out << "confusion_" << kStanceNames[g] << '_' << kStanceNames[p] << '='
          << report.confusion[g][p] << '\n';
    }
  }
  return out.str();
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["total"] = report.total;
  j["micro_f1"] = report.micro_f1;
  for (std::size_t c = 0; c < kNumStances; ++c) {
    auto key = std::string(kStanceNames[c]);
    if (report.per_class_accuracy[c]) {
      j["per_class_accuracy"][key] = *report.per_class_accuracy[c];
    } else {
      j["per_class_accuracy"][key] = nullptr;
    }
  }
  for (std::size_t g = 0; g < kNumStances; ++g) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < kNumStances; ++p) {
      row.push_back(report.confusion[g][p]);
    }
    j["confusion"][std::string(kStanceNames[g])] = row;
  }
  return j.dump(2);
}

MetricsReport metrics_from_kv(const std::string& text) {
  MetricsReport report;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("malformed metrics line: " + line);
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "total") {
      report.total = std::stoull(value);
    } else if (key == "micro_f1") {
      report.micro_f1 = std::stod(value);
    } else if (key.starts_with("accuracy_")) {
      std::string name = key.substr(9);
      for (std::size_t c = 0; c < kNumStances; ++c) {
        if (name == kStanceNames[c]) {
          if (value != "undefined") {
            report.per_class_accuracy[c] = std::stod(value);
          }
        }
      }
    } else if (key.starts_with("confusion_")) {
      std::string rest = key.substr(10);
      auto sep = rest.find('_');
      if (sep == std::string::npos) throw IoError("malformed key: " + key);
      std::string g_name = rest.substr(0, sep);
      std::string p_name = rest.substr(sep + 1);
      for (std::size_t g = 0; g < kNumStances; ++g) {
        for (std::size_t p = 0; p < kNumStances; ++p) {
          if (g_name == kStanceNames[g] && p_name == kStanceNames[p]) {
            report.confusion[g][p] = std::stoull(value);
          }
        }
      }
    } else {
      throw IoError("unknown metrics key: " + key);
    }
  }
  return report;
}

}  // namespace vsam
