#include "vsam/optimizer.hpp"

#include <cmath>

#include "vsam/errors.hpp"

namespace vsam {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> parameters,
                             double learning_rate, double beta1, double beta2,
                             double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& p : parameters) {
    if (!p.requires_grad()) {
      throw ContractError("AdamOptimizer: parameter without gradients");
    }
    slots_.push_back({p, std::vector<double>(p.size(), 0.0),
                      std::vector<double>(p.size(), 0.0)});
  }
}

void AdamOptimizer::step() {
  ++steps_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (auto& slot : slots_) {
    auto values = slot.param.values();
    auto grads = slot.param.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      double g = grads[i];
      slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
      slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
      double m_hat = slot.m[i] / bc1;
      double v_hat = slot.v[i] / bc2;
      values[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
      if (!std::isfinite(values[i])) {
        throw NumericalError("AdamOptimizer: non-finite weight after update");
      }
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& slot : slots_) slot.param.zero_grad();
}

}  // namespace vsam
