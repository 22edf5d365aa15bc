#pragma once

#include <vector>

#include "vsam/tensor.hpp"

namespace vsam {

// Adam with bias correction (defaults beta1=0.9, beta2=0.999, eps=1e-8).
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> parameters, double learning_rate,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // One update from the gradients currently stored on the parameters.
  // Throws NumericalError if any updated weight turns non-finite.
  void step();
  void zero_grad();
  std::size_t step_count() const { return steps_; }
  double learning_rate() const { return lr_; }

 private:
  struct Slot {
    Tensor param;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
};

}  // namespace vsam
