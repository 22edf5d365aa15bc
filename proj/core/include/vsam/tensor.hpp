#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "vsam/errors.hpp"

namespace vsam {

using Shape = std::vector<std::size_t>;
using Mask = std::vector<std::uint8_t>;

std::string shape_to_string(const Shape& s);
std::size_t shape_numel(const Shape& s);
std::size_t mask_valid_count(const Mask& m);

// Dense row-major tensor of doubles with an optional gradient buffer.
// Copying a Tensor copies the handle; the storage is shared. Leaves with
// requires_grad own a zero-initialized gradient of the same size.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return d_->shape; }
  std::size_t size() const { return d_->values.size(); }
  std::size_t rank() const { return d_->shape.size(); }
  bool is_scalar() const { return defined() && d_->values.size() == 1; }

  std::span<double> values() { return d_->values; }
  std::span<const double> values() const { return d_->values; }
  double operator[](std::size_t i) const { return d_->values[i]; }

  // Scalar read; throws ContractError on non-scalar tensors.
  double item() const;

  bool requires_grad() const { return defined() && d_->requires_grad; }
  void set_requires_grad(bool value);
  std::span<double> grad() { return d_->grad; }
  std::span<const double> grad() const { return d_->grad; }
  void zero_grad();

  bool all_finite() const;

  // Storage identity; distinct tensors sharing storage compare equal.
  const void* id() const { return d_.get(); }
  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // empty unless requires_grad
  };
  std::shared_ptr<Storage> d_;

  explicit Tensor(std::shared_ptr<Storage> s) : d_(std::move(s)) {}
};

// Reverse-mode differentiation tape. Records one entry per operation in
// construction order, which is a topological order by construction; the
// backward pass replays the entries in reverse. Single-owner: a tape and
// the tensors it produced are used from one thread at a time.
class Tape {
 public:
  Tape() = default;
  // A tape with gradients disabled records nothing and produces constant
  // tensors; use for pure inference so memory stays flat.
  explicit Tape(bool enable_grad) : enable_grad_(enable_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ----- linear algebra -----
  // (m,k)x(k,p) -> (m,p), or (m,k)x(k) -> (m).
  Tensor matmul(const Tensor& a, const Tensor& b);

  // ----- elementwise; shapes must match or one operand must be scalar -----
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor tanh(const Tensor& x);
  Tensor exp(const Tensor& x);
  Tensor log(const Tensor& x);  // DomainError on non-positive input
  Tensor add_scalar(const Tensor& x, double c);
  Tensor mul_scalar(const Tensor& x, double c);
  Tensor clamp(const Tensor& x, double lo, double hi);

  // ----- reductions and structure -----
  Tensor sum(const Tensor& x);                       // -> scalar
  Tensor pick(const Tensor& x, std::size_t index);   // element -> scalar
  Tensor concat(const Tensor& a, const Tensor& b);   // rank-1 only

  // exp-normalize logits over mask-valid positions; zero elsewhere.
  // Max-subtraction keeps the exponentials in range.
  Tensor masked_softmax(const Tensor& logits, const Mask& mask);

  // Column mean of a (d, n) matrix over mask-valid columns.
  Tensor mean_pool_columns(const Tensor& m, const Mask& mask);

  // H[:, j] = w[:, ids[j]] where mask[j], else zeros. Backward scatters
  // into w, so embeddings can be fine-tuned.
  Tensor gather_columns(const Tensor& w, const std::vector<std::size_t>& ids,
                        const Mask& mask);

  // Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable
  // from loss. Gradients of tensors produced on this tape are reset at the
  // start of each call, so repeated calls add whole-pass contributions.
  void backward(const Tensor& loss);

  std::size_t node_count() const { return records_.size(); }

 private:
  struct Record {
    std::vector<const void*> operands;
    const void* output;
    std::function<void()> backward_fn;
  };

  bool enable_grad_ = true;
  std::vector<Record> records_;
  std::vector<Tensor> produced_;
  std::unordered_set<const void*> produced_ids_;

  Tensor make_output(Shape shape, std::vector<double> values,
                     bool requires_grad);
  void record(std::vector<const void*> operands, const Tensor& output,
              std::function<void()> fn);
  static void check_same_or_scalar(const Tensor& a, const Tensor& b,
                                   const char* op);
};

// Max over coordinates of |analytic - central difference| relative error
// for a scalar-valued function of one tensor. The function is re-evaluated
// at perturbed points through fresh tapes; `point` is perturbed in place
// and restored. Throws NumericalError if f produces a non-finite value.
double finite_difference_check(
    const std::function<Tensor(Tape&, const Tensor&)>& f, Tensor point,
    double h = 1e-5);

}  // namespace vsam
