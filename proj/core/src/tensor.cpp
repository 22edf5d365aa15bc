#include "vsam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vsam {

std::string shape_to_string(const Shape& s) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out << 'x';
    out << s[i];
  }
  out << ')';
  return out.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::size_t mask_valid_count(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(
      m.begin(), m.end(), [](std::uint8_t v) { return v != 0; }));
}

// ----- Tensor -----

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from_data(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value),
                   requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values,
                         bool requires_grad) {
  std::size_t n = shape_numel(shape);
  if (values.empty()) values.assign(n, 0.0);
  if (values.size() != n) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_to_string(shape));
  }
  auto s = std::make_shared<Storage>();
  s->shape = std::move(shape);
  s->values = std::move(values);
  s->requires_grad = requires_grad;
  if (requires_grad) s->grad.assign(n, 0.0);
  return Tensor(std::move(s));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item() requires a scalar tensor, got shape " +
                        shape_to_string(shape()));
  }
  return d_->values[0];
}

void Tensor::set_requires_grad(bool value) {
  if (!defined()) throw ContractError("set_requires_grad on undefined tensor");
  d_->requires_grad = value;
  if (value) {
    d_->grad.assign(d_->values.size(), 0.0);
  } else {
    d_->grad.clear();
  }
}

void Tensor::zero_grad() {
  if (defined() && d_->requires_grad) {
    std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
  }
}

bool Tensor::all_finite() const {
  if (!defined()) return true;
  for (double v : d_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ----- Tape plumbing -----

Tensor Tape::make_output(Shape shape, std::vector<double> values,
                         bool requires_grad) {
  if (!enable_grad_) requires_grad = false;
  Tensor out = Tensor::from_data(std::move(shape), std::move(values),
                                 requires_grad);
  if (enable_grad_) {
    produced_ids_.insert(out.id());
    if (requires_grad) produced_.push_back(out);
  }
  return out;
}

void Tape::record(std::vector<const void*> operands, const Tensor& output,
                  std::function<void()> fn) {
  if (!output.requires_grad()) return;
  records_.push_back({std::move(operands), output.id(), std::move(fn)});
}

void Tape::check_same_or_scalar(const Tensor& a, const Tensor& b,
                                const char* op) {
  if (a.size() == b.size() || a.is_scalar() || b.is_scalar()) return;
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_to_string(a.shape()) + " and " +
                   shape_to_string(b.shape()));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    throw ContractError("backward: loss must be a scalar tensor" +
                        (loss.defined()
                             ? ", got shape " + shape_to_string(loss.shape())
                             : std::string(", got undefined tensor")));
  }
  if (!produced_ids_.contains(loss.id())) {
    throw ContractError("backward: loss was not produced on this tape");
  }
  // Per-pass adjoints of produced tensors start at zero; leaf gradients
  // are left alone so repeated passes accumulate.
  for (auto& t : produced_) t.zero_grad();
  if (!loss.requires_grad()) return;
  Tensor seed = loss;
  seed.grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->backward_fn();
  }
}

// ----- linear algebra -----

namespace {

void raw_matmul(std::span<const double> a, std::span<const double> b,
                std::span<double> out, std::size_t m, std::size_t k,
                std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * p + j];
      out[i * p + j] = acc;
    }
  }
}

}  // namespace

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1)) {
    throw ShapeError("matmul: expected (m,k)x(k,p) or (m,k)x(k), got " +
                     shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  std::size_t m = a.shape()[0];
  std::size_t k = a.shape()[1];
  std::size_t p = (b.rank() == 2) ? b.shape()[1] : 1;
  std::size_t bk = b.shape()[0];
  if (k != bk) {
    throw ShapeError("matmul: inner dimensions disagree, " +
                     shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> values(m * p);
  raw_matmul(a.values(), b.values(), values, m, k, p);
  Shape out_shape = (b.rank() == 2) ? Shape{m, p} : Shape{m};
  Tensor out = make_output(std::move(out_shape), std::move(values),
                           a.requires_grad() || b.requires_grad());
  record({a.id(), b.id()}, out, [a, b, out, m, k, p]() {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = Tensor(a).grad();
      auto bv = b.values();
      // dA = dOut * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j)
            acc += g[i * p + j] * bv[t * p + j];
          da[i * k + t] += acc;
        }
    }
    if (b.requires_grad()) {
      auto db = Tensor(b).grad();
      auto av = a.values();
      // dB = A^T * dOut
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < p; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += av[i * k + t] * g[i * p + j];
          db[t * p + j] += acc;
        }
    }
  });
  return out;
}

// ----- elementwise -----

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  check_same_or_scalar(a, b, "add");
  bool a_scalar = a.is_scalar() && !b.is_scalar();
  bool b_scalar = b.is_scalar() && !a.is_scalar();
  const Tensor& big = a_scalar ? b : a;
  std::vector<double> values(big.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = (a_scalar ? a[0] : a[i]) + (b_scalar ? b[0] : b[i]);
  }
  Tensor out = make_output(big.shape(), std::move(values),
                           a.requires_grad() || b.requires_grad());
  record({a.id(), b.id()}, out, [a, b, out, a_scalar, b_scalar]() {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = Tensor(a).grad();
      if (a_scalar) {
        for (double gi : g) da[0] += gi;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
    }
    if (b.requires_grad()) {
      auto db = Tensor(b).grad();
      if (b_scalar) {
        for (double gi : g) db[0] += gi;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
    }
  });
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  check_same_or_scalar(a, b, "sub");
  bool a_scalar = a.is_scalar() && !b.is_scalar();
  bool b_scalar = b.is_scalar() && !a.is_scalar();
  const Tensor& big = a_scalar ? b : a;
  std::vector<double> values(big.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = (a_scalar ? a[0] : a[i]) - (b_scalar ? b[0] : b[i]);
  }
  Tensor out = make_output(big.shape(), std::move(values),
                           a.requires_grad() || b.requires_grad());
  record({a.id(), b.id()}, out, [a, b, out, a_scalar, b_scalar]() {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = Tensor(a).grad();
      if (a_scalar) {
        for (double gi : g) da[0] += gi;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
    }
    if (b.requires_grad()) {
      auto db = Tensor(b).grad();
      if (b_scalar) {
        for (double gi : g) db[0] -= gi;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
      }
    }
  });
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  check_same_or_scalar(a, b, "mul");
  bool a_scalar = a.is_scalar() && !b.is_scalar();
  bool b_scalar = b.is_scalar() && !a.is_scalar();
  const Tensor& big = a_scalar ? b : a;
  std::vector<double> values(big.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = (a_scalar ? a[0] : a[i]) * (b_scalar ? b[0] : b[i]);
  }
  Tensor out = make_output(big.shape(), std::move(values),
                           a.requires_grad() || b.requires_grad());
  record({a.id(), b.id()}, out, [a, b, out, a_scalar, b_scalar]() {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = Tensor(a).grad();
      auto bv = b.values();
      if (a_scalar) {
        for (std::size_t i = 0; i < g.size(); ++i)
          da[0] += g[i] * (b_scalar ? bv[0] : bv[i]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i)
          da[i] += g[i] * (b_scalar ? bv[0] : bv[i]);
      }
    }
    if (b.requires_grad()) {
      auto db = Tensor(b).grad();
      auto av = a.values();
      if (b_scalar) {
        for (std::size_t i = 0; i < g.size(); ++i)
          db[0] += g[i] * (a_scalar ? av[0] : av[i]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i)
          db[i] += g[i] * (a_scalar ? av[0] : av[i]);
      }
    }
  });
  return out;
}

Tensor Tape::tanh(const Tensor& x) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::tanh(x[i]);
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto y = out.values();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      dx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
  return out;
}

Tensor Tape::exp(const Tensor& x) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::exp(x[i]);
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto y = out.values();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i];
  });
  return out;
}

Tensor Tape::log(const Tensor& x) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(x[i] > 0.0)) {
      throw DomainError("log: non-positive input " + std::to_string(x[i]) +
                        " at index " + std::to_string(i));
    }
    values[i] = std::log(x[i]);
  }
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto xv = x.values();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xv[i];
  });
  return out;
}

Tensor Tape::add_scalar(const Tensor& x, double c) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] + c;
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
  return out;
}

Tensor Tape::mul_scalar(const Tensor& x, double c) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] * c;
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out, c]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * c;
  });
  return out;
}

Tensor Tape::clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::min(std::max(x[i], lo), hi);
  Tensor out = make_output(x.shape(), std::move(values), x.requires_grad());
  record({x.id()}, out, [x, out, lo, hi]() {
    if (!x.requires_grad()) return;
    auto g = out.grad();
    auto xv = x.values();
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > lo && xv[i] < hi) dx[i] += g[i];
    }
  });
  return out;
}

// ----- reductions and structure -----

Tensor Tape::sum(const Tensor& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
  Tensor out = make_output({1}, {acc}, x.requires_grad());
  record({x.id()}, out, [x, out]() {
    if (!x.requires_grad()) return;
    double g = out.grad()[0];
    auto dx = Tensor(x).grad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
  });
  return out;
}

Tensor Tape::pick(const Tensor& x, std::size_t index) {
  if (index >= x.size()) {
    throw ContractError("pick: index " + std::to_string(index) +
                        " out of range for size " + std::to_string(x.size()));
  }
  Tensor out = make_output({1}, {x[index]}, x.requires_grad());
  record({x.id()}, out, [x, out, index]() {
    if (!x.requires_grad()) return;
    Tensor(x).grad()[index] += out.grad()[0];
  });
  return out;
}

Tensor Tape::concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw ShapeError("concat: rank-1 tensors required, got " +
                     shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> values;
  values.reserve(a.size() + b.size());
  values.insert(values.end(), a.values().begin(), a.values().end());
  values.insert(values.end(), b.values().begin(), b.values().end());
  Tensor out = make_output({a.size() + b.size()}, std::move(values),
                           a.requires_grad() || b.requires_grad());
  std::size_t split = a.size();
  record({a.id(), b.id()}, out, [a, b, out, split]() {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = Tensor(a).grad();
      for (std::size_t i = 0; i < split; ++i) da[i] += g[i];
    }
    if (b.requires_grad()) {
      auto db = Tensor(b).grad();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[split + i];
    }
  });
  return out;
}

Tensor Tape::masked_softmax(const Tensor& logits, const Mask& mask) {
  if (logits.rank() != 1 || mask.size() != logits.size()) {
    throw ShapeError("masked_softmax: logits " +
                     shape_to_string(logits.shape()) + " vs mask length " +
                     std::to_string(mask.size()));
  }
  if (mask_valid_count(mask) == 0) {
    throw DegenerateInputError("masked_softmax: all positions masked out");
  }
  std::size_t n = logits.size();
  double max_valid = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] && logits[i] > max_valid) max_valid = logits[i];
  }
  std::vector<double> values(n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      values[i] = std::exp(logits[i] - max_valid);
      z += values[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) values[i] /= z;
  Tensor out =
      make_output(logits.shape(), std::move(values), logits.requires_grad());
  record({logits.id()}, out, [logits, out, mask]() {
    if (!logits.requires_grad()) return;
    auto g = out.grad();
    auto y = out.values();
    auto dx = Tensor(logits).grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (mask[i]) dot += g[i] * y[i];
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (mask[i]) dx[i] += y[i] * (g[i] - dot);
    }
  });
  return out;
}

Tensor Tape::mean_pool_columns(const Tensor& m, const Mask& mask) {
  if (m.rank() != 2) {
    throw ShapeError("mean_pool_columns: matrix required, got " +
                     shape_to_string(m.shape()));
  }
  std::size_t d = m.shape()[0];
  std::size_t n = m.shape()[1];
  if (mask.size() != n) {
    throw ShapeError("mean_pool_columns: matrix " + shape_to_string(m.shape()) +
                     " vs mask length " + std::to_string(mask.size()));
  }
  std::size_t valid = mask_valid_count(mask);
  if (valid == 0) {
    throw DegenerateInputError("mean_pool_columns: all columns masked out");
  }
  std::vector<double> values(d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask[j]) continue;
    for (std::size_t i = 0; i < d; ++i) values[i] += m[i * n + j];
  }
  for (auto& v : values) v /= static_cast<double>(valid);
  Tensor out = make_output({d}, std::move(values), m.requires_grad());
  record({m.id()}, out, [m, out, mask, d, n, valid]() {
    if (!m.requires_grad()) return;
    auto g = out.grad();
    auto dm = Tensor(m).grad();
    double inv = 1.0 / static_cast<double>(valid);
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask[j]) continue;
      for (std::size_t i = 0; i < d; ++i) dm[i * n + j] += g[i] * inv;
    }
  });
  return out;
}

Tensor Tape::gather_columns(const Tensor& w,
                            const std::vector<std::size_t>& ids,
                            const Mask& mask) {
  if (w.rank() != 2) {
    throw ShapeError("gather_columns: matrix required, got " +
                     shape_to_string(w.shape()));
  }
  if (ids.size() != mask.size()) {
    throw ShapeError("gather_columns: ids length " +
                     std::to_string(ids.size()) + " vs mask length " +
                     std::to_string(mask.size()));
  }
  std::size_t d = w.shape()[0];
  std::size_t cols = w.shape()[1];
  std::size_t n = ids.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (mask[j] && ids[j] >= cols) {
      throw ContractError("gather_columns: id " + std::to_string(ids[j]) +
                          " out of range for " + std::to_string(cols) +
                          " columns");
    }
  }
  std::vector<double> values(d * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask[j]) continue;
    for (std::size_t i = 0; i < d; ++i) values[i * n + j] = w[i * cols + ids[j]];
  }
  Tensor out = make_output({d, n}, std::move(values), w.requires_grad());
  record({w.id()}, out, [w, out, ids, mask, d, cols, n]() {
    if (!w.requires_grad()) return;
    auto g = out.grad();
    auto dw = Tensor(w).grad();
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask[j]) continue;
      for (std::size_t i = 0; i < d; ++i)
        dw[i * cols + ids[j]] += g[i * n + j];
    }
  });
  return out;
}

// ----- finite differences -----

double finite_difference_check(
    const std::function<Tensor(Tape&, const Tensor&)>& f, Tensor point,
    double h) {
  if (h <= 0.0) throw ContractError("finite_difference_check: h must be > 0");
  if (!point.defined()) {
    throw ContractError("finite_difference_check: undefined point");
  }

  std::vector<double> analytic(point.size(), 0.0);
  {
    Tape tape;
    Tensor out = f(tape, point);
    if (!out.is_scalar()) {
      throw ContractError("finite_difference_check: f must return a scalar");
    }
    if (!std::isfinite(out.item())) {
      throw NumericalError("finite_difference_check: f returned " +
                           std::to_string(out.item()));
    }
    if (point.requires_grad() && out.requires_grad()) {
      point.zero_grad();
      tape.backward(out);
      auto g = point.grad();
      std::copy(g.begin(), g.end(), analytic.begin());
    }
  }

  auto evaluate = [&]() {
    Tape tape;
    double v = f(tape, point).item();
    if (!std::isfinite(v)) {
      throw NumericalError("finite_difference_check: f returned " +
                           std::to_string(v) + " at a perturbed point");
    }
    return v;
  };

  double max_rel = 0.0;
  auto values = point.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    double original = values[i];
    values[i] = original + h;
    double f_plus = evaluate();
    values[i] = original - h;
    double f_minus = evaluate();
    values[i] = original;
    double numeric = (f_plus - f_minus) / (2.0 * h);
    double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace vsam
