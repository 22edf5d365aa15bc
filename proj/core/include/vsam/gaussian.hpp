#pragma once

#include <cstdint>

#include "vsam/rng.hpp"
#include "vsam/tensor.hpp"

namespace vsam {

// Diagonal Gaussian given by a mean vector and a log-standard-deviation
// vector of equal length. Both may be graph outputs, so divergences and
// densities built from them stay differentiable.
struct DiagonalGaussian {
  Tensor mu;
  Tensor log_sigma;

  std::size_t dim() const { return mu.size(); }
};

// A draw of i.i.d. standard-normal noise plus the seed it came from.
struct NoiseDraw {
  Tensor eps;
  std::uint64_t seed = 0;
};

NoiseDraw draw_noise(std::size_t d_z, Rng& rng, std::uint64_t seed = 0);

// Collect d_z draws from an arbitrary noise source (no grad).
Tensor noise_vector(std::size_t d_z, NoiseSource& noise);

// z = mu + exp(log_sigma) * eps. Differentiable through mu and log_sigma;
// eps is constant.
Tensor reparameterize(Tape& tape, const DiagonalGaussian& g,
                      const Tensor& eps);

// Analytic KL(q || p) for two diagonal Gaussians, summed over dimensions:
//   sum_i [ (lsp - lsq) + (sq^2 + (mq - mp)^2) / (2 sp^2) - 1/2 ]
Tensor kl_divergence(Tape& tape, const DiagonalGaussian& q,
                     const DiagonalGaussian& p);

// log N(z | mu, diag(sigma^2)) summed over dimensions.
Tensor log_density(Tape& tape, const DiagonalGaussian& g, const Tensor& z);

}  // namespace vsam
