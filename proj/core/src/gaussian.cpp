#include "vsam/gaussian.hpp"

#include <numbers>
#include <string>

namespace vsam {

namespace {

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ContractError(std::string(what) + ": dimension mismatch, " +
                        std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

NoiseDraw draw_noise(std::size_t d_z, Rng& rng, std::uint64_t seed) {
  if (d_z < 1) throw ContractError("draw_noise: d_z must be >= 1");
  std::vector<double> eps(d_z);
  for (auto& e : eps) e = rng.normal();
  return {Tensor::from_data({d_z}, std::move(eps)), seed};
}

Tensor noise_vector(std::size_t d_z, NoiseSource& noise) {
  std::vector<double> eps(d_z);
  for (auto& e : eps) e = noise.next();
  return Tensor::from_data({d_z}, std::move(eps));
}

Tensor reparameterize(Tape& tape, const DiagonalGaussian& g,
                      const Tensor& eps) {
  check_dims(g.mu.size(), g.log_sigma.size(), "reparameterize");
  check_dims(g.mu.size(), eps.size(), "reparameterize");
  return tape.add(g.mu, tape.mul(tape.exp(g.log_sigma), eps));
}

Tensor kl_divergence(Tape& tape, const DiagonalGaussian& q,
                     const DiagonalGaussian& p) {
  check_dims(q.mu.size(), q.log_sigma.size(), "kl_divergence");
  check_dims(p.mu.size(), p.log_sigma.size(), "kl_divergence");
  check_dims(q.mu.size(), p.mu.size(), "kl_divergence");

  Tensor log_ratio = tape.sub(p.log_sigma, q.log_sigma);
  // sq^2 / sp^2 = exp(2 (lsq - lsp))
  Tensor var_ratio = tape.exp(tape.mul_scalar(log_ratio, -2.0));
  Tensor dm = tape.sub(q.mu, p.mu);
  Tensor mean_term =
      tape.mul(tape.mul(dm, dm), tape.exp(tape.mul_scalar(p.log_sigma, -2.0)));
  Tensor per_dim = tape.add_scalar(
      tape.add(log_ratio,
               tape.mul_scalar(tape.add(var_ratio, mean_term), 0.5)),
      -0.5);
  return tape.sum(per_dim);
}

Tensor log_density(Tape& tape, const DiagonalGaussian& g, const Tensor& z) {
  check_dims(g.mu.size(), g.log_sigma.size(), "log_density");
  check_dims(g.mu.size(), z.size(), "log_density");

  constexpr double half_log_two_pi =
      0.5 * 1.8378770664093454835606594728112353;  // log(2*pi)
  Tensor dz = tape.sub(z, g.mu);
  Tensor quad = tape.mul(tape.mul(dz, dz),
                         tape.exp(tape.mul_scalar(g.log_sigma, -2.0)));
  Tensor per_dim = tape.add_scalar(
      tape.sub(tape.mul_scalar(quad, -0.5), g.log_sigma), -half_log_two_pi);
  return tape.sum(per_dim);
}

}  // namespace vsam
