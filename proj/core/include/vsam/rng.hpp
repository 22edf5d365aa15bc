#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vsam {

// Deterministic, seedable random source. All float construction is done
// by hand from raw mt19937_64 output so that the same seed yields the
// same stream on every platform, independent of the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller with a cached spare.
  double normal();

  // Unbiased integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

  // Derive an independent sub-stream seed; advances this stream.
  std::uint64_t fork_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream of standard-normal draws consumed by stochastic model code.
// Virtual so tests can substitute zero noise or canned sequences.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual double next() = 0;
};

class RngNoise final : public NoiseSource {
 public:
  explicit RngNoise(Rng& rng) : rng_(&rng) {}
  double next() override { return rng_->normal(); }

 private:
  Rng* rng_;
};

class ZeroNoise final : public NoiseSource {
 public:
  double next() override { return 0.0; }
};

// Records draws on first consumption and replays them after rewind().
// Finite-difference checks re-evaluate the same stochastic objective many
// times; replaying keeps the noise identical across evaluations.
class ReplayNoise final : public NoiseSource {
 public:
  explicit ReplayNoise(Rng& rng) : rng_(&rng) {}

  double next() override {
    if (pos_ < recorded_.size()) return recorded_[pos_++];
    recorded_.push_back(rng_->normal());
    ++pos_;
    return recorded_.back();
  }

  void rewind() { pos_ = 0; }

 private:
  Rng* rng_;
  std::vector<double> recorded_;
  std::size_t pos_ = 0;
};

// Fisher-Yates shuffle driven by Rng (std::shuffle is not portable bit-for-bit).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace vsam
