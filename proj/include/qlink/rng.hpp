#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qlink {

// Deterministic random source. One instance per logical timeline (a simulation
// run, an MCMC chain); every caller documents its draw order, so a fixed seed
// replays bit-identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; pairs are cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Exact Poisson sampling. Knuth's product method, chunked so the e^-lambda
  // threshold never underflows; additivity keeps the result exact.
  std::int64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    std::int64_t n = 0;
    while (lambda > 500.0) {
      n += poisson_small(500.0);
      lambda -= 500.0;
    }
    return n + poisson_small(lambda);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::int64_t poisson_small(double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= 1.0 - uniform();
    } while (p > limit);
    return k - 1;
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over raw bytes; used to derive per-window chain seeds from record
// content so replays and aligned windows reproduce estimates exactly.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void add_u64(std::uint64_t v) { add_bytes(&v, sizeof(v)); }
  void add_double(double v) { add_bytes(&v, sizeof(v)); }
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace qlink
