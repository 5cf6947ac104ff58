#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace advtune {

// Error taxonomy. Each type names the condition it signals so callers can
// react (or surface a machine-readable record) without string matching.
struct RetryExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateTable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BinningMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a well-separated child seed for an independent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Deterministic RNG built on xoshiro-free mt19937_64 plus hand-rolled
// transforms. std::*_distribution is implementation-defined, so every
// transform lives here to keep byte-reproducibility a property of the seed
// alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits() { return engine_(); }

  // [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n); n must be positive
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(bits()) * n) >> 64);
  }

  double normal() {
    // Box-Muller, sine branch discarded so state advances a fixed amount
    const double u1 = static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 64.0) {
      // normal approximation; desk-scale rates stay far below this
      const double s = mean + std::sqrt(mean) * normal();
      return s < 0.0 ? 0 : static_cast<int>(std::lround(s));
    }
    const double limit = std::exp(-mean);
    double prod = uniform01();
    int k = 0;
    while (prod > limit) {
      prod *= uniform01();
      ++k;
    }
    return k;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  // Independent child stream; depends only on the construction seed, not on
  // how many draws this instance has consumed.
  Rng fork(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Worker cap: ADVTUNE_THREADS limits parallelism, unset/0 means hardware.
inline int max_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("ADVTUNE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Static partition over [0, n). Each index is processed exactly once and
// writes only its own slot, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int threads = std::min<std::size_t>(max_threads(), n == 0 ? 1 : n);
  if (threads <= 1 || n < 16) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = n * t / threads;
    const std::size_t end = n * (t + 1) / threads;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Discrete KL divergence between two nonnegative vectors of equal length.
// Both sides are sum-normalized internally; q additionally receives epsilon
// mass per bin (and is renormalized) so the quotient stays finite. Bitwise
// identical inputs short-circuit to exactly zero.
inline double kl_divergence(const std::vector<double>& p,
                            const std::vector<double>& q,
                            double epsilon = 1e-9) {
  if (p.size() != q.size()) {
    throw LengthMismatch("kl_divergence: size " + std::to_string(p.size()) +
                         " vs " + std::to_string(q.size()));
  }
  double psum = 0.0, qsum = 0.0;
  for (double v : p) psum += v;
  for (double v : q) qsum += v;
  if (!(psum > 0.0) || !(qsum > 0.0)) {
    throw DegenerateTable("kl_divergence: zero-mass input");
  }
  bool identical = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] / psum != q[i] / qsum) {
      identical = false;
      break;
    }
  }
  if (identical) return 0.0;
  const double qsmoothed = qsum * (1.0 + epsilon * static_cast<double>(q.size()));
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / psum;
    if (pi == 0.0) continue;  // 0 * ln(0/q) = 0
    const double qi = (q[i] + epsilon * qsum) / qsmoothed;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

}  // namespace advtune
