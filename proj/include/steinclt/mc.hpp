#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <thread>
#include <vector>

namespace steinclt {

/// A Monte Carlo value with its standard error and provenance.
/// Reproducible: the same (seed, n_samples) yields the identical value.
struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Quadrature-combine independent estimates: value = sum c_i x_i.
inline McEstimate combine_linear(const std::vector<double>& coef,
                                 const std::vector<McEstimate>& terms) {
  McEstimate out;
  double var = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out.value += coef[i] * terms[i].value;
    var += coef[i] * coef[i] * terms[i].stderr_ * terms[i].stderr_;
    out.n_samples += terms[i].n_samples;
  }
  out.stderr_ = std::sqrt(var);
  if (!terms.empty()) out.seed = terms.front().seed;
  return out;
}

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic substream id for (seed, salt...); substreams derived with
/// distinct salts behave as independent generators.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(splitmix64(seed) ^ splitmix64(salt * 0x9e3779b97f4a7c15ULL + 1));
}
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t s1, std::uint64_t s2) {
  return derive_seed(derive_seed(seed, s1), s2);
}
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t s1, std::uint64_t s2,
                                 std::uint64_t s3) {
  return derive_seed(derive_seed(seed, s1, s2), s3);
}

/// Running mean / sample variance (Welford).
class MeanVar {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline double binomial_stderr(double p_hat, std::int64_t n) {
  if (n <= 0) return 0.0;
  double v = p_hat * (1.0 - p_hat) / static_cast<double>(n);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

/// Evaluate f(0..count-1) possibly concurrently; results are collected in
/// index order so the output is independent of scheduling. Each task must
/// derive its own substream from its index.
template <typename F>
auto parallel_map(std::size_t count, F&& f, unsigned max_threads = 0)
    -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  unsigned hw = max_threads ? max_threads : std::thread::hardware_concurrency();
  std::vector<R> out(count);
  if (hw <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::future<void>> futs;
  std::size_t chunk = (count + hw - 1) / hw;
  for (unsigned t = 0; t < hw; ++t) {
    std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    futs.push_back(std::async(std::launch::async, [&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
    }));
  }
  for (auto& fu : futs) fu.get();
  return out;
}

}  // namespace steinclt
