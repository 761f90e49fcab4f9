#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace spindecay {

// Counter-based generator: output i of stream (seed, id) is a pure hash of
// (seed, id, i), so streams can be handed to workers in any order.
class Rng {
 public:
  Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) + stream * 0x9e3779b97f4a7c15ULL)) {}

  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // uniform on [0,1)
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // uniform on (0,1]
  double uniform_pos() { return 1.0 - uniform(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  double exponential() { return -std::log(uniform_pos()); }

  // index drawn from unnormalized nonnegative weights
  std::size_t discrete(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double t = uniform() * total;
    std::size_t last = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0) continue;
      last = i;
      if (t < w[i]) return i;
      t -= w[i];
    }
    return last;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace spindecay
