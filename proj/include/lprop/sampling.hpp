#pragma once

#include <cstdint>
#include <vector>

#include "lprop/domain.hpp"

namespace lprop {

/// Radical-inverse (van der Corput) value of index i in the given base.
inline double radical_inverse(std::uint64_t i, std::uint32_t base) {
  double inv = 1.0 / base;
  double f = inv;
  double x = 0.0;
  while (i > 0) {
    x += static_cast<double>(i % base) * f;
    i /= base;
    f *= inv;
  }
  return x;
}

inline std::uint32_t nth_prime_base(std::size_t d) {
  static constexpr std::uint32_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                             23, 29, 31, 37, 41, 43, 47, 53};
  return primes[d % (sizeof(primes) / sizeof(primes[0]))];
}

/// Deterministic low-discrepancy points inside a domain, produced by a
/// Halton sequence over the bounding box with rejection against the
/// domain predicate.
class QuasiSampler {
 public:
  explicit QuasiSampler(const DomainSpec& dom) : dom_(dom), bb_(dom.bounding_box()) {}

  std::vector<double> next() {
    std::vector<double> p(bb_.size());
    for (;;) {
      ++index_;
      for (std::size_t d = 0; d < bb_.size(); ++d) {
        const double u = radical_inverse(index_, nth_prime_base(d));
        p[d] = bb_[d].lo + u * bb_[d].length();
      }
      if (dom_.contains(p)) return p;
      // A bounded open domain inside its own bounding box has positive
      // volume fraction, so rejection terminates; cap defends bad input.
      if (index_ > 100000000ULL) throw DomainError("domain sampler starved");
    }
  }

  std::vector<std::vector<double>> take(std::size_t count) {
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(next());
    return out;
  }

 private:
  DomainSpec dom_;
  std::vector<Interval> bb_;
  std::uint64_t index_ = 0;
};

}  // namespace lprop
