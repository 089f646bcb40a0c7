#pragma once

#include <cstdint>
#include <random>

#include "gka/gfpoly.hpp"

namespace gka {

// Seeded generator with a platform-stable output sequence. std::mt19937_64 is
// fully specified by the standard; the distributions are not, so bounded
// sampling is done here by rejection.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("empty sampling range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  // Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  Fe field(std::uint64_t p) { return Fe{below(p)}; }
  Fe nonzero_field(std::uint64_t p) { return Fe{1 + below(p - 1)}; }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(engine_() >> 56);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gka
