#pragma once

// Prime-field and polynomial arithmetic over GF(p) for word-sized primes.
//
// Elements are plain residues carried in `Fe`; the modulus is passed to each
// operation (or held by the enclosing structure). All products go through a
// 128-bit intermediate, so any p < 2^61 is exact.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gka/errors.hpp"

namespace gka {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 61;

struct Fe {
  std::uint64_t value = 0;

  constexpr Fe() = default;
  constexpr explicit Fe(std::uint64_t v) : value(v) {}

  friend constexpr auto operator<=>(Fe, Fe) = default;
};

// Deterministic trial division; p is desk-scale so this stays cheap.
constexpr bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  if (n % 3 == 0) return n == 3;
  for (std::uint64_t d = 5; d <= n / d; d += 6) {
    if (n % d == 0 || n % (d + 2) == 0) return false;
  }
  return true;
}

constexpr Fe fe_reduce(std::uint64_t v, std::uint64_t p) { return Fe{v % p}; }

constexpr Fe fe_add(Fe a, Fe b, std::uint64_t p) {
  std::uint64_t s = a.value + b.value;  // both < 2^61, no overflow
  return Fe{s >= p ? s - p : s};
}

constexpr Fe fe_sub(Fe a, Fe b, std::uint64_t p) {
  return Fe{a.value >= b.value ? a.value - b.value : a.value + p - b.value};
}

constexpr Fe fe_neg(Fe a, std::uint64_t p) {
  return Fe{a.value == 0 ? 0 : p - a.value};
}

constexpr Fe fe_mul(Fe a, Fe b, std::uint64_t p) {
  auto wide = static_cast<unsigned __int128>(a.value) * b.value;
  return Fe{static_cast<std::uint64_t>(wide % p)};
}

constexpr Fe fe_pow(Fe base, std::uint64_t exp, std::uint64_t p) {
  Fe acc{1 % p};
  while (exp != 0) {
    if (exp & 1) acc = fe_mul(acc, base, p);
    base = fe_mul(base, base, p);
    exp >>= 1;
  }
  return acc;
}

// Multiplicative inverse by the extended Euclidean algorithm.
constexpr Fe fe_inv(Fe a, std::uint64_t p) {
  if (a.value % p == 0) throw NonInvertible{};
  std::int64_t r0 = static_cast<std::int64_t>(p);
  std::int64_t r1 = static_cast<std::int64_t>(a.value % p);
  std::int64_t s0 = 0;
  std::int64_t s1 = 1;
  while (r1 != 0) {
    std::int64_t q = r0 / r1;
    std::int64_t r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    std::int64_t s2 = s0 - q * s1;
    s0 = s1;
    s1 = s2;
  }
  // r0 == gcd; for prime p and a != 0 it is 1.
  if (r0 != 1) throw NonInvertible{};
  std::int64_t inv = s0 % static_cast<std::int64_t>(p);
  if (inv < 0) inv += static_cast<std::int64_t>(p);
  return Fe{static_cast<std::uint64_t>(inv)};
}

// Univariate polynomial, constant term first. The length is the degree bound
// and is never trimmed, so a degree-(h-1) share always has h coefficients.
struct Poly {
  std::vector<Fe> coeffs;

  Poly() = default;
  explicit Poly(std::size_t degree_bound) : coeffs(degree_bound) {}
  explicit Poly(std::vector<Fe> c) : coeffs(std::move(c)) {}

  std::size_t degree_bound() const { return coeffs.size(); }

  friend bool operator==(const Poly&, const Poly&) = default;
};

inline Fe poly_eval(const Poly& f, Fe x, std::uint64_t p) {
  Fe acc{0};
  for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) {
    acc = fe_add(fe_mul(acc, x, p), *it, p);
  }
  return acc;
}

inline Poly poly_add(const Poly& f, const Poly& g, std::uint64_t p) {
  Poly out(std::max(f.degree_bound(), g.degree_bound()));
  for (std::size_t d = 0; d < out.coeffs.size(); ++d) {
    Fe a = d < f.coeffs.size() ? f.coeffs[d] : Fe{0};
    Fe b = d < g.coeffs.size() ? g.coeffs[d] : Fe{0};
    out.coeffs[d] = fe_add(a, b, p);
  }
  return out;
}

enum class Axis { fix_x, fix_y };

// Bivariate polynomial F(x, y) = sum_{u<t, v<h} c[u][v] x^u y^v.
class BiPoly {
 public:
  BiPoly() = default;
  BiPoly(std::size_t deg_x_bound, std::size_t deg_y_bound)
      : deg_x_(deg_x_bound), deg_y_(deg_y_bound), c_(deg_x_bound * deg_y_bound) {}

  std::size_t deg_x_bound() const { return deg_x_; }
  std::size_t deg_y_bound() const { return deg_y_; }

  Fe& coeff(std::size_t u, std::size_t v) { return c_.at(u * deg_y_ + v); }
  Fe coeff(std::size_t u, std::size_t v) const { return c_.at(u * deg_y_ + v); }

  friend bool operator==(const BiPoly&, const BiPoly&) = default;

 private:
  std::size_t deg_x_ = 0;
  std::size_t deg_y_ = 0;
  std::vector<Fe> c_;
};

// fix_x at a returns F(a, y) (degree bound h); fix_y at b returns F(x, b)
// (degree bound t).
inline Poly bipoly_eval_partial(const BiPoly& F, Axis axis, Fe point, std::uint64_t p) {
  const std::size_t t = F.deg_x_bound();
  const std::size_t h = F.deg_y_bound();
  if (axis == Axis::fix_x) {
    Poly out(h);
    for (std::size_t v = 0; v < h; ++v) {
      Fe acc{0};
      for (std::size_t u = t; u-- > 0;) acc = fe_add(fe_mul(acc, point, p), F.coeff(u, v), p);
      out.coeffs[v] = acc;
    }
    return out;
  }
  Poly out(t);
  for (std::size_t u = 0; u < t; ++u) {
    Fe acc{0};
    for (std::size_t v = h; v-- > 0;) acc = fe_add(fe_mul(acc, point, p), F.coeff(u, v), p);
    out.coeffs[u] = acc;
  }
  return out;
}

inline Fe bipoly_eval(const BiPoly& F, Fe x, Fe y, std::uint64_t p) {
  return poly_eval(bipoly_eval_partial(F, Axis::fix_x, x, p), y, p);
}

// Bytes needed for a big-endian residue: ceil(bitlen(p - 1) / 8), at least 1.
constexpr std::size_t encode_width(std::uint64_t p) {
  std::uint64_t top = p - 1;
  std::size_t bits = 0;
  while (top != 0) {
    ++bits;
    top >>= 1;
  }
  return bits == 0 ? 1 : (bits + 7) / 8;
}

inline Bytes encode_uint(std::uint64_t v, std::size_t width) {
  Bytes out(width);
  for (std::size_t i = width; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

inline std::uint64_t decode_uint(std::span<const std::uint8_t> bytes) {
  std::uint64_t v = 0;
  for (auto b : bytes) v = (v << 8) | b;
  return v;
}

inline Bytes fe_encode(Fe a, std::uint64_t p) { return encode_uint(a.value, encode_width(p)); }

inline Fe fe_decode(std::span<const std::uint8_t> bytes, std::uint64_t p) {
  if (bytes.size() != encode_width(p)) throw LengthMismatch(bytes.size(), encode_width(p));
  std::uint64_t v = decode_uint(bytes);
  if (v >= p) throw DomainError("encoded value is not a residue mod p");
  return Fe{v};
}

inline Bytes xor_bytes(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  Bytes out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

}  // namespace gka
