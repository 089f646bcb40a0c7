#pragma once

// Membership registration centre: token issuance and pairwise key derivation.
//
// The master secret is a bivariate polynomial F(x, y) of degree t-1 in x and
// h-1 in y. Participant U_i holds s_i(y) = F(x_i, y) and s_i(x) = F(x, x_i)
// with public point x_i = i. The key for a pair lo < hi is F(x_lo, x_hi):
// the lower index evaluates its y-share at x_hi, the higher index evaluates
// its x-share at x_lo.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gka/gfpoly.hpp"
#include "gka/rng.hpp"

namespace gka {

struct SchemeParams {
  std::uint64_t p = 0;
  std::uint32_t n = 0;
  std::uint32_t t = 0;
  std::uint32_t h = 0;

  // Throws ParamError naming the first violated constraint.
  void validate() const {
    if (p >= kMaxModulus) throw ParamError("p < 2^61 violated");
    if (!is_prime(p)) throw ParamError("p prime violated");
    if (n < 2) throw ParamError("n >= 2 violated");
    if (p <= n) throw ParamError("p > n violated");
    if (t < 1) throw ParamError("t >= 1 violated");
    if (h < 1) throw ParamError("h >= 1 violated");
    if (static_cast<std::int64_t>(h) <= 2 * static_cast<std::int64_t>(t) - 2) {
      throw ParamError("h > 2t−2 violated");
    }
  }

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

struct ParticipantId {
  std::uint32_t index = 0;

  constexpr ParticipantId() = default;
  constexpr explicit ParticipantId(std::uint32_t i) : index(i) {}

  constexpr Fe point() const { return Fe{index}; }

  friend constexpr auto operator<=>(ParticipantId, ParticipantId) = default;
};

struct MasterSecret {
  BiPoly F;
};

struct Token {
  ParticipantId owner;
  std::uint64_t p = 0;
  std::uint32_t t = 0;
  std::uint32_t h = 0;
  Poly s_y;  // F(x_owner, y), degree bound h
  Poly s_x;  // F(x, x_owner), degree bound t

  friend bool operator==(const Token&, const Token&) = default;
};

struct PairwiseKey {
  Fe k;
  ParticipantId lo;
  ParticipantId hi;

  friend bool operator==(const PairwiseKey&, const PairwiseKey&) = default;
};

struct SetupResult {
  MasterSecret master;
  std::vector<Token> tokens;  // tokens[i - 1] belongs to U_i
};

inline Token issue_token(const SchemeParams& params, const MasterSecret& master, ParticipantId who) {
  Token tok;
  tok.owner = who;
  tok.p = params.p;
  tok.t = params.t;
  tok.h = params.h;
  tok.s_y = bipoly_eval_partial(master.F, Axis::fix_x, who.point(), params.p);
  tok.s_x = bipoly_eval_partial(master.F, Axis::fix_y, who.point(), params.p);
  return tok;
}

inline MasterSecret sample_master(const SchemeParams& params, DetRng& rng) {
  MasterSecret m{BiPoly(params.t, params.h)};
  for (std::uint32_t u = 0; u < params.t; ++u) {
    for (std::uint32_t v = 0; v < params.h; ++v) m.F.coeff(u, v) = rng.field(params.p);
  }
  return m;
}

inline SetupResult mrc_setup(const SchemeParams& params, DetRng& rng) {
  params.validate();
  SetupResult out{sample_master(params, rng), {}};
  out.tokens.reserve(params.n);
  for (std::uint32_t i = 1; i <= params.n; ++i) {
    out.tokens.push_back(issue_token(params, out.master, ParticipantId{i}));
  }
  return out;
}

inline SetupResult mrc_setup(const SchemeParams& params, std::uint64_t seed) {
  DetRng rng(seed);
  return mrc_setup(params, rng);
}

inline PairwiseKey derive_pairwise_key(const Token& token, ParticipantId peer) {
  if (peer == token.owner) throw SelfKeyError{};
  if (peer.index == 0 || peer.index >= token.p) {
    throw DomainError("peer index " + std::to_string(peer.index) + " has no valid public point");
  }
  const ParticipantId lo = std::min(token.owner, peer);
  const ParticipantId hi = std::max(token.owner, peer);
  Fe k = token.owner == lo ? poly_eval(token.s_y, hi.point(), token.p)
                           : poly_eval(token.s_x, lo.point(), token.p);
  return PairwiseKey{k, lo, hi};
}

// Token serialization: {owner, p, t, h, s_y: [ints], s_x: [ints]}.

inline nlohmann::ordered_json token_to_json(const Token& tok) {
  auto coeffs = [](const Poly& f) {
    std::vector<std::uint64_t> out;
    out.reserve(f.coeffs.size());
    for (Fe c : f.coeffs) out.push_back(c.value);
    return out;
  };
  nlohmann::ordered_json j;
  j["owner"] = tok.owner.index;
  j["p"] = tok.p;
  j["t"] = tok.t;
  j["h"] = tok.h;
  j["s_y"] = coeffs(tok.s_y);
  j["s_x"] = coeffs(tok.s_x);
  return j;
}

inline Token token_from_json(const nlohmann::json& j) {
  Token tok;
  try {
    tok.owner = ParticipantId{j.at("owner").get<std::uint32_t>()};
    tok.p = j.at("p").get<std::uint64_t>();
    tok.t = j.at("t").get<std::uint32_t>();
    tok.h = j.at("h").get<std::uint32_t>();
    auto read = [&](const char* key, std::size_t bound) {
      auto raw = j.at(key).get<std::vector<std::uint64_t>>();
      if (raw.size() != bound) {
        throw ConfigError(std::string("token field ") + key + " has " + std::to_string(raw.size()) +
                          " coefficients, expected " + std::to_string(bound));
      }
      Poly f(bound);
      for (std::size_t d = 0; d < bound; ++d) {
        if (raw[d] >= tok.p) throw ConfigError(std::string("token field ") + key + " not reduced mod p");
        f.coeffs[d] = Fe{raw[d]};
      }
      return f;
    };
    tok.s_y = read("s_y", tok.h);
    tok.s_x = read("s_x", tok.t);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed token: ") + e.what());
  }
  return tok;
}

}  // namespace gka
