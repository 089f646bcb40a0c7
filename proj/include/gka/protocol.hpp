#pragma once

// Per-participant state machine for stages 1-4 of the CHH scheme and the two
// HHXZZ variants.
//
//   stage 1  pairwise keys k_ij from the token
//   stage 2  nonce broadcast, then per-peer tags H(k_ij || roster || r_i || r_j || dir)
//   stage 3  cleartext opener l_i broadcast plus q_i sealed separately for each peer
//   stage 4  broadcast H(K || L) and compare with every peer's tag
//
// Participants never touch the network; each step consumes an inbox and
// returns the messages to send. Every payload starts with a fixed header
// (stage tag, claimed sender, roster hash) so transcripts are bit-stable.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gka/crypto.hpp"
#include "gka/gfpoly.hpp"
#include "gka/netsim.hpp"
#include "gka/rng.hpp"
#include "gka/scheme.hpp"

namespace gka {

enum class Variant { chh_xor, hhxzz_sum, hhxzz_prod };

constexpr std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::chh_xor: return "chh";
    case Variant::hhxzz_sum: return "hhxzz-a";
    case Variant::hhxzz_prod: return "hhxzz-b";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "chh") return Variant::chh_xor;
  if (s == "hhxzz-a") return Variant::hhxzz_sum;
  if (s == "hhxzz-b") return Variant::hhxzz_prod;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected chh, hhxzz-a or hhxzz-b)");
}

class GroupRoster {
 public:
  GroupRoster() = default;

  GroupRoster(std::vector<ParticipantId> ids, std::uint32_t n) : ids_(std::move(ids)) {
    if (ids_.size() < 2) throw ConfigError("roster needs at least 2 members");
    if (ids_.size() > n) throw ConfigError("roster larger than n");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i].index < 1 || ids_[i].index > n) {
        throw ConfigError("roster member U_" + std::to_string(ids_[i].index) + " outside [1, n]");
      }
      if (i > 0 && !(ids_[i - 1] < ids_[i])) throw ConfigError("roster ids must be strictly increasing");
    }
    crypto::Hasher hasher;
    hasher.update("roster");
    hasher.update(bytes());
    hash_ = hasher.finish();
  }

  const std::vector<ParticipantId>& members() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool contains(ParticipantId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  std::size_t position(ParticipantId id) const {
    return static_cast<std::size_t>(std::lower_bound(ids_.begin(), ids_.end(), id) - ids_.begin());
  }

  Bytes bytes() const {
    Bytes out;
    for (auto id : ids_) {
      auto enc = encode_uint(id.index, 4);
      out.insert(out.end(), enc.begin(), enc.end());
    }
    return out;
  }

  const crypto::Digest& hash() const { return hash_; }

 private:
  std::vector<ParticipantId> ids_;
  crypto::Digest hash_{};
};

// CHH keys are the XOR of fixed-width encodings; HHXZZ keys are residues held
// in the same encoding.
struct GroupKey {
  Bytes bytes;

  std::uint64_t as_uint() const { return decode_uint(bytes); }
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

inline GroupKey key_from_uint(std::uint64_t v, std::uint64_t p) { return GroupKey{encode_uint(v, encode_width(p))}; }

// Contributions arrive as encoded byte strings in roster order.
inline GroupKey combine_key(Variant variant, const std::vector<Bytes>& contributions, std::size_t m,
                            std::uint64_t p) {
  if (contributions.size() != m) throw ArityError(contributions.size(), m);
  const std::size_t width = encode_width(p);
  switch (variant) {
    case Variant::chh_xor: {
      Bytes acc(width, 0);
      for (const auto& q : contributions) acc = xor_bytes(acc, q);
      return GroupKey{acc};
    }
    case Variant::hhxzz_sum: {
      Fe acc{0};
      for (const auto& q : contributions) acc = fe_add(acc, fe_decode(q, p), p);
      return GroupKey{fe_encode(acc, p)};
    }
    case Variant::hhxzz_prod: {
      Fe acc{1};
      for (const auto& q : contributions) {
        Fe v = fe_decode(q, p);
        if (v.value == 0) throw DomainError("product contributions must be nonzero");
        acc = fe_mul(acc, v, p);
      }
      return GroupKey{fe_encode(acc, p)};
    }
  }
  throw DomainError("unknown variant");
}

inline GroupKey combine_key(Variant variant, const std::vector<Fe>& contributions, std::size_t m, std::uint64_t p) {
  std::vector<Bytes> enc;
  enc.reserve(contributions.size());
  for (Fe q : contributions) enc.push_back(fe_encode(q, p));
  return combine_key(variant, enc, m, p);
}

enum class Phase { idle, authed, keyed, confirmed, failed };

constexpr std::string_view phase_name(Phase s) {
  switch (s) {
    case Phase::idle: return "Idle";
    case Phase::authed: return "Authed";
    case Phase::keyed: return "Keyed";
    case Phase::confirmed: return "Confirmed";
    case Phase::failed: return "Failed";
  }
  return "unknown";
}

struct OutMsg {
  std::vector<ParticipantId> recipients;  // empty when broadcast
  bool broadcast = false;
  Stage stage = Stage::auth_nonce;
  Bytes payload;
};

inline constexpr std::size_t kHeaderSize = 1 + 4 + crypto::kDigestSize;
inline constexpr std::size_t kAuthNonceSize = 16;

inline Bytes frame_payload(Stage stage, ParticipantId sender, const crypto::Digest& roster_hash,
                           std::span<const std::uint8_t> body) {
  Bytes out;
  out.reserve(kHeaderSize + body.size());
  out.push_back(static_cast<std::uint8_t>(stage));
  auto id = encode_uint(sender.index, 4);
  out.insert(out.end(), id.begin(), id.end());
  out.insert(out.end(), roster_hash.begin(), roster_hash.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// Associated data for a sealed contribution.
inline Bytes contribution_ad(ParticipantId sender, ParticipantId recipient, const crypto::Digest& roster_hash) {
  Bytes ad;
  ad.push_back(static_cast<std::uint8_t>(Stage::ke_contribution));
  auto s = encode_uint(sender.index, 4);
  auto r = encode_uint(recipient.index, 4);
  ad.insert(ad.end(), s.begin(), s.end());
  ad.insert(ad.end(), r.begin(), r.end());
  ad.insert(ad.end(), roster_hash.begin(), roster_hash.end());
  return ad;
}

class Participant {
 public:
  Participant(Token token, GroupRoster roster, Variant variant)
      : token_(std::move(token)), roster_(std::move(roster)), variant_(variant), p_(token_.p) {
    if (!roster_.contains(token_.owner)) throw ConfigError("participant is not in the roster");
  }

  ParticipantId id() const { return token_.owner; }
  Phase phase() const { return phase_; }
  const std::string& failure_reason() const { return failure_; }
  Variant variant() const { return variant_; }
  const GroupRoster& roster() const { return roster_; }
  std::uint64_t modulus() const { return p_; }

  // "Confirmed" or "Failed(<reason>)" once stage 4 has run; the phase name otherwise.
  std::string verdict() const {
    if (phase_ == Phase::failed) return "Failed(" + failure_ + ")";
    return std::string(phase_name(phase_));
  }

  const std::optional<GroupKey>& key() const { return key_; }
  std::optional<Fe> checksum_input() const { return L_; }
  const Bytes& own_contribution() const { return q_; }
  const std::map<ParticipantId, Bytes>& received_contributions() const { return received_q_; }
  const std::map<ParticipantId, PairwiseKey>& pairwise_keys() const { return pairwise_; }

  // Stage 1. Keys never change between sessions, so re-deriving is harmless.
  void derive_pairwise_keys() {
    for (auto peer : roster_.members()) {
      if (peer != id()) pairwise_[peer] = derive_pairwise_key(token_, peer);
    }
  }

  // Stage 2a: broadcast a fresh nonce.
  std::vector<OutMsg> auth_nonces(DetRng& rng) {
    require(Phase::idle, "auth_nonces");
    if (pairwise_.size() + 1 != roster_.size()) throw StateError("pairwise keys not derived");
    auth_nonce_ = rng.bytes(kAuthNonceSize);
    return {broadcast(Stage::auth_nonce, auth_nonce_)};
  }

  // Stage 2b: record peers' nonces and broadcast one tag per peer.
  std::vector<OutMsg> auth_tags(const std::vector<Envelope>& inbox) {
    if (phase_ == Phase::failed) return {};
    require(Phase::idle, "auth_tags");
    auto bodies = collect(inbox, Stage::auth_nonce, "auth");
    if (!bodies) return {};
    for (auto peer : peers()) {
      auto it = bodies->find(peer);
      if (it == bodies->end()) return fail("auth-timeout");
      if (it->second.size() != kAuthNonceSize) return fail("auth");
      peer_nonces_[peer] = it->second;
    }
    Bytes body;
    for (auto peer : peers()) {
      auto idb = encode_uint(peer.index, 4);
      body.insert(body.end(), idb.begin(), idb.end());
      auto tag = auth_tag(id(), peer, auth_nonce_, peer_nonces_[peer]);
      body.insert(body.end(), tag.begin(), tag.end());
    }
    return {broadcast(Stage::auth_tag, body)};
  }

  // Stage 2c: check the tag each peer addressed to us.
  void auth_verify(const std::vector<Envelope>& inbox) {
    if (phase_ == Phase::failed) return;
    require(Phase::idle, "auth_verify");
    auto bodies = collect(inbox, Stage::auth_tag, "auth");
    if (!bodies) return;
    constexpr std::size_t entry = 4 + crypto::kDigestSize;
    for (auto peer : peers()) {
      auto it = bodies->find(peer);
      if (it == bodies->end()) {
        fail("auth-timeout");
        return;
      }
      const Bytes& body = it->second;
      if (body.size() != entry * (roster_.size() - 1)) {
        fail("auth");
        return;
      }
      bool found = false;
      for (std::size_t off = 0; off < body.size(); off += entry) {
        if (decode_uint(std::span(body).subspan(off, 4)) != id().index) continue;
        found = true;
        auto expected = auth_tag(peer, id(), peer_nonces_[peer], auth_nonce_);
        if (!std::equal(expected.begin(), expected.end(), body.begin() + static_cast<std::ptrdiff_t>(off + 4))) {
          fail("auth");
          return;
        }
      }
      if (!found) {
        fail("auth");
        return;
      }
    }
    phase_ = Phase::authed;
  }

  // Stage 3a: sample q and the opener, broadcast the opener and seal q for
  // each peer. Nonces are fixed here so a later reseal reuses the slot.
  std::vector<OutMsg> contribute(DetRng& rng) {
    if (phase_ == Phase::failed) return {};
    require(Phase::authed, "contribute");
    Fe q = variant_ == Variant::hhxzz_prod ? rng.nonzero_field(p_) : rng.field(p_);
    q_ = fe_encode(q, p_);
    opener_ = rng.field(p_);
    for (auto peer : peers()) {
      auto raw = rng.bytes(crypto::kNonceSize);
      std::copy(raw.begin(), raw.end(), seal_nonces_[peer].begin());
    }
    std::vector<OutMsg> out{broadcast(Stage::ke_opener, fe_encode(opener_, p_))};
    for (auto peer : peers()) out.push_back(seal_contribution(peer, q_));
    return out;
  }

  // Seals an arbitrary plaintext as our contribution to `peer`.
  OutMsg seal_contribution(ParticipantId peer, std::span<const std::uint8_t> plaintext) const {
    auto it = seal_nonces_.find(peer);
    if (it == seal_nonces_.end()) throw StateError("no contribution slot for peer");
    auto key = crypto::derive_aead_key(pairwise_.at(peer).k, p_);
    auto ct = crypto::aead_seal(key, it->second, plaintext, contribution_ad(id(), peer, roster_.hash()));
    Bytes body(it->second.begin(), it->second.end());
    body.insert(body.end(), ct.begin(), ct.end());
    return OutMsg{{peer}, false, Stage::ke_contribution, frame_payload(Stage::ke_contribution, id(), roster_.hash(), body)};
  }

  // Stage 3b: open every peer's contribution and combine.
  void finalize_key(const std::vector<Envelope>& inbox) {
    if (phase_ == Phase::failed) return;
    require(Phase::authed, "finalize_key");
    if (q_.empty()) throw StateError("finalize_key before contribute");
    auto openers = collect(inbox, Stage::ke_opener, "ke");
    if (!openers) return;
    auto sealed = collect(inbox, Stage::ke_contribution, "decrypt");
    if (!sealed) return;

    const std::size_t width = encode_width(p_);
    Fe L = opener_;
    std::vector<Bytes> ordered;
    for (auto member : roster_.members()) {
      if (member == id()) {
        ordered.push_back(q_);
        continue;
      }
      auto o = openers->find(member);
      auto s = sealed->find(member);
      if (o == openers->end() || s == sealed->end()) return void(fail("ke-timeout"));
      if (o->second.size() != width || decode_uint(o->second) >= p_) return void(fail("ke"));
      L = fe_add(L, Fe{decode_uint(o->second)}, p_);

      const Bytes& body = s->second;
      if (body.size() < crypto::kNonceSize) return void(fail("decrypt"));
      crypto::Nonce nonce{};
      std::copy_n(body.begin(), crypto::kNonceSize, nonce.begin());
      auto key = crypto::derive_aead_key(pairwise_.at(member).k, p_);
      auto plain = crypto::aead_open(key, nonce, std::span(body).subspan(crypto::kNonceSize),
                                     contribution_ad(member, id(), roster_.hash()));
      if (!plain || plain->size() != width) return void(fail("decrypt"));
      // XOR combines bit strings; the field variants need a valid residue.
      if (variant_ != Variant::chh_xor) {
        std::uint64_t v = decode_uint(*plain);
        if (v >= p_ || (variant_ == Variant::hhxzz_prod && v == 0)) return void(fail("contribution"));
      }
      received_q_[member] = *plain;
      ordered.push_back(std::move(*plain));
    }
    L_ = L;
    key_ = combine_key(variant_, ordered, roster_.size(), p_);
    phase_ = Phase::keyed;
  }

  crypto::Digest confirmation_tag(const GroupKey& key) const {
    if (!L_) throw StateError("checksum input not established");
    return crypto::Hasher{}.update(key.bytes).update(fe_encode(*L_, p_)).finish();
  }

  // Confirmation payload framed as if sent by `claimed_sender`.
  Bytes confirmation_payload(ParticipantId claimed_sender, const GroupKey& key) const {
    auto tag = confirmation_tag(key);
    return frame_payload(Stage::confirm, claimed_sender, roster_.hash(), tag);
  }

  // Stage 4a: broadcast H(K || L).
  std::vector<OutMsg> confirm() {
    if (phase_ == Phase::failed) return {};
    require(Phase::keyed, "confirm");
    auto tag = confirmation_tag(*key_);
    return {broadcast(Stage::confirm, tag)};
  }

  // Stage 4b: every peer's tag must equal ours.
  void verify_confirmations(const std::vector<Envelope>& inbox) {
    if (phase_ == Phase::failed) return;
    require(Phase::keyed, "verify_confirmations");
    auto tags = collect(inbox, Stage::confirm, "confirm");
    if (!tags) return;
    const auto mine = confirmation_tag(*key_);
    bool missing = false;
    for (auto peer : peers()) {
      auto it = tags->find(peer);
      if (it == tags->end()) {
        missing = true;
        continue;
      }
      if (!std::equal(mine.begin(), mine.end(), it->second.begin(), it->second.end())) {
        fail("confirm");
        return;
      }
    }
    if (missing) {
      fail("confirm-timeout");
      return;
    }
    phase_ = Phase::confirmed;
  }

 private:
  std::vector<ParticipantId> peers() const {
    std::vector<ParticipantId> out;
    for (auto m : roster_.members()) {
      if (m != id()) out.push_back(m);
    }
    return out;
  }

  void require(Phase want, const char* op) const {
    if (phase_ != want) {
      throw StateError(std::string(op) + " called in phase " + std::string(phase_name(phase_)));
    }
  }

  std::vector<OutMsg> fail(std::string reason) {
    phase_ = Phase::failed;
    failure_ = std::move(reason);
    return {};
  }

  OutMsg broadcast(Stage stage, std::span<const std::uint8_t> body) const {
    return OutMsg{{}, true, stage, frame_payload(stage, id(), roster_.hash(), body)};
  }

  // Extracts the bodies of `stage` messages keyed by claimed sender. A
  // malformed header or a duplicate sender fails the participant.
  std::optional<std::map<ParticipantId, Bytes>> collect(const std::vector<Envelope>& inbox, Stage stage,
                                                        const char* reason) {
    std::map<ParticipantId, Bytes> out;
    for (const auto& env : inbox) {
      if (env.stage != stage) continue;
      const Bytes& pl = env.payload;
      bool ok = pl.size() >= kHeaderSize && pl[0] == static_cast<std::uint8_t>(stage) &&
                decode_uint(std::span(pl).subspan(1, 4)) == env.claimed_sender.index &&
                std::equal(roster_.hash().begin(), roster_.hash().end(), pl.begin() + 5) &&
                roster_.contains(env.claimed_sender) && env.claimed_sender != id();
      if (!ok || out.count(env.claimed_sender)) {
        fail(reason);
        return std::nullopt;
      }
      out[env.claimed_sender] = Bytes(pl.begin() + kHeaderSize, pl.end());
    }
    return out;
  }

  crypto::Digest auth_tag(ParticipantId from, ParticipantId to, const Bytes& nonce_from, const Bytes& nonce_to) const {
    ParticipantId peer = from == id() ? to : from;
    std::uint8_t dir = from < to ? 0x01 : 0x02;
    return crypto::Hasher{}
        .update(fe_encode(pairwise_.at(peer).k, p_))
        .update(roster_.bytes())
        .update(nonce_from)
        .update(nonce_to)
        .update(dir)
        .finish();
  }

  Token token_;
  GroupRoster roster_;
  Variant variant_;
  std::uint64_t p_;

  Phase phase_ = Phase::idle;
  std::string failure_;
  std::map<ParticipantId, PairwiseKey> pairwise_;

  Bytes auth_nonce_;
  std::map<ParticipantId, Bytes> peer_nonces_;

  Bytes q_;
  Fe opener_;
  std::map<ParticipantId, crypto::Nonce> seal_nonces_;
  std::map<ParticipantId, Bytes> received_q_;
  std::optional<Fe> L_;
  std::optional<GroupKey> key_;
};

}  // namespace gka
