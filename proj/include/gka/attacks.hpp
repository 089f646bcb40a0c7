#pragma once

// Insider victim-substitution attack on group key establishment.
//
// The adversary U_k is an ordinary roster member running the honest state
// machine. In stage 3 it waits for everyone else's contributions, learns K,
// and seals a forged contribution for the victim so that the victim's
// combiner yields K*. In stage 4 it takes control of the channel around the
// victim: the victim's H(K*||L) is swallowed and replaced by H(K||L) towards
// the others, and the others' H(K||L) is replaced by H(K*||L) towards the
// victim. Everyone confirms; the victim holds a different key.

#include <cstdint>
#include <optional>
#include <vector>

#include "gka/errors.hpp"
#include "gka/gfpoly.hpp"
#include "gka/netsim.hpp"
#include "gka/protocol.hpp"
#include "gka/session.hpp"

namespace gka {

struct AttackPlan {
  ParticipantId adversary;
  ParticipantId victim;
  // K*. When empty the adversary draws a random well-formed key different
  // from K once it has learned K.
  std::optional<GroupKey> target;
  Variant variant = Variant::chh_xor;
  bool stage4_masquerade = true;
  // Use q_k + K + K* for the additive variant instead of q_k - K + K*.
  bool literal_sum_formula = false;

  void validate(const GroupRoster& roster, std::uint64_t p) const {
    if (!roster.contains(adversary)) throw ConfigError("adversary must be a roster member");
    if (!roster.contains(victim)) throw ConfigError("victim must be a roster member");
    if (adversary == victim) throw ConfigError("victim and adversary must differ");
    if (literal_sum_formula && variant != Variant::hhxzz_sum) {
      throw ConfigError("the literal additive formula only applies to hhxzz-a");
    }
    if (target) validate_target(*target, variant, p);
  }

  static void validate_target(const GroupKey& k, Variant variant, std::uint64_t p) {
    if (k.bytes.size() != encode_width(p)) throw LengthMismatch(k.bytes.size(), encode_width(p));
    if (variant == Variant::chh_xor) return;
    const std::uint64_t v = k.as_uint();
    if (v >= p) throw DomainError("target key must be below p");
    if (variant == Variant::hhxzz_prod && v == 0) throw DomainError("target key must be nonzero for hhxzz-b");
  }
};

inline Bytes forge_q_chh(std::span<const std::uint8_t> q_k, std::span<const std::uint8_t> K,
                         std::span<const std::uint8_t> K_star) {
  return xor_bytes(xor_bytes(q_k, K), K_star);
}

inline Fe forge_q_sum(Fe q_k, Fe K, Fe K_star, std::uint64_t p) { return fe_add(fe_sub(q_k, K, p), K_star, p); }

// q_k + K + K*; lands the victim on 2K + K* rather than K*.
inline Fe forge_q_sum_literal(Fe q_k, Fe K, Fe K_star, std::uint64_t p) {
  return fe_add(fe_add(q_k, K, p), K_star, p);
}

inline Fe forge_q_prod(Fe q_k, Fe K, Fe K_star, std::uint64_t p) {
  if (q_k.value == 0 || K_star.value == 0) throw DomainError("product forgery needs nonzero q_k and K*");
  return fe_mul(fe_mul(q_k, fe_inv(K, p), p), K_star, p);
}

inline Bytes forge_contribution(Variant variant, bool literal_sum, const Bytes& q_k, const GroupKey& K,
                                const GroupKey& K_star, std::uint64_t p) {
  switch (variant) {
    case Variant::chh_xor:
      return forge_q_chh(q_k, K.bytes, K_star.bytes);
    case Variant::hhxzz_sum: {
      auto forge = literal_sum ? forge_q_sum_literal : forge_q_sum;
      return fe_encode(forge(fe_decode(q_k, p), fe_decode(K.bytes, p), fe_decode(K_star.bytes, p), p), p);
    }
    case Variant::hhxzz_prod:
      return fe_encode(forge_q_prod(fe_decode(q_k, p), fe_decode(K.bytes, p), fe_decode(K_star.bytes, p), p), p);
  }
  throw DomainError("unknown variant");
}

// A uniformly random well-formed key for the variant.
inline GroupKey random_target(Variant variant, std::uint64_t p, DetRng& rng) {
  Fe v = variant == Variant::hhxzz_prod ? rng.nonzero_field(p) : rng.field(p);
  return GroupKey{fe_encode(v, p)};
}

// As above, but never equal to `avoid`.
inline GroupKey random_target_except(Variant variant, std::uint64_t p, const GroupKey& avoid, DetRng& rng) {
  if (variant == Variant::hhxzz_prod && p == 2) throw DomainError("no nonzero key other than 1 exists for p = 2");
  GroupKey k;
  do {
    k = random_target(variant, p, rng);
  } while (k == avoid);
  return k;
}

// What the adversary has learned by the end of stage 3.
struct AdversaryKnowledge {
  GroupKey K;
  GroupKey K_star;
};

inline void check_plan(const World& world, const AttackPlan& plan) {
  if (plan.variant != world.variant()) throw ConfigError("attack plan variant does not match the session");
  plan.validate(world.roster(), world.params().p);
}

// Stage 3 under a pass-through channel: the adversary defers its own sends
// until it has opened everyone else's contribution.
inline AdversaryKnowledge run_stage3_attack(World& world, const AttackPlan& plan) {
  check_plan(world, plan);
  for (const auto& m : world.members()) {
    if (m.phase() != Phase::authed) throw StateError("stage 3 attack requires every member to be Authed");
  }
  for (Stage s : {Stage::ke_opener, Stage::ke_contribution}) {
    if (!world.net().policy().rule_for(s).is_pass()) throw ConfigError("stage 3 attack runs on a pass-through channel");
  }

  std::map<ParticipantId, std::vector<OutMsg>> outbound;
  for (auto& m : world.members()) outbound[m.id()] = m.contribute(world.protocol_rng());

  for (auto& m : world.members()) {
    if (m.id() != plan.adversary) world.send(m.id(), outbound[m.id()]);
  }
  Inboxes first = world.deliver();

  Participant& adv = world.member(plan.adversary);
  adv.finalize_key(first[adv.id()]);
  if (!adv.key()) throw StateError("adversary failed to establish K: " + adv.verdict());
  const GroupKey K = *adv.key();
  const GroupKey K_star = plan.target ? *plan.target : random_target_except(plan.variant, world.params().p, K, world.attack_rng());

  Bytes forged = forge_contribution(plan.variant, plan.literal_sum_formula, adv.own_contribution(), K, K_star,
                                    world.params().p);
  for (auto& msg : outbound[adv.id()]) {
    if (msg.stage == Stage::ke_contribution && msg.recipients.front() == plan.victim) {
      msg = adv.seal_contribution(plan.victim, forged);
    }
  }
  world.send(adv.id(), outbound[adv.id()]);
  Inboxes second = world.deliver();
  merge_inboxes(first, std::move(second));

  for (auto& m : world.members()) {
    if (m.id() != plan.adversary) m.finalize_key(first[m.id()]);
  }
  return AdversaryKnowledge{K, K_star};
}

inline ChannelPolicy masquerade_policy(const AttackPlan& plan) {
  ChannelPolicy policy;
  policy.controller = plan.adversary;
  policy.victim = plan.victim;
  policy.rules[Stage::confirm] = StageRule{true, true, true};
  return policy;
}

// Stage 4. With the masquerade enabled the adversary controls the confirm
// traffic to and from the victim; otherwise the channel stays honest.
inline void run_stage4_masquerade(World& world, const AttackPlan& plan, const AdversaryKnowledge& known) {
  check_plan(world, plan);
  world.net().set_policy(plan.stage4_masquerade ? masquerade_policy(plan) : ChannelPolicy::pass());

  for (auto& m : world.members()) world.send(m.id(), m.confirm());
  Inboxes in = world.deliver();

  if (plan.stage4_masquerade) {
    const Participant& adv = world.member(plan.adversary);
    std::vector<ParticipantId> others;
    for (auto id : world.roster().members()) {
      if (id != plan.victim) others.push_back(id);
    }
    world.net().inject(adv.id(), plan.victim, others, Stage::confirm, adv.confirmation_payload(plan.victim, known.K));
    for (auto id : others) {
      world.net().inject(adv.id(), id, {plan.victim}, Stage::confirm, adv.confirmation_payload(id, known.K_star));
    }
    merge_inboxes(in, world.deliver());
  }

  for (auto& m : world.members()) m.verify_confirmations(in[m.id()]);
  world.net().set_policy(ChannelPolicy::pass());
}

// Full run: stages 1-2 honest, then the two attack phases.
inline AdversaryKnowledge run_attack(World& world, const AttackPlan& plan) {
  check_plan(world, plan);
  world.run_stage1();
  world.run_stage2();
  auto known = run_stage3_attack(world, plan);
  run_stage4_masquerade(world, plan, known);
  return known;
}

}  // namespace gka
