#pragma once

// A simulated session: MRC setup, one participant per roster member, and the
// broadcast network between them, all driven from a single seed.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "gka/netsim.hpp"
#include "gka/protocol.hpp"
#include "gka/rng.hpp"
#include "gka/scheme.hpp"

namespace gka {

class World {
 public:
  // The master generator hands out three independent streams up front so the
  // protocol stream is identical whether or not an attack is staged.
  World(const SchemeParams& params, const std::vector<std::uint32_t>& roster, Variant variant, std::uint64_t seed)
      : params_(params),
        variant_(variant),
        seed_(seed),
        master_(seed),
        setup_rng_(master_.next()),
        protocol_rng_(master_.next()),
        attack_rng_(master_.next()),
        setup_(mrc_setup(params, setup_rng_)),
        roster_(to_ids(roster), params.n),
        net_(roster_.members()) {
    for (auto id : roster_.members()) {
      members_.emplace_back(setup_.tokens.at(id.index - 1), roster_, variant_);
    }
  }

  const SchemeParams& params() const { return params_; }
  Variant variant() const { return variant_; }
  std::uint64_t seed() const { return seed_; }
  const GroupRoster& roster() const { return roster_; }
  const SetupResult& setup() const { return setup_; }

  Network& net() { return net_; }
  const Network& net() const { return net_; }
  DetRng& protocol_rng() { return protocol_rng_; }
  DetRng& attack_rng() { return attack_rng_; }

  std::vector<Participant>& members() { return members_; }
  const std::vector<Participant>& members() const { return members_; }
  Participant& member(ParticipantId id) { return members_.at(index_of(id)); }
  const Participant& member(ParticipantId id) const { return members_.at(index_of(id)); }

  void send(ParticipantId from, const std::vector<OutMsg>& out) {
    for (const auto& m : out) {
      if (m.broadcast) {
        net_.send_broadcast(from, m.stage, m.payload);
      } else {
        net_.send(from, m.recipients, m.stage, m.payload);
      }
    }
  }

  // Optional in-transit mutation of delivered envelopes (fault injection).
  void set_fault(std::function<void(Envelope&, ParticipantId)> fault) { fault_ = std::move(fault); }

  Inboxes deliver() {
    Inboxes in = net_.schedule_round();
    if (fault_) {
      for (auto& [rcpt, envs] : in) {
        for (auto& e : envs) fault_(e, rcpt);
      }
    }
    return in;
  }

  void run_stage1() {
    for (auto& m : members_) m.derive_pairwise_keys();
  }

  void run_stage2() {
    for (auto& m : members_) send(m.id(), m.auth_nonces(protocol_rng_));
    auto nonces = deliver();
    for (auto& m : members_) send(m.id(), m.auth_tags(nonces[m.id()]));
    auto tags = deliver();
    for (auto& m : members_) m.auth_verify(tags[m.id()]);
  }

  void run_stage3() {
    for (auto& m : members_) send(m.id(), m.contribute(protocol_rng_));
    auto in = deliver();
    for (auto& m : members_) m.finalize_key(in[m.id()]);
  }

  void run_stage4() {
    for (auto& m : members_) send(m.id(), m.confirm());
    auto in = deliver();
    for (auto& m : members_) m.verify_confirmations(in[m.id()]);
  }

  void run_honest() {
    run_stage1();
    run_stage2();
    run_stage3();
    run_stage4();
  }

 private:
  static std::vector<ParticipantId> to_ids(const std::vector<std::uint32_t>& raw) {
    std::vector<ParticipantId> out;
    out.reserve(raw.size());
    for (auto r : raw) out.emplace_back(r);
    return out;
  }

  std::size_t index_of(ParticipantId id) const {
    if (!roster_.contains(id)) throw ConfigError("U_" + std::to_string(id.index) + " is not in the roster");
    return roster_.position(id);
  }

  SchemeParams params_;
  Variant variant_;
  std::uint64_t seed_;
  DetRng master_;
  DetRng setup_rng_;
  DetRng protocol_rng_;
  DetRng attack_rng_;
  SetupResult setup_;
  GroupRoster roster_;
  Network net_;
  std::vector<Participant> members_;
  std::function<void(Envelope&, ParticipantId)> fault_;
};

}  // namespace gka
