#pragma once

// Deterministic, stage-synchronous broadcast channel.
//
// Participants hand envelopes to the network; `schedule_round` routes every
// pending envelope to each of its recipients according to the channel policy
// and logs the outcome. An adversary that controls the channel may suppress
// traffic to or from its victim and inject envelopes whose claimed sender is
// any member. Without a controller the channel is a plain reliable broadcast.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gka/errors.hpp"
#include "gka/gfpoly.hpp"
#include "gka/scheme.hpp"

namespace gka {

// High nibble is the protocol stage, low nibble the sub-round.
enum class Stage : std::uint8_t {
  auth_nonce = 0x21,
  auth_tag = 0x22,
  ke_opener = 0x31,
  ke_contribution = 0x32,
  confirm = 0x41,
};

constexpr int stage_number(Stage s) { return static_cast<std::uint8_t>(s) >> 4; }

constexpr std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::auth_nonce: return "auth-nonce";
    case Stage::auth_tag: return "auth-tag";
    case Stage::ke_opener: return "ke-opener";
    case Stage::ke_contribution: return "ke-contribution";
    case Stage::confirm: return "confirm";
  }
  return "unknown";
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

struct Envelope {
  ParticipantId true_sender;
  ParticipantId claimed_sender;
  std::vector<ParticipantId> recipients;
  bool broadcast = false;
  Stage stage = Stage::auth_nonce;
  Bytes payload;
  std::uint64_t seq = 0;
  bool injected = false;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct StageRule {
  bool suppress_to_victim = false;    // honest traffic addressed to the victim is dropped
  bool redirect_from_victim = false;  // victim's traffic goes to the controller's tap only
  bool allow_injection = false;

  bool is_pass() const { return !suppress_to_victim && !redirect_from_victim && !allow_injection; }
};

struct ChannelPolicy {
  std::optional<ParticipantId> controller;
  std::optional<ParticipantId> victim;
  std::map<Stage, StageRule> rules;

  StageRule rule_for(Stage s) const {
    if (!controller) return {};
    auto it = rules.find(s);
    return it == rules.end() ? StageRule{} : it->second;
  }

  static ChannelPolicy pass() { return {}; }
};

enum class EventKind { sent, delivered, suppressed, injected };

constexpr std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::sent: return "sent";
    case EventKind::delivered: return "delivered";
    case EventKind::suppressed: return "suppressed";
    case EventKind::injected: return "injected";
  }
  return "unknown";
}

struct TranscriptEvent {
  EventKind kind;
  std::uint64_t time;
  Envelope envelope;
  std::optional<ParticipantId> recipient;  // set for delivered / suppressed
};

class Transcript {
 public:
  void append(TranscriptEvent e) { events_.push_back(std::move(e)); }
  const std::vector<TranscriptEvent>& events() const { return events_; }

  std::size_t count(EventKind kind, std::optional<int> stage = std::nullopt) const {
    std::size_t n = 0;
    for (const auto& e : events_) {
      if (e.kind == kind && (!stage || stage_number(e.envelope.stage) == *stage)) ++n;
    }
    return n;
  }

  // Every delivered/suppressed event follows the sent/injected event it
  // references, and each (envelope, recipient) is resolved exactly once.
  bool well_formed() const {
    std::map<std::uint64_t, std::set<ParticipantId>> open;
    for (const auto& e : events_) {
      const auto seq = e.envelope.seq;
      if (e.kind == EventKind::sent || e.kind == EventKind::injected) {
        if (open.count(seq)) return false;
        open[seq] = {e.envelope.recipients.begin(), e.envelope.recipients.end()};
        continue;
      }
      auto it = open.find(seq);
      if (it == open.end() || !e.recipient || it->second.erase(*e.recipient) != 1) return false;
    }
    for (const auto& [seq, pending] : open) {
      if (!pending.empty()) return false;
    }
    return true;
  }

  // One JSON object per line with a fixed key order.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
      nlohmann::ordered_json j;
      j["t"] = e.time;
      j["event"] = event_name(e.kind);
      j["seq"] = e.envelope.seq;
      if (e.recipient) {
        j["recipient"] = e.recipient->index;
      } else {
        j["stage"] = stage_name(e.envelope.stage);
        j["true_sender"] = e.envelope.true_sender.index;
        j["claimed_sender"] = e.envelope.claimed_sender.index;
        if (e.envelope.broadcast) {
          j["recipients"] = "broadcast";
        } else {
          std::vector<std::uint32_t> ids;
          for (auto r : e.envelope.recipients) ids.push_back(r.index);
          j["recipients"] = ids;
        }
        j["payload"] = to_hex(e.envelope.payload);
      }
      out += j.dump();
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<TranscriptEvent> events_;
};

using Inboxes = std::map<ParticipantId, std::vector<Envelope>>;

class Network {
 public:
  explicit Network(std::vector<ParticipantId> members, ChannelPolicy policy = {})
      : members_(members.begin(), members.end()) {
    set_policy(std::move(policy));
  }

  void set_policy(ChannelPolicy policy) {
    auto known = [&](std::optional<ParticipantId> id) { return !id || members_.count(*id) != 0; };
    if (!known(policy.controller)) throw ConfigError("channel controller is not a member");
    if (!known(policy.victim)) throw ConfigError("channel victim is not a member");
    bool needs_pair = false;
    for (const auto& [stage, rule] : policy.rules) needs_pair = needs_pair || !rule.is_pass();
    if (needs_pair && (!policy.controller || !policy.victim)) {
      throw ConfigError("channel rules require both a controller and a victim");
    }
    if (policy.controller && policy.victim && *policy.controller == *policy.victim) {
      throw ConfigError("channel controller and victim must differ");
    }
    policy_ = std::move(policy);
  }

  const ChannelPolicy& policy() const { return policy_; }
  const std::set<ParticipantId>& members() const { return members_; }

  // Honest send: the claimed sender is the true sender.
  std::uint64_t send(ParticipantId from, std::vector<ParticipantId> recipients, Stage stage, Bytes payload,
                     bool broadcast = false) {
    check_member(from);
    Envelope env{from, from, std::move(recipients), broadcast, stage, std::move(payload), next_seq_++, false};
    for (auto r : env.recipients) check_member(r);
    transcript_.append({EventKind::sent, time_, env, std::nullopt});
    pending_.push_back(std::move(env));
    return pending_.back().seq;
  }

  std::uint64_t send_broadcast(ParticipantId from, Stage stage, Bytes payload) {
    std::vector<ParticipantId> others;
    for (auto m : members_) {
      if (m != from) others.push_back(m);
    }
    return send(from, std::move(others), stage, std::move(payload), true);
  }

  // Adversarial send with a spoofed sender. Only the controller may inject,
  // and only on stages whose rule allows it.
  std::uint64_t inject(ParticipantId controller, ParticipantId claimed, std::vector<ParticipantId> recipients,
                       Stage stage, Bytes payload) {
    if (!policy_.controller || *policy_.controller != controller) {
      throw ConfigError("injection refused: sender does not control the channel");
    }
    if (!policy_.rule_for(stage).allow_injection) {
      throw ConfigError("injection refused: policy forbids injection on stage " +
                        std::string(stage_name(stage)));
    }
    check_member(claimed);
    Envelope env{controller, claimed, std::move(recipients), false, stage, std::move(payload), next_seq_++, true};
    for (auto r : env.recipients) check_member(r);
    transcript_.append({EventKind::injected, time_, env, std::nullopt});
    pending_.push_back(std::move(env));
    return pending_.back().seq;
  }

  // Routes all pending envelopes and advances logical time.
  Inboxes schedule_round() {
    Inboxes inboxes;
    for (auto& env : pending_) {
      const StageRule rule = policy_.rule_for(env.stage);
      bool tapped = false;
      for (auto r : env.recipients) {
        bool drop = false;
        if (!env.injected && policy_.victim) {
          if (rule.redirect_from_victim && env.true_sender == *policy_.victim) drop = true;
          if (rule.suppress_to_victim && r == *policy_.victim && env.true_sender != *policy_.victim) drop = true;
        }
        if (drop) {
          transcript_.append({EventKind::suppressed, time_, env, r});
          if (rule.redirect_from_victim && env.true_sender == *policy_.victim && !tapped) {
            intercepted_.push_back(env);
            tapped = true;
          }
        } else {
          transcript_.append({EventKind::delivered, time_, env, r});
          inboxes[r].push_back(env);
        }
      }
    }
    pending_.clear();
    ++time_;
    return inboxes;
  }

  const std::vector<Envelope>& intercepted() const { return intercepted_; }
  const Transcript& transcript() const { return transcript_; }
  std::uint64_t time() const { return time_; }

 private:
  void check_member(ParticipantId id) const {
    if (!members_.count(id)) throw ConfigError("unknown participant U_" + std::to_string(id.index));
  }

  std::set<ParticipantId> members_;
  ChannelPolicy policy_;
  std::vector<Envelope> pending_;
  std::vector<Envelope> intercepted_;
  Transcript transcript_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t time_ = 0;
};

// Appends `more` into `into`, keeping per-recipient arrival order.
inline void merge_inboxes(Inboxes& into, Inboxes more) {
  for (auto& [id, envs] : more) {
    auto& dst = into[id];
    for (auto& e : envs) dst.push_back(std::move(e));
  }
}

}  // namespace gka
