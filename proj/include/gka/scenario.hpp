#pragma once

// Scenario configuration, run reports, and reproducible output files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gka/attacks.hpp"
#include "gka/crypto.hpp"
#include "gka/protocol.hpp"
#include "gka/session.hpp"

namespace gka {

inline constexpr std::string_view kToolName = "gka-lab";
inline constexpr int kFormatVersion = 1;

enum class Mode { honest, attack };

struct AttackSettings {
  std::uint32_t victim = 3;
  std::uint32_t adversary = 1;
  std::optional<std::uint64_t> target_key;  // nullopt: drawn from the seed
  bool masquerade = true;
  bool literal_variant_a_formula = false;

  friend bool operator==(const AttackSettings&, const AttackSettings&) = default;
};

struct ScenarioConfig {
  SchemeParams params{1009, 12, 2, 4};
  std::vector<std::uint32_t> roster{1, 2, 3, 4, 5};
  Variant variant = Variant::chh_xor;
  std::uint64_t seed = 42;
  Mode mode = Mode::honest;
  AttackSettings attack;

  // Checks every parameter, roster and plan constraint without simulating.
  void validate() const {
    params.validate();
    std::vector<ParticipantId> ids(roster.begin(), roster.end());
    GroupRoster r(ids, params.n);
    if (mode == Mode::attack) {
      std::optional<GroupKey> target;
      if (attack.target_key) target = key_from_uint(*attack.target_key, params.p);
      AttackPlan plan{ParticipantId{attack.adversary}, ParticipantId{attack.victim}, target,
                      variant, attack.masquerade, attack.literal_variant_a_formula};
      if (attack.target_key && variant == Variant::chh_xor) {
        const std::size_t width = encode_width(params.p);
        if (width < 8 && *attack.target_key >> (8 * width) != 0) {
          throw DomainError("target key does not fit in " + std::to_string(width) + " bytes");
        }
      }
      plan.validate(r, params.p);
    }
  }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline nlohmann::ordered_json config_to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  j["params"] = {{"p", c.params.p}, {"n", c.params.n}, {"t", c.params.t}, {"h", c.params.h}};
  j["roster"] = c.roster;
  j["variant"] = variant_name(c.variant);
  j["seed"] = c.seed;
  j["mode"] = c.mode == Mode::honest ? "honest" : "attack";
  if (c.mode == Mode::attack) {
    nlohmann::ordered_json a;
    a["victim"] = c.attack.victim;
    a["adversary"] = c.attack.adversary;
    if (c.attack.target_key) {
      a["target_key"] = *c.attack.target_key;
    } else {
      a["target_key"] = "random";
    }
    a["stage4_masquerade"] = c.attack.masquerade;
    a["literal_variant_a_formula"] = c.attack.literal_variant_a_formula;
    j["attack"] = a;
  }
  return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    if (j.contains("params")) {
      const auto& p = j.at("params");
      c.params.p = p.value("p", c.params.p);
      c.params.n = p.value("n", c.params.n);
      c.params.t = p.value("t", c.params.t);
      c.params.h = p.value("h", c.params.h);
    }
    if (j.contains("roster")) c.roster = j.at("roster").get<std::vector<std::uint32_t>>();
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    c.seed = j.value("seed", c.seed);
    const std::string mode = j.value("mode", std::string("honest"));
    if (mode == "honest") {
      c.mode = Mode::honest;
    } else if (mode == "attack") {
      c.mode = Mode::attack;
    } else {
      throw ConfigError("unknown mode '" + mode + "'");
    }
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      c.attack.victim = a.value("victim", c.attack.victim);
      c.attack.adversary = a.value("adversary", c.attack.adversary);
      if (a.contains("target_key")) {
        const auto& k = a.at("target_key");
        if (k.is_string()) {
          if (k.get<std::string>() != "random") throw ConfigError("target_key must be an integer or \"random\"");
          c.attack.target_key.reset();
        } else {
          c.attack.target_key = k.get<std::uint64_t>();
        }
      }
      c.attack.masquerade = a.value("stage4_masquerade", c.attack.masquerade);
      c.attack.literal_variant_a_formula = a.value("literal_variant_a_formula", c.attack.literal_variant_a_formula);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario config: ") + e.what());
  }
  return c;
}

struct MemberOutcome {
  ParticipantId id;
  std::optional<GroupKey> key;
  std::string verdict;
};

struct Assertion {
  std::string name;
  bool pass = false;
};

struct RunReport {
  ScenarioConfig config;
  std::vector<MemberOutcome> members;
  std::optional<GroupKey> K;  // common key of the honest members
  std::optional<GroupKey> K_star;
  std::optional<Fe> L;
  std::vector<Assertion> assertions;
  std::optional<bool> attack_succeeded;
  std::string transcript_sha256;

  bool all_pass() const {
    for (const auto& a : assertions) {
      if (!a.pass) return false;
    }
    return true;
  }

  const MemberOutcome& member(std::uint32_t id) const {
    for (const auto& m : members) {
      if (m.id.index == id) return m;
    }
    throw ConfigError("no such member in report");
  }
};

inline nlohmann::ordered_json report_to_json(const RunReport& r) {
  auto key_json = [](const std::optional<GroupKey>& k) -> nlohmann::ordered_json {
    if (!k) return nullptr;
    return k->as_uint();
  };
  const auto& c = r.config;
  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["format"] = kFormatVersion;
  j["hash"] = crypto::kHashId;
  j["aead"] = crypto::kAeadId;
  j["seed"] = c.seed;
  j["config"] = config_to_json(c);
  j["variant"] = variant_name(c.variant);
  j["mode"] = c.mode == Mode::honest ? "honest" : "attack";
  j["roster"] = c.roster;
  if (c.mode == Mode::attack) {
    j["adversary"] = c.attack.adversary;
    j["victim"] = c.attack.victim;
  } else {
    j["adversary"] = nullptr;
    j["victim"] = nullptr;
  }
  j["K"] = key_json(r.K);
  j["K_star"] = key_json(r.K_star);
  j["L"] = r.L ? nlohmann::ordered_json(r.L->value) : nlohmann::ordered_json(nullptr);
  auto members = nlohmann::ordered_json::array();
  for (const auto& m : r.members) {
    nlohmann::ordered_json mj;
    mj["id"] = m.id.index;
    mj["key"] = key_json(m.key);
    mj["verdict"] = m.verdict;
    members.push_back(mj);
  }
  j["members"] = members;
  auto asserts = nlohmann::ordered_json::array();
  for (const auto& a : r.assertions) asserts.push_back({{"name", a.name}, {"pass", a.pass}});
  j["assertions"] = asserts;
  if (r.attack_succeeded) j["attack_succeeded"] = *r.attack_succeeded;
  j["transcript_ref"] = {{"file", "transcript.jsonl"}, {"sha256", r.transcript_sha256}};
  return j;
}

struct ScenarioResult {
  RunReport report;
  std::string transcript;  // header line plus one line per event
  int exit_code = 0;       // 0: every assertion passed, 1: at least one failed
};

inline std::string transcript_header(const ScenarioConfig& c) {
  nlohmann::ordered_json h;
  h["tool"] = kToolName;
  h["format"] = kFormatVersion;
  h["hash"] = crypto::kHashId;
  h["aead"] = crypto::kAeadId;
  h["seed"] = c.seed;
  h["variant"] = variant_name(c.variant);
  h["mode"] = c.mode == Mode::honest ? "honest" : "attack";
  nlohmann::ordered_json line;
  line["header"] = h;
  return line.dump() + "\n";
}

namespace detail {

inline bool all_equal_keys(const std::vector<MemberOutcome>& ms) {
  if (ms.empty() || !ms.front().key) return false;
  for (const auto& m : ms) {
    if (!m.key || *m.key != *ms.front().key) return false;
  }
  return true;
}

inline bool stage3_untouched(const Transcript& t) {
  return t.count(EventKind::suppressed, 3) == 0 && t.count(EventKind::injected, 3) == 0;
}

}  // namespace detail

inline ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  World world(config.params, config.roster, config.variant, config.seed);
  const std::uint64_t p = config.params.p;
  RunReport report;
  report.config = config;

  auto collect_members = [&] {
    for (const auto& m : world.members()) report.members.push_back({m.id(), m.key(), m.verdict()});
  };
  auto all_confirmed = [&](auto pred) {
    for (const auto& m : world.members()) {
      if (pred(m.id()) && m.phase() != Phase::confirmed) return false;
    }
    return true;
  };

  if (config.mode == Mode::honest) {
    world.run_honest();
    collect_members();
    const auto& first = world.members().front();
    report.K = first.key();
    report.L = first.checksum_input();
    bool L_agree = true;
    for (const auto& m : world.members()) L_agree = L_agree && m.checksum_input() == report.L;
    bool well_formed = report.K && report.K->bytes.size() == encode_width(p);
    if (well_formed && config.variant != Variant::chh_xor) well_formed = report.K->as_uint() < p;
    if (well_formed && config.variant == Variant::hhxzz_prod) well_formed = report.K->as_uint() != 0;
    report.assertions = {
        {"all_members_confirmed", all_confirmed([](ParticipantId) { return true; })},
        {"keys_agree", detail::all_equal_keys(report.members)},
        {"checksum_inputs_agree", L_agree && report.L.has_value()},
        {"key_well_formed", well_formed},
    };
  } else {
    const auto& a = config.attack;
    std::optional<GroupKey> chosen;
    if (a.target_key) chosen = key_from_uint(*a.target_key, p);
    AttackPlan plan{ParticipantId{a.adversary}, ParticipantId{a.victim}, chosen,
                    config.variant,          a.masquerade,           a.literal_variant_a_formula};
    AdversaryKnowledge known = run_attack(world, plan);
    const GroupKey& target = known.K_star;
    collect_members();
    report.K = known.K;
    report.K_star = known.K_star;
    report.L = world.member(plan.adversary).checksum_input();

    std::vector<MemberOutcome> others;
    for (const auto& m : report.members) {
      if (m.id != plan.victim) others.push_back(m);
    }
    const auto& victim = world.member(plan.victim);
    const bool victim_has_target = victim.key() == target;
    const bool others_share_K = detail::all_equal_keys(others) && others.front().key == known.K;
    const bool everyone_confirmed = all_confirmed([](ParticipantId) { return true; });
    const bool degenerate = target == known.K;
    const bool stage3_clean = detail::stage3_untouched(world.net().transcript());

    report.assertions.push_back({"non_victims_share_key", others_share_K});
    report.assertions.push_back({"stage3_channel_untouched", stage3_clean});
    if (a.literal_variant_a_formula) {
      const Fe K = fe_decode(known.K.bytes, p);
      const Fe expected = fe_add(fe_add(K, K, p), fe_decode(target.bytes, p), p);
      report.assertions.push_back({"victim_key_is_2K_plus_target", victim.key() == GroupKey{fe_encode(expected, p)}});
      report.assertions.push_back({"literal_formula_misses_target", !victim_has_target});
    } else {
      report.assertions.push_back({"victim_holds_target_key", victim_has_target});
      report.assertions.push_back({"adversary_knows_K_and_K_star",
                                   world.member(plan.adversary).key() == known.K && victim.key() == known.K_star});
      report.assertions.push_back(
          {"keys_diverge_iff_target_differs", degenerate ? victim.key() == known.K : victim.key() != known.K});
      if (a.masquerade) {
        report.assertions.push_back({"all_members_confirmed", everyone_confirmed});
      } else {
        const bool detected = degenerate ? everyone_confirmed : victim.verdict() == "Failed(confirm)";
        report.assertions.push_back({"victim_detects_mismatch", detected});
      }
    }
    report.attack_succeeded = victim_has_target && others_share_K && everyone_confirmed;
  }

  ScenarioResult result;
  result.transcript = transcript_header(config) + world.net().transcript().to_jsonl();
  auto digest = crypto::sha256(std::span(reinterpret_cast<const std::uint8_t*>(result.transcript.data()),
                                         result.transcript.size()));
  report.transcript_sha256 = to_hex(digest);
  result.report = std::move(report);
  result.exit_code = result.report.all_pass() ? 0 : 1;
  return result;
}

inline std::string report_text(const RunReport& r) { return report_to_json(r).dump(2) + "\n"; }

// Writes via a temporary file in the same directory and renames over the
// destination.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_outputs(const std::filesystem::path& dir, const std::string& report, const std::string& transcript) {
  write_atomically(dir / "transcript.jsonl", transcript);
  write_atomically(dir / "report.json", report);
}

// The demo runs the attack against all three variants with one seed.
struct DemoResult {
  std::vector<ScenarioResult> runs;
  std::string report;
  std::string transcript;
  int exit_code = 0;
};

inline std::vector<ScenarioConfig> demo_configs(std::uint64_t seed) {
  std::vector<ScenarioConfig> out;
  for (Variant v : {Variant::chh_xor, Variant::hhxzz_sum, Variant::hhxzz_prod}) {
    ScenarioConfig c;
    c.variant = v;
    c.seed = seed;
    c.mode = Mode::attack;
    out.push_back(c);
  }
  return out;
}

inline DemoResult run_demo(std::uint64_t seed) {
  DemoResult d;
  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["format"] = kFormatVersion;
  j["demo"] = true;
  j["seed"] = seed;
  auto runs = nlohmann::ordered_json::array();
  for (const auto& c : demo_configs(seed)) {
    auto r = run_scenario(c);
    runs.push_back(report_to_json(r.report));
    d.transcript += r.transcript;
    if (r.exit_code != 0) d.exit_code = 1;
    d.runs.push_back(std::move(r));
  }
  j["runs"] = runs;
  d.report = j.dump(2) + "\n";
  return d;
}

struct VerifyOutcome {
  bool report_matches = false;
  bool transcript_matches = false;
  bool ok() const { return report_matches && transcript_matches; }
};

// Re-runs the configuration embedded in a report and compares the output
// byte for byte against the report and the transcript next to it.
inline VerifyOutcome verify_report(const std::filesystem::path& report_path) {
  const std::string original = read_file(report_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(original);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  std::string report;
  std::string transcript;
  if (j.value("demo", false)) {
    auto d = run_demo(j.at("seed").get<std::uint64_t>());
    report = d.report;
    transcript = d.transcript;
  } else {
    if (!j.contains("config")) throw ConfigError("report has no embedded config");
    auto r = run_scenario(config_from_json(j.at("config")));
    report = report_text(r.report);
    transcript = r.transcript;
  }
  VerifyOutcome out;
  out.report_matches = report == original;
  auto tpath = report_path.parent_path() / "transcript.jsonl";
  out.transcript_matches = std::filesystem::exists(tpath) && read_file(tpath) == transcript;
  return out;
}

}  // namespace gka
