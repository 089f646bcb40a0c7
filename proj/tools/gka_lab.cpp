// gka_lab: run honest and attacked group key establishment sessions.
//
//   gka_lab honest --variant chh --roster 1,2,3,4,5 --seed 42 --out out/
//   gka_lab attack --variant hhxzz-a --victim 3 --adversary 1 --out out/
//   gka_lab verify out/report.json
//   gka_lab demo --seed 7 --out demo/
//
// Exit codes: 0 all assertions hold, 1 an assertion failed (or verify found a
// difference), 2 invalid configuration.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gka/gka.hpp"

namespace {

constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config_file;
  std::string variant;
  std::uint64_t p = 0;
  std::uint32_t n = 0;
  std::uint32_t t = 0;
  std::uint32_t h = 0;
  std::vector<std::uint32_t> roster;
  std::uint64_t seed = 0;
  std::uint32_t victim = 0;
  std::uint32_t adversary = 0;
  std::string target_key;
  bool no_masquerade = false;
  bool literal = false;
  std::string out = "out";
};

void add_scenario_flags(CLI::App* cmd, Flags& f) {
  // --h is a scheme parameter, so help is long-form only here.
  cmd->set_help_flag("--help", "Print this help message and exit");
  cmd->add_option("--config", f.config_file, "Scenario JSON file; flags override its fields");
  cmd->add_option("--variant", f.variant, "chh | hhxzz-a | hhxzz-b");
  cmd->add_option("--p", f.p, "Prime modulus");
  cmd->add_option("--n", f.n, "Number of registered participants");
  cmd->add_option("--t", f.t, "Degree bound of s_i(x)");
  cmd->add_option("--h", f.h, "Degree bound of s_i(y)");
  cmd->add_option("--roster", f.roster, "Comma-separated group members")->delimiter(',');
  cmd->add_option("--seed", f.seed, "Seed for all randomness");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

gka::ScenarioConfig build_config(const CLI::App* cmd, const Flags& f, gka::Mode mode) {
  gka::ScenarioConfig c;
  if (!f.config_file.empty()) {
    try {
      c = gka::config_from_json(nlohmann::json::parse(gka::read_file(f.config_file)));
    } catch (const nlohmann::json::exception& e) {
      throw gka::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
  }
  c.mode = mode;
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--variant")) c.variant = gka::parse_variant(f.variant);
  if (given("--p")) c.params.p = f.p;
  if (given("--n")) c.params.n = f.n;
  if (given("--t")) c.params.t = f.t;
  if (given("--h")) c.params.h = f.h;
  if (given("--roster")) c.roster = f.roster;
  if (given("--seed")) c.seed = f.seed;
  if (mode == gka::Mode::attack) {
    if (given("--victim")) c.attack.victim = f.victim;
    if (given("--adversary")) c.attack.adversary = f.adversary;
    if (given("--target-key")) {
      if (f.target_key == "random") {
        c.attack.target_key.reset();
      } else {
        try {
          std::size_t used = 0;
          c.attack.target_key = std::stoull(f.target_key, &used);
          if (used != f.target_key.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          throw gka::ConfigError("--target-key must be a non-negative integer or 'random'");
        }
      }
    }
    if (f.no_masquerade) c.attack.masquerade = false;
    if (f.literal) c.attack.literal_variant_a_formula = true;
  }
  return c;
}

std::string key_str(const std::optional<gka::GroupKey>& k) { return k ? std::to_string(k->as_uint()) : "-"; }

void print_report(const gka::RunReport& r) {
  const auto& c = r.config;
  std::cout << gka::variant_name(c.variant) << " " << (c.mode == gka::Mode::honest ? "honest" : "attack")
            << " p=" << c.params.p << " m=" << c.roster.size() << " seed=" << c.seed << "\n";
  for (const auto& m : r.members) {
    std::string role;
    if (c.mode == gka::Mode::attack && m.id.index == c.attack.victim) role = " (victim)";
    if (c.mode == gka::Mode::attack && m.id.index == c.attack.adversary) role = " (adversary)";
    std::cout << "  U_" << m.id.index << role << ": key=" << key_str(m.key) << " " << m.verdict << "\n";
  }
  if (r.K_star) std::cout << "  K=" << key_str(r.K) << " K*=" << key_str(r.K_star) << "\n";
  for (const auto& a : r.assertions) std::cout << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << a.name << "\n";
  if (r.attack_succeeded) std::cout << "  attack " << (*r.attack_succeeded ? "succeeded" : "failed") << "\n";
}

int run_one(const gka::ScenarioConfig& config, const std::string& out) {
  auto result = gka::run_scenario(config);
  gka::write_outputs(out, gka::report_text(result.report), result.transcript);
  print_report(result.report);
  return result.exit_code == 0 ? 0 : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group key establishment protocol lab"};
  app.require_subcommand(1);

  Flags honest_flags;
  auto* honest = app.add_subcommand("honest", "Run an honest session and check agreement");
  add_scenario_flags(honest, honest_flags);

  Flags attack_flags;
  auto* attack = app.add_subcommand("attack", "Run the insider victim-substitution attack");
  add_scenario_flags(attack, attack_flags);
  attack->add_option("--victim", attack_flags.victim, "Victim participant index");
  attack->add_option("--adversary", attack_flags.adversary, "Insider adversary participant index");
  attack->add_option("--target-key", attack_flags.target_key, "Key K* forced on the victim, or 'random'");
  attack->add_flag("--no-masquerade", attack_flags.no_masquerade, "Leave the confirmation stage untouched");
  attack->add_flag("--literal-variant-a-formula", attack_flags.literal,
                   "Forge with q_k + K + K* (hhxzz-a only) to show it misses K*");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "Re-run a report's configuration and compare outputs");
  verify->add_option("report", verify_path, "Path to report.json")->required();

  std::uint64_t demo_seed = 7;
  std::string demo_out = "demo";
  auto* demo = app.add_subcommand("demo", "Attack all three variants with one seed");
  demo->add_option("--seed", demo_seed, "Seed")->capture_default_str();
  demo->add_option("--out", demo_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*honest) return run_one(build_config(honest, honest_flags, gka::Mode::honest), honest_flags.out);
    if (*attack) return run_one(build_config(attack, attack_flags, gka::Mode::attack), attack_flags.out);
    if (*verify) {
      auto v = gka::verify_report(verify_path);
      std::cout << "report.json      " << (v.report_matches ? "identical" : "DIFFERS") << "\n";
      std::cout << "transcript.jsonl " << (v.transcript_matches ? "identical" : "DIFFERS") << "\n";
      return v.ok() ? 0 : kExitAssertion;
    }
    if (*demo) {
      auto d = gka::run_demo(demo_seed);
      gka::write_outputs(demo_out, d.report, d.transcript);
      std::printf("%-8s %-8s %-8s %-6s %-6s %-10s %s\n", "variant", "victim", "K", "K*", "vict.K", "confirmed",
                  "attack");
      for (const auto& r : d.runs) {
        const auto& rep = r.report;
        const auto& v = rep.member(rep.config.attack.victim);
        std::size_t confirmed = 0;
        for (const auto& m : rep.members) confirmed += m.verdict == "Confirmed";
        std::string conf = std::to_string(confirmed) + "/" + std::to_string(rep.members.size());
        std::printf("%-8s U_%-6u %-8s %-6s %-6s %-10s %s\n", std::string(gka::variant_name(rep.config.variant)).c_str(),
                    rep.config.attack.victim, key_str(rep.K).c_str(), key_str(rep.K_star).c_str(),
                    key_str(v.key).c_str(), conf.c_str(), rep.attack_succeeded.value_or(false) ? "succeeded" : "failed");
      }
      return d.exit_code == 0 ? 0 : kExitAssertion;
    }
  } catch (const gka::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
