// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//
//   acceptance [output-dir]
//
// The output directory receives two copies of the seed-7 demo outputs for the
// determinism check.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gka/gka.hpp"

using namespace gka;
namespace fs = std::filesystem;

namespace {

const SchemeParams kParams{1009, 12, 2, 4};
constexpr Variant kVariants[] = {Variant::chh_xor, Variant::hhxzz_sum, Variant::hhxzz_prod};

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::vector<std::uint32_t> random_roster(DetRng& rng, std::uint32_t n, std::uint32_t m) {
  std::vector<std::uint32_t> all;
  for (std::uint32_t i = 1; i <= n; ++i) all.push_back(i);
  for (std::uint32_t i = 0; i < m; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
  std::vector<std::uint32_t> out(all.begin(), all.begin() + m);
  std::sort(out.begin(), out.end());
  return out;
}

// Random roster of size 2..8 with distinct victim and adversary drawn from it.
ScenarioConfig random_attack(DetRng& pick, Variant v) {
  ScenarioConfig c;
  c.params = kParams;
  c.variant = v;
  c.mode = Mode::attack;
  c.seed = pick.next();
  c.roster = random_roster(pick, kParams.n, static_cast<std::uint32_t>(pick.between(2, 8)));
  const std::size_t a = pick.below(c.roster.size());
  std::size_t b = pick.below(c.roster.size() - 1);
  if (b >= a) ++b;
  c.attack.adversary = c.roster[a];
  c.attack.victim = c.roster[b];
  return c;
}

std::uint64_t key_of(const MemberOutcome& m) { return m.key ? m.key->as_uint() : UINT64_MAX; }

// Independent combiner over plain integers.
std::uint64_t fold_oracle(Variant v, const std::vector<std::uint64_t>& q, std::uint64_t p) {
  std::uint64_t acc = v == Variant::hhxzz_prod ? 1 : 0;
  for (auto x : q) {
    if (v == Variant::chh_xor) acc ^= x;
    if (v == Variant::hhxzz_sum) acc = (acc + x) % p;
    if (v == Variant::hhxzz_prod) acc = acc * x % p;
  }
  return acc;
}

bool stage3_clean(const std::string& transcript) {
  // Stage 3 envelopes are logged as ke-opener / ke-contribution; suppressed
  // and injected events on those seqs must not exist.
  std::set<std::uint64_t> stage3;
  std::istringstream in(transcript);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.contains("header")) continue;
    const std::string ev = j["event"];
    if (ev == "sent" || ev == "injected") {
      const std::string stage = j["stage"];
      if (stage.rfind("ke-", 0) == 0) {
        if (ev == "injected") return false;
        stage3.insert(j["seq"].get<std::uint64_t>());
      }
    } else if (ev == "suppressed" && stage3.count(j["seq"].get<std::uint64_t>())) {
      return false;
    }
  }
  return true;
}

struct AttackTally {
  int runs = 0;
  int ok = 0;
  int clean = 0;
};

AttackTally attack_runs(Variant v, std::uint64_t seed) {
  DetRng pick(seed);
  AttackTally t;
  for (int i = 0; i < 100; ++i) {
    auto c = random_attack(pick, v);
    auto r = run_scenario(c);
    const auto& rep = r.report;
    const std::uint64_t K = rep.K->as_uint();
    const std::uint64_t K_star = rep.K_star->as_uint();
    bool ok = key_of(rep.member(c.attack.victim)) == K_star;
    for (const auto& m : rep.members) {
      ok = ok && m.verdict == "Confirmed";
      if (m.id.index != c.attack.victim) ok = ok && key_of(m) == K && (K_star == K || key_of(m) != K_star);
    }
    ++t.runs;
    t.ok += ok;
    t.clean += stage3_clean(r.transcript);
  }
  return t;
}

void criterion1() {
  auto start = std::chrono::steady_clock::now();
  int good = 0, total = 0;
  DetRng pick(1001);
  for (Variant v : kVariants) {
    for (int i = 0; i < 100; ++i) {
      ScenarioConfig c;
      c.params = kParams;
      c.variant = v;
      c.seed = pick.next();
      c.roster = random_roster(pick, kParams.n, static_cast<std::uint32_t>(pick.between(2, 8)));
      auto r = run_scenario(c);
      bool ok = true;
      for (const auto& m : r.report.members) {
        ok = ok && m.verdict == "Confirmed" && m.key && r.report.members.front().key &&
             m.key->bytes == r.report.members.front().key->bytes;
      }
      good += ok;
      ++total;
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, good == total && secs < 5.0, "honest agreement, 100 runs per variant",
         std::to_string(good) + "/" + std::to_string(total) + " agreed, " + std::to_string(secs) + " s");
}

AttackTally chh_tally, sum_tally, prod_tally;

void criterion2() {
  chh_tally = attack_runs(Variant::chh_xor, 2002);
  report(2, chh_tally.ok == chh_tally.runs, "CHH attack reproduction",
         std::to_string(chh_tally.ok) + "/" + std::to_string(chh_tally.runs) + " runs");
}

void criterion3() {
  sum_tally = attack_runs(Variant::hhxzz_sum, 3003);
  prod_tally = attack_runs(Variant::hhxzz_prod, 3004);

  const std::uint64_t p = kParams.p;
  DetRng rng(3005);
  int identities = 0, identity_ok = 0;
  for (Variant v : {Variant::hhxzz_sum, Variant::hhxzz_prod}) {
    for (int i = 0; i < 10000; ++i) {
      const std::size_t m = 2 + rng.below(7);
      const std::size_t k = rng.below(m);
      std::vector<std::uint64_t> q;
      for (std::size_t j = 0; j < m; ++j) q.push_back(v == Variant::hhxzz_prod ? 1 + rng.below(p - 1) : rng.below(p));
      const std::uint64_t K = fold_oracle(v, q, p);
      const std::uint64_t K_star = v == Variant::hhxzz_prod ? 1 + rng.below(p - 1) : rng.below(p);
      Fe forged = v == Variant::hhxzz_sum ? forge_q_sum(Fe{q[k]}, Fe{K}, Fe{K_star}, p)
                                          : forge_q_prod(Fe{q[k]}, Fe{K}, Fe{K_star}, p);
      q[k] = forged.value;
      ++identities;
      identity_ok += fold_oracle(v, q, p) == K_star;
    }
  }
  const bool pass = sum_tally.ok == 100 && prod_tally.ok == 100 && identity_ok == identities;
  report(3, pass, "HHXZZ variant A and B attack reproduction",
         "A " + std::to_string(sum_tally.ok) + "/100, B " + std::to_string(prod_tally.ok) + "/100, forger identities " +
             std::to_string(identity_ok) + "/" + std::to_string(identities));
}

void criterion4() {
  const int clean = chh_tally.clean + sum_tally.clean + prod_tally.clean;
  const int runs = chh_tally.runs + sum_tally.runs + prod_tally.runs;
  report(4, clean == runs && runs == 300, "stage 3 needs no channel manipulation",
         std::to_string(clean) + "/" + std::to_string(runs) + " transcripts without stage-3 suppression or injection");
}

void criterion5() {
  int detected = 0, total = 0;
  DetRng pick(5005);
  for (Variant v : kVariants) {
    for (int i = 0; i < 100; ++i) {
      auto c = random_attack(pick, v);
      c.attack.masquerade = false;
      auto r = run_scenario(c);
      detected += r.report.member(c.attack.victim).verdict == "Failed(confirm)";
      ++total;
    }
  }
  report(5, detected == total, "detection without the masquerade",
         std::to_string(detected) + "/" + std::to_string(total) + " victims Failed(confirm)");
}

void criterion6() {
  int as_predicted = 0, missed = 0, reported_failed = 0;
  DetRng pick(6006);
  const std::uint64_t p = kParams.p;
  for (int i = 0; i < 100; ++i) {
    auto c = random_attack(pick, Variant::hhxzz_sum);
    c.attack.literal_variant_a_formula = true;
    auto r = run_scenario(c);
    const std::uint64_t K = r.report.K->as_uint();
    const std::uint64_t K_star = r.report.K_star->as_uint();
    const std::uint64_t victim = key_of(r.report.member(c.attack.victim));
    as_predicted += victim == (2 * K + K_star) % p;
    missed += victim != K_star;
    reported_failed += victim != K_star && r.report.attack_succeeded == false;
  }
  report(6, as_predicted == 100 && missed >= 99 && reported_failed == missed, "literal variant A formula misses K*",
         "victim key = 2K+K* in " + std::to_string(as_predicted) + "/100, differs from K* in " + std::to_string(missed) +
             "/100, reported failed " + std::to_string(reported_failed));
}

void criterion7() {
  const SchemeParams params{1009, 30, 2, 4};
  std::size_t pairs = 0, agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto setup = mrc_setup(params, seed);
    const auto& F = setup.master.F;
    for (std::uint32_t i = 1; i <= params.n; ++i) {
      for (std::uint32_t j = i + 1; j <= params.n; ++j) {
        // Direct double sum of F(x_i, x_j).
        std::uint64_t direct = 0;
        for (std::size_t u = 0; u < F.deg_x_bound(); ++u) {
          for (std::size_t v = 0; v < F.deg_y_bound(); ++v) {
            std::uint64_t term = F.coeff(u, v).value;
            for (std::size_t e = 0; e < u; ++e) term = term * i % params.p;
            for (std::size_t e = 0; e < v; ++e) term = term * j % params.p;
            direct = (direct + term) % params.p;
          }
        }
        auto a = derive_pairwise_key(setup.tokens[i - 1], ParticipantId{j});
        auto b = derive_pairwise_key(setup.tokens[j - 1], ParticipantId{i});
        ++pairs;
        agree += a.k.value == direct && b.k.value == direct;
      }
    }
  }
  report(7, pairs == agree && pairs == 20 * 435, "pairwise key symmetry",
         std::to_string(agree) + "/" + std::to_string(pairs) + " pairs match the master polynomial");
}

void criterion8() {
  DetRng rng(8008);
  const std::uint64_t p = kParams.p;
  int rejected = 0, baseline_ok = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    auto key = crypto::derive_aead_key(rng.field(p), p);
    crypto::Nonce nonce{};
    auto nb = rng.bytes(nonce.size());
    std::copy(nb.begin(), nb.end(), nonce.begin());
    Bytes plain = fe_encode(rng.field(p), p);
    crypto::Digest roster{};
    auto rb = rng.bytes(roster.size());
    std::copy(rb.begin(), rb.end(), roster.begin());
    Bytes ad = contribution_ad(ParticipantId{static_cast<std::uint32_t>(1 + rng.below(12))},
                               ParticipantId{static_cast<std::uint32_t>(1 + rng.below(12))}, roster);
    Bytes ct = crypto::aead_seal(key, nonce, plain, ad);
    baseline_ok += crypto::aead_open(key, nonce, ct, ad) == plain;

    Bytes& target = rng.below(2) == 0 ? ct : ad;
    target[rng.below(target.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    rejected += !crypto::aead_open(key, nonce, ct, ad).has_value();
  }
  report(8, rejected == trials && baseline_ok == trials, "AEAD rejects tampering",
         std::to_string(rejected) + "/" + std::to_string(trials) + " tampered messages rejected, " +
             std::to_string(trials - rejected) + " false accepts");
}

void criterion9(const fs::path& out) {
  auto a = run_demo(7);
  auto b = run_demo(7);
  write_outputs(out / "demo_a", a.report, a.transcript);
  write_outputs(out / "demo_b", b.report, b.transcript);
  bool same = read_file(out / "demo_a" / "report.json") == read_file(out / "demo_b" / "report.json") &&
              read_file(out / "demo_a" / "transcript.jsonl") == read_file(out / "demo_b" / "transcript.jsonl");
  report(9, same && a.exit_code == 0, "demo --seed 7 is byte-identical across executions",
         std::string(same ? "identical" : "different") + " report.json and transcript.jsonl");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "gka_acceptance";
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9(out);
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
