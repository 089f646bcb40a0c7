#include <catch_amalgamated.hpp>

#include "gka/netsim.hpp"

using namespace gka;

namespace {

const ParticipantId U1{1}, U2{2}, U3{3}, U4{4};

std::vector<ParticipantId> ids(std::initializer_list<std::uint32_t> raw) {
  std::vector<ParticipantId> out;
  for (auto r : raw) out.emplace_back(r);
  return out;
}

}  // namespace

TEST_CASE("honest broadcast delivers everything", "[netsim]") {
  Network net(ids({1, 2, 3}));
  net.send_broadcast(U1, Stage::confirm, {0x01});
  net.send_broadcast(U2, Stage::confirm, {0x02});
  net.send_broadcast(U3, Stage::confirm, {0x03});
  auto in = net.schedule_round();
  for (auto id : ids({1, 2, 3})) CHECK(in[id].size() == 2);
  CHECK(net.transcript().count(EventKind::delivered) == 6);
  CHECK(net.transcript().count(EventKind::suppressed) == 0);
  CHECK(net.transcript().well_formed());
  CHECK(net.time() == 1);
}

TEST_CASE("unicast payloads may differ per recipient under a pass policy", "[netsim]") {
  Network net(ids({1, 2, 3}));
  net.send(U1, {U2}, Stage::ke_contribution, {0xaa});
  net.send(U1, {U3}, Stage::ke_contribution, {0xbb});
  auto in = net.schedule_round();
  CHECK(in[U2].at(0).payload == Bytes{0xaa});
  CHECK(in[U3].at(0).payload == Bytes{0xbb});
  CHECK(in[U1].empty());
}

TEST_CASE("suppress_to_victim drops honest traffic addressed to the victim", "[netsim]") {
  ChannelPolicy policy;
  policy.controller = U1;
  policy.victim = U3;
  policy.rules[Stage::confirm] = StageRule{true, false, false};
  Network net(ids({1, 2, 3, 4}), policy);
  for (auto id : ids({1, 2, 4})) net.send_broadcast(id, Stage::confirm, {0x00});
  net.send_broadcast(U3, Stage::confirm, {0x33});
  auto in = net.schedule_round();
  CHECK(in[U3].empty());
  CHECK(net.transcript().count(EventKind::suppressed) == 3);
  CHECK(in[U2].size() == 3);  // victim's own broadcast still flows outward
  CHECK(net.transcript().well_formed());
}

TEST_CASE("redirect_from_victim diverts the victim's traffic to the tap", "[netsim]") {
  ChannelPolicy policy;
  policy.controller = U1;
  policy.victim = U3;
  policy.rules[Stage::confirm] = StageRule{false, true, false};
  Network net(ids({1, 2, 3}), policy);
  net.send_broadcast(U3, Stage::confirm, {0x33});
  auto in = net.schedule_round();
  CHECK(in[U1].empty());
  CHECK(in[U2].empty());
  REQUIRE(net.intercepted().size() == 1);
  CHECK(net.intercepted()[0].payload == Bytes{0x33});
  CHECK(net.transcript().count(EventKind::suppressed) == 2);
}

TEST_CASE("injected envelopes are attributed to the claimed sender", "[netsim]") {
  ChannelPolicy policy;
  policy.controller = U1;
  policy.victim = U3;
  policy.rules[Stage::confirm] = StageRule{true, true, true};
  Network net(ids({1, 2, 3}), policy);
  net.inject(U1, U3, {U1, U2}, Stage::confirm, {0x99});
  auto in = net.schedule_round();
  REQUIRE(in[U2].size() == 1);
  CHECK(in[U2][0].claimed_sender == U3);
  CHECK(in[U2][0].true_sender == U1);
  CHECK(in[U2][0].injected);
  CHECK(net.transcript().count(EventKind::injected) == 1);
  CHECK(net.transcript().well_formed());
}

TEST_CASE("injection is refused without control or permission", "[netsim]") {
  Network honest(ids({1, 2, 3}));
  CHECK_THROWS_AS(honest.inject(U1, U3, {U2}, Stage::confirm, {}), ConfigError);

  ChannelPolicy policy;
  policy.controller = U1;
  policy.victim = U3;
  policy.rules[Stage::confirm] = StageRule{true, true, false};
  Network net(ids({1, 2, 3}), policy);
  CHECK_THROWS_AS(net.inject(U1, U3, {U2}, Stage::confirm, {}), ConfigError);
  CHECK_THROWS_AS(net.inject(U2, U3, {U1}, Stage::confirm, {}), ConfigError);
}

TEST_CASE("policy validation", "[netsim]") {
  ChannelPolicy unknown;
  unknown.controller = ParticipantId{9};
  CHECK_THROWS_AS(Network(ids({1, 2, 3}), unknown), ConfigError);

  ChannelPolicy same;
  same.controller = U1;
  same.victim = U1;
  CHECK_THROWS_AS(Network(ids({1, 2, 3}), same), ConfigError);

  ChannelPolicy half;
  half.controller = U1;
  half.rules[Stage::confirm] = StageRule{true, false, false};
  CHECK_THROWS_AS(Network(ids({1, 2, 3}), half), ConfigError);

  Network net(ids({1, 2}));
  CHECK_THROWS_AS(net.send(U1, {U4}, Stage::confirm, {}), ConfigError);
}

TEST_CASE("transcript is deterministic and conserves envelopes", "[netsim][property]") {
  auto run = [] {
    ChannelPolicy policy;
    policy.controller = U2;
    policy.victim = U4;
    policy.rules[Stage::confirm] = StageRule{true, true, true};
    Network net(ids({1, 2, 3, 4}), policy);
    for (std::uint32_t round = 0; round < 3; ++round) {
      for (auto id : ids({1, 2, 3, 4})) {
        net.send_broadcast(id, round == 2 ? Stage::confirm : Stage::auth_nonce,
                           {static_cast<std::uint8_t>(id.index), static_cast<std::uint8_t>(round)});
      }
      if (round == 2) net.inject(U2, U1, {U4}, Stage::confirm, {0xee});
      net.schedule_round();
    }
    return net.transcript();
  };
  auto a = run();
  auto b = run();
  CHECK(a.to_jsonl() == b.to_jsonl());
  CHECK(a.well_formed());
  // 12 broadcasts * 3 recipients + 1 injected * 1 recipient resolved.
  CHECK(a.count(EventKind::delivered) + a.count(EventKind::suppressed) == 37);
}

TEST_CASE("transcript lines keep a fixed field order", "[netsim]") {
  Network net(ids({1, 2}));
  net.send(U1, {U2}, Stage::ke_opener, {0xab, 0x01});
  net.schedule_round();
  auto lines = net.transcript().to_jsonl();
  CHECK(lines ==
        "{\"t\":0,\"event\":\"sent\",\"seq\":0,\"stage\":\"ke-opener\",\"true_sender\":1,\"claimed_sender\":1,"
        "\"recipients\":[2],\"payload\":\"ab01\"}\n"
        "{\"t\":0,\"event\":\"delivered\",\"seq\":0,\"recipient\":2}\n");
}
