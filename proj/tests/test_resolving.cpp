#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "simsolve/bundle.hpp"
#include "simsolve/enumerate.hpp"
#include "simsolve/resolving.hpp"

using namespace simsolve;

namespace {

struct ResolveFixture {
  EnumeratedGame g;
  TreeView view;
  Bundle bundle;

  explicit ResolveFixture(int blueprint_iters = 1000, int T = 2)
      : g(enumerate_public_tree(GameSpec::parse("goofspiel:3"))),
        view(build_real_view(g)) {
    BundleBuildConfig bc;
    bc.identity = true;
    bc.blueprint_iterations = blueprint_iters;
    bc.T = T;
    bc.trajectories = 0;
    bundle = build_bundle(g, view, bc);
  }
};

const ResolveFixture& fixture() {
  static ResolveFixture f;
  return f;
}

}  // namespace

TEST_CASE("public step rewards marginalize the transition correctly") {
  const auto& f = fixture();
  PublicKey root = root_public_key();

  PublicKey p0wins = root;
  append_public(p0wins, kObsP0Wins);
  REQUIRE(detail::public_step_reward(f.bundle.model, root, p0wins) ==
          Catch::Approx(3.0).margin(1e-12));

  PublicKey p1wins = root;
  append_public(p1wins, kObsP1Wins);
  REQUIRE(detail::public_step_reward(f.bundle.model, root, p1wins) ==
          Catch::Approx(-3.0).margin(1e-12));

  PublicKey draw = root;
  append_public(draw, static_cast<uint8_t>(kObsDrawBit | 2));
  REQUIRE(detail::public_step_reward(f.bundle.model, root, draw) ==
          Catch::Approx(0.0).margin(1e-12));

  PublicKey unseen = root;
  append_public(unseen, 0x7f);
  REQUIRE(detail::public_step_reward(f.bundle.model, root, unseen) == 0.0);
}

TEST_CASE("the gadget pays the opponent its promise on terminate") {
  const auto& f = fixture();

  for (int resolver = 0; resolver < 2; ++resolver) {
    GadgetSpec gs;
    gs.pub = root_public_key();
    gs.resolver = resolver;
    gs.own_reach = {1.0};
    gs.opp_reach = {1.0};
    gs.opp_cfv = {0.7};
    gs.depth = 1;
    gs.model = &f.bundle.model;
    gs.values = &f.bundle.values;
    auto dl = build_gadget(gs);

    int opp = 1 - resolver;
    const auto& v = dl.view;
    const auto& root = v.nodes[v.root];
    REQUIRE(root.kind == TreeView::kWeighted);
    REQUIRE(v.weights[root.child_begin] == Catch::Approx(1.0));

    const auto& tf = v.nodes[v.children[root.child_begin]];
    REQUIRE(tf.kind == TreeView::kDecision);
    REQUIRE(tf.na[opp] == 2);
    REQUIRE(tf.na[resolver] == 1);
    REQUIRE(v.infosets[opp][tf.iset[opp]].key ==
            gadget_iset_key(opp, root_public_key(), 0));

    int32_t term = opp == 0 ? v.child(tf, 0, 0) : v.child(tf, 0, 0);
    const auto& leaf = v.nodes[term];
    REQUIRE(leaf.kind == TreeView::kTerminal);
    double expected = opp == 0 ? 0.7 : -0.7;
    REQUIRE(leaf.util == expected);

    int32_t follow = opp == 0 ? v.child(tf, 1, 0) : v.child(tf, 0, 1);
    REQUIRE(v.nodes[follow].kind == TreeView::kWeighted);
  }
}

TEST_CASE("the opponent takes a generous promise and refuses a hopeless one") {
  const auto& f = fixture();
  auto gadget_with_promise = [&](double promise) {
    GadgetSpec gs;
    gs.pub = root_public_key();
    gs.resolver = 0;
    gs.own_reach = {1.0};
    gs.opp_reach = {1.0};
    gs.opp_cfv = {promise};
    gs.depth = 1;
    gs.model = &f.bundle.model;
    gs.values = &f.bundle.values;
    return solve_subgame(build_gadget(gs), 2000);
  };

  auto key = gadget_iset_key(1, root_public_key(), 0);

  auto generous = gadget_with_promise(10.0);
  const auto& gdist = generous.avg[1].table.at(key);
  REQUIRE(gdist[0] >= 0.999);
  REQUIRE(generous.root_value == Catch::Approx(-10.0).margin(1e-3));

  auto hopeless = gadget_with_promise(-10.0);
  const auto& hdist = hopeless.avg[1].table.at(key);
  REQUIRE(hdist[1] >= 0.999);
  REQUIRE(hopeless.root_value >= -1.0);
}

TEST_CASE("promises are normalized values net of the public step reward") {
  PublicKey next = root_public_key();
  append_public(next, kObsP0Wins);

  CfValues cf;
  cf.table[1][abstract_iset_key(1, next, 0)] = {2.0, 0.5};
  cf.table[1][abstract_iset_key(1, next, 2)] = {1.0, 0.0};

  std::vector<char> known;
  int64_t missing = 0;
  auto out = detail::opp_promises(cf, 1, next, 0.25, {0.4, 0.3, 0.2}, &known, &missing);
  REQUIRE(out.size() == 3);
  REQUIRE(out[0] == Catch::Approx(2.0 / 0.5 + 0.25).margin(1e-12));
  REQUIRE(known == std::vector<char>{1, 0, 0});
  REQUIRE(missing == 2);

  missing = 0;
  CfValues cf0;
  cf0.table[0][abstract_iset_key(0, next, 0)] = {2.0, 0.5};
  auto out0 = detail::opp_promises(cf0, 0, next, 0.25, {1.0}, &known, &missing);
  REQUIRE(out0[0] == Catch::Approx(2.0 / 0.5 - 0.25).margin(1e-12));
  REQUIRE(missing == 0);
}

TEST_CASE("unknown promises are priced from the value table") {
  PublicKey pub = root_public_key();
  ValueTable table;
  table.T = 1;
  table.entries.emplace(detail::val_key(pub, 0, 0), std::vector<double>{0.7});
  table.rebuild_means();

  std::vector<double> promises = {0.0};
  detail::fill_missing_promises(table, pub, 1, {1.0}, {0}, &promises);
  REQUIRE(promises[0] == Catch::Approx(-0.7).margin(1e-12));

  promises = {0.0};
  detail::fill_missing_promises(table, pub, 0, {1.0}, {0}, &promises);
  REQUIRE(promises[0] == Catch::Approx(0.7).margin(1e-12));

  promises = {123.0};
  detail::fill_missing_promises(table, pub, 1, {1.0}, {1}, &promises);
  REQUIRE(promises[0] == 123.0);

  promises = {123.0};
  detail::fill_missing_promises(table, pub, 1, {0.0}, {0}, &promises);
  REQUIRE(promises[0] == 123.0);
}

TEST_CASE("the resolver tracks its own realized reach exactly") {
  const auto& f = fixture();
  ResolveConfig rc;
  ResolverAgent agent(f.bundle, rc);
  agent.start_episode(0, 99);
  REQUIRE_FALSE(agent.in_fallback());

  auto st = new_game(f.g.spec);
  InfosetKey iset0 = root_infoset_key(0);
  int steps = 0;
  while (!st.terminal) {
    auto l0 = st.legal_actions(0);
    auto l1 = st.legal_actions(1);
    int a0 = agent.act(iset0, l0);
    int a1 = l1.front();
    auto out = st.apply(a0, a1);
    if (out.terminal) break;
    agent.observe(out.pub_obs, static_cast<uint8_t>(a0));
    append_infoset(iset0, static_cast<uint8_t>(a0), out.pub_obs);
    int id = f.bundle.abstraction.lookup(0, iset0);
    INFO("after step " << steps + 1);
    REQUIRE(agent.own_reach()[static_cast<size_t>(id)] ==
            Catch::Approx(agent.realized_reach()).margin(1e-12));
    REQUIRE(agent.realized_reach() > 0.0);
    ++steps;
  }
  REQUIRE(steps == 2);
  REQUIRE_FALSE(agent.in_fallback());
  REQUIRE(agent.reach_repairs() == 0);
  REQUIRE(agent.missing_promises() == 0);
}

TEST_CASE("fresh resolvers with one seed replay the same actions") {
  const auto& f = fixture();
  ResolveConfig rc;
  std::vector<int> seen[2];
  for (int trial = 0; trial < 2; ++trial) {
    ResolverAgent agent(f.bundle, rc);
    agent.start_episode(1, 123);
    auto st = new_game(f.g.spec);
    InfosetKey iset1 = root_infoset_key(1);
    while (!st.terminal) {
      auto l0 = st.legal_actions(0);
      auto l1 = st.legal_actions(1);
      int b1 = agent.act(iset1, l1);
      int b0 = l0.back();
      auto out = st.apply(b0, b1);
      seen[trial].push_back(b1);
      if (out.terminal) break;
      agent.observe(out.pub_obs, static_cast<uint8_t>(b1));
      append_infoset(iset1, static_cast<uint8_t>(b1), out.pub_obs);
    }
  }
  REQUIRE(seen[0] == seen[1]);
  REQUIRE(seen[0].size() == 3);
}

TEST_CASE("a shared cache absorbs repeated resolves") {
  const auto& f = fixture();
  ResolveConfig rc;
  auto cache = std::make_shared<SolveCache>();

  auto drive = [&](ResolverAgent& agent) {
    agent.start_episode(0, 7);
    auto st = new_game(f.g.spec);
    InfosetKey iset0 = root_infoset_key(0);
    while (!st.terminal) {
      auto l0 = st.legal_actions(0);
      auto l1 = st.legal_actions(1);
      int a0 = agent.act(iset0, l0);
      auto out = st.apply(a0, l1.front());
      if (out.terminal) break;
      agent.observe(out.pub_obs, static_cast<uint8_t>(a0));
      append_infoset(iset0, static_cast<uint8_t>(a0), out.pub_obs);
    }
  };

  ResolverAgent agent(f.bundle, rc, cache);
  drive(agent);
  int64_t first_hits = cache->hits();
  int64_t first_misses = cache->misses();
  REQUIRE(first_misses >= 3);

  drive(agent);
  REQUIRE(cache->misses() == first_misses);
  REQUIRE(cache->hits() == first_hits + first_misses);
}

TEST_CASE("whole tree resolving stays near the equilibrium") {
  const auto& f = fixture();
  ResolveConfig rc;
  auto pe = resolve_all(f.g, f.view, f.bundle, rc);

  REQUIRE(pe.exploitability ==
          Catch::Approx(4.3348350328561424e-06).margin(1e-9));
  REQUIRE(pe.solves == 55);
  REQUIRE(pe.fallback_public_states == 0);
  REQUIRE(pe.unreachable_public_states == 0);
  REQUIRE(pe.missing_promises == 0);

  PolicyProfile uniform{uniform_policy(f.g, 0), uniform_policy(f.g, 1)};
  REQUIRE(pe.exploitability <= exploitability(f.view, uniform));
}

TEST_CASE("the resolver beats uniform play and draws against itself") {
  const auto& f = fixture();
  ResolveConfig rc;

  {
    auto cache = std::make_shared<SolveCache>();
    ResolverAgent a(f.bundle, rc, cache);
    UniformAgent u;
    auto r = play_match(f.g.spec, a, u, 300, 55);
    REQUIRE(r.a_win_rate - r.two_sigma > 0.5);
    REQUIRE(r.a_fallback_episodes == 0);
  }

  {
    auto cache = std::make_shared<SolveCache>();
    ResolverAgent a(f.bundle, rc, cache);
    ResolverAgent b(f.bundle, rc, cache);
    auto r = play_match(f.g.spec, a, b, 200, 31);
    REQUIRE(std::fabs(r.a_win_rate - 0.5) <= std::max(r.two_sigma, 0.08));
  }
}

TEST_CASE("the blueprint itself beats uniform play") {
  const auto& f = fixture();
  BlueprintAgent a(f.bundle.blueprint, f.g.spec.num_actions());
  UniformAgent u;
  auto r = play_match(f.g.spec, a, u, 300, 77);
  REQUIRE(r.a_win_rate - r.two_sigma > 0.5);
}

TEST_CASE("blueprint agents sample their distribution") {
  Policy p;
  p.table.emplace(root_infoset_key(0),
                  std::vector<double>{1.0 / 3.0, 2.0 / 3.0});
  PolicyProfile prof{p, p};
  BlueprintAgent agent(prof, 2);
  agent.start_episode(0, 2024);

  const int n = 10000;
  int ones = 0;
  std::vector<int> legal = {0, 1};
  for (int i = 0; i < n; ++i)
    if (agent.act(root_infoset_key(0), legal) == 1) ++ones;
  double p1 = 2.0 / 3.0;
  double sigma = std::sqrt(p1 * (1.0 - p1) / n);
  REQUIRE(std::fabs(static_cast<double>(ones) / n - p1) <= 3.0 * sigma);
}

TEST_CASE("match accounting adds up") {
  auto spec = GameSpec::parse("goofspiel:3");
  UniformAgent a, b;
  auto r = play_match(spec, a, b, 50, 11);
  REQUIRE(r.episodes == 50);
  REQUIRE(r.a_wins + r.a_losses + r.draws == 50);
  REQUIRE(r.a_win_rate ==
          Catch::Approx((r.a_wins + 0.5 * r.draws) / 50.0).margin(1e-12));
  REQUIRE(r.rows.size() == 50);
  double sum = 0.0;
  for (const auto& row : r.rows) {
    REQUIRE(row.a_seat == row.episode % 2);
    sum += row.a_reward;
  }
  REQUIRE(r.a_mean_reward == Catch::Approx(sum / 50.0).margin(1e-12));

  UniformAgent c, d;
  auto r2 = play_match(spec, c, d, 10, 11, false);
  REQUIRE(r2.rows.empty());

  REQUIRE_THROWS_AS(play_match(spec, a, b, 0, 1), std::runtime_error);
}

TEST_CASE("bundles survive the byte round trip and reject corruption") {
  const auto& f = fixture();
  auto bytes = bundle_to_bytes(f.bundle);
  REQUIRE(bytes.compare(0, 4, "SSB1") == 0);

  GameSpec spec;
  size_t payload = 0;
  auto infos = bundle_manifest(bytes, &spec, &payload);
  REQUIRE(infos.size() == 5);
  REQUIRE(spec.name() == "goofspiel:3");
  uint64_t total = 0;
  for (const auto& info : infos) total += info.size;
  REQUIRE(payload + total == bytes.size());

  auto back = bundle_from_bytes(bytes);
  REQUIRE(bundle_to_bytes(back) == bytes);

  auto corrupted = bytes;
  corrupted[payload + 3] = static_cast<char>(corrupted[payload + 3] ^ 0x40);
  REQUIRE_THROWS_AS(bundle_from_bytes(corrupted), std::runtime_error);

  auto truncated = bytes.substr(0, bytes.size() - 5);
  REQUIRE_THROWS_AS(bundle_from_bytes(truncated), std::runtime_error);

  REQUIRE_THROWS_AS(bundle_from_bytes("not a bundle"), std::runtime_error);

  std::string path = "/tmp/simsolve_test_bundle.bin";
  save_bundle(path, f.bundle);
  auto loaded = load_bundle(path);
  REQUIRE(bundle_to_bytes(loaded) == bytes);
}

TEST_CASE("gadgets with a dead opponent estimate fall back to uniform weights") {
  const auto& f = fixture();
  GadgetSpec gs;
  gs.pub = root_public_key();
  gs.resolver = 0;
  gs.own_reach = {1.0};
  gs.opp_reach = {0.0};
  gs.opp_cfv = {0.0};
  gs.depth = 1;
  gs.model = &f.bundle.model;
  gs.values = &f.bundle.values;
  auto dl = build_gadget(gs);
  const auto& root = dl.view.nodes[dl.view.root];
  REQUIRE(root.kind == TreeView::kWeighted);
  REQUIRE(dl.view.weights[root.child_begin] == Catch::Approx(1.0));
  solve_subgame(dl, 50);
}

TEST_CASE("gadget construction validates its inputs") {
  const auto& f = fixture();
  GadgetSpec gs;
  gs.pub = root_public_key();
  gs.resolver = 0;
  gs.own_reach = {1.0};
  gs.opp_reach = {1.0};
  gs.depth = 1;
  gs.model = &f.bundle.model;
  gs.values = &f.bundle.values;

  auto bad = gs;
  bad.resolver = 2;
  REQUIRE_THROWS_AS(build_gadget(bad), std::runtime_error);

  bad = gs;
  bad.own_reach = {0.0};
  REQUIRE_THROWS_AS(build_gadget(bad), std::runtime_error);

  bad = gs;
  bad.opp_cfv = {1.0, 2.0};
  REQUIRE_THROWS_AS(build_gadget(bad), std::runtime_error);

  bad = gs;
  bad.opp_mix = 1.5;
  REQUIRE_THROWS_AS(build_gadget(bad), std::runtime_error);

  bad = gs;
  bad.depth = 0;
  REQUIRE_THROWS_AS(build_gadget(bad), std::runtime_error);
}
