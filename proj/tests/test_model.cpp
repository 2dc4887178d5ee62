#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/enumerate.hpp"
#include "simsolve/model.hpp"
#include "simsolve/solver.hpp"
#include "simsolve/view.hpp"

using namespace simsolve;

namespace {

std::vector<std::array<uint8_t, 2>> actions_of(const Trajectory& t) {
  std::vector<std::array<uint8_t, 2>> out;
  for (const auto& s : t.steps) out.push_back({s.a0, s.a1});
  return out;
}

}  // namespace

TEST_CASE("exhaustive batches cover every terminal history exactly once") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto batch = exhaustive_batch(g);
  int64_t terminals = 0;
  for (const auto& n : g.nodes) terminals += n.terminal ? 1 : 0;
  REQUIRE(static_cast<int64_t>(batch.trajectories.size()) == terminals);
  for (const auto& t : batch.trajectories) {
    REQUIRE_FALSE(t.steps.empty());
    REQUIRE(t.steps.front().pub == root_public_key());
    REQUIRE(t.steps.back().terminal);
    for (size_t i = 0; i + 1 < t.steps.size(); ++i) {
      REQUIRE_FALSE(t.steps[i].terminal);
      REQUIRE(t.steps[i].next_pub == t.steps[i + 1].pub);
    }
  }
}

TEST_CASE("a full-information model reproduces the game exactly") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto map = identity_abstraction(g);
  auto model = fit_model(exhaustive_batch(g), map);

  auto report = model_fidelity_report(model, g, map);
  REQUIRE(report.transition_accuracy == 1.0);
  REQUIRE(report.public_accuracy == 1.0);
  REQUIRE(report.reward_mae == 0.0);
  REQUIRE(report.mask_exactness == 1.0);
  REQUIRE(report.terminal_accuracy == 1.0);
  REQUIRE(report.holes == 0);
  REQUIRE(report.covered > 0);

  // Spot checks straight against the rules at the root.
  const auto& root = g.nodes[0];
  for (int i0 = 0; i0 < root.na[0]; ++i0) {
    for (int i1 = 0; i1 < root.na[1]; ++i1) {
      uint8_t a0 = g.legal0(root)[i0], a1 = g.legal1(root)[i1];
      int32_t c = g.child(root, i0, i1);
      const PublicKey* next = model.find_public_successor(root_public_key(), a0, a1);
      REQUIRE(next != nullptr);
      REQUIRE(*next == g.pub_keys[g.nodes[c].pub]);
      const auto* r = model.find_reward(root_public_key(), 0, 0, a0, a1);
      REQUIRE(r != nullptr);
      REQUIRE(r->mean() == g.nodes[c].step_reward);
      const auto* t = model.find_terminal(root_public_key(), a0, a1);
      REQUIRE(t != nullptr);
      REQUIRE(t->is_terminal() == g.nodes[c].terminal);
    }
  }
  for (int p = 0; p < 2; ++p) {
    const auto* mask = model.find_mask(root_public_key(), p, 0);
    REQUIRE(mask != nullptr);
    REQUIRE(model.mask_actions(*mask) == std::vector<int>{0, 1, 2, 3});
  }
}

TEST_CASE("terminal cells report observed frequencies") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  auto model = fit_model(exhaustive_batch(g), map);
  for (const auto& t : model.terminal) {
    REQUIRE((t.second.frequency() == 0.0 || t.second.frequency() == 1.0));
    REQUIRE(t.second.is_terminal() == (t.second.frequency() == 1.0));
  }
}

TEST_CASE("epsilon one explores uniformly, epsilon zero replays the policy") {
  auto spec = GameSpec::parse("goofspiel:3");

  // A policy that always bids the lowest remaining card.
  auto g = enumerate_public_tree(spec);
  PolicyProfile lowest;
  for (int p = 0; p < 2; ++p)
    for (const auto& info : g.infosets[p]) {
      auto acts = infoset_actions(g, p, info);
      if (acts.empty()) continue;
      std::vector<double> dist(spec.num_actions(), 0.0);
      dist[acts.front()] = 1.0;
      lowest[p].table.emplace(info.key, std::move(dist));
    }

  auto greedy = sample_trajectories(spec, lowest, 0.0, 50, 7);
  for (const auto& t : greedy.trajectories) {
    REQUIRE(t.steps.size() == greedy.trajectories.front().steps.size());
    for (size_t i = 0; i < t.steps.size(); ++i) {
      REQUIRE(t.steps[i].a0 == greedy.trajectories.front().steps[i].a0);
      REQUIRE(t.steps[i].a1 == greedy.trajectories.front().steps[i].a1);
    }
    REQUIRE(t.steps[0].a0 == 0);
  }

  auto explored = sample_trajectories(spec, lowest, 1.0, 400, 7);
  std::set<int> first_bids;
  for (const auto& t : explored.trajectories) first_bids.insert(t.steps[0].a0);
  REQUIRE(first_bids == std::set<int>{0, 1, 2});
}

TEST_CASE("sampling visits every public state of goofspiel 4") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  auto profile = cfr_plus(view, 100).avg;
  auto batch = sample_trajectories(g.spec, profile, 0.5, 100000, 11);
  std::set<PublicKey> seen;
  seen.insert(root_public_key());
  for (const auto& t : batch.trajectories)
    for (const auto& s : t.steps) seen.insert(s.next_pub);
  REQUIRE(seen.size() == g.pub_keys.size());
}

TEST_CASE("sampled batches are deterministic in the seed") {
  auto spec = GameSpec::parse("goofspiel:3");
  PolicyProfile uniform;
  auto a = sample_trajectories(spec, uniform, 0.5, 30, 99);
  auto b = sample_trajectories(spec, uniform, 0.5, 30, 99);
  auto c = sample_trajectories(spec, uniform, 0.5, 30, 100);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  bool all_equal = true, differs_somewhere = false;
  for (size_t i = 0; i < a.trajectories.size(); ++i) {
    auto ai = actions_of(a.trajectories[i]);
    if (ai != actions_of(b.trajectories[i])) all_equal = false;
    if (ai != actions_of(c.trajectories[i])) differs_somewhere = true;
  }
  REQUIRE(all_equal);
  REQUIRE(differs_somewhere);
}

TEST_CASE("merging fitted models equals fitting the concatenated batch") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  PolicyProfile uniform;
  auto batch_a = sample_trajectories(g.spec, uniform, 0.5, 40, 5);
  auto batch_b = sample_trajectories(g.spec, uniform, 0.5, 60, 6);

  auto merged = merge_models(fit_model(batch_a, map), fit_model(batch_b, map));

  SampledBatch joint{g.spec, batch_a.trajectories};
  joint.trajectories.insert(joint.trajectories.end(), batch_b.trajectories.begin(),
                            batch_b.trajectories.end());
  auto direct = fit_model(joint, map);

  REQUIRE(model_to_bytes(merged) == model_to_bytes(direct));
}

TEST_CASE("unrolling the model replays an observed line of play") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  auto batch = exhaustive_batch(g);
  auto model = fit_model(batch, map);

  const auto& traj = batch.trajectories.front();
  auto steps = unroll(model, root_public_key(), 0, 0, actions_of(traj));
  REQUIRE(steps.size() == traj.steps.size() + 1);
  REQUIRE(steps.front().pub == root_public_key());
  REQUIRE_FALSE(steps.front().terminal);
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    REQUIRE(steps[i + 1].pub == traj.steps[i].next_pub);
    REQUIRE(steps[i + 1].reward == traj.steps[i].reward);
    REQUIRE(steps[i + 1].abs0 ==
            map.lookup(0, traj.steps[i].next_isets[0]));
    REQUIRE(steps[i + 1].abs1 ==
            map.lookup(1, traj.steps[i].next_isets[1]));
  }
  REQUIRE(steps.back().terminal);

  auto only_start = unroll(model, root_public_key(), 0, 0, {});
  REQUIRE(only_start.size() == 1);

  // Stepping past the end of the game stops at the terminal entry.
  auto padded = actions_of(traj);
  padded.push_back({0, 0});
  auto stopped = unroll(model, root_public_key(), 0, 0, padded);
  REQUIRE(stopped.size() == traj.steps.size() + 1);
  REQUIRE(stopped.back().terminal);
}

TEST_CASE("holes in the model raise typed errors") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  PolicyProfile lowest_only;  // empty policy, uniform sampling still explores
  auto model = fit_model(sample_trajectories(g.spec, lowest_only, 1.0, 1, 3), map);

  bool caught = false;
  try {
    // One trajectory cannot cover all three opening joint bids.
    for (uint8_t a0 = 0; a0 < 3 && !caught; ++a0)
      for (uint8_t a1 = 0; a1 < 3; ++a1)
        unroll(model, root_public_key(), 0, 0, {{a0, a1}});
  } catch (const ModelHoleError& e) {
    caught = true;
    REQUIRE(e.table() == "public-transition");
    REQUIRE_FALSE(e.key().empty());
  }
  REQUIRE(caught);
}

TEST_CASE("conflicting public transitions are rejected at fit time") {
  auto spec = GameSpec::parse("goofspiel:3");
  AbstractionMap map;
  map.index[0].emplace(root_infoset_key(0), 0);
  map.index[1].emplace(root_infoset_key(1), 0);

  PublicKey root = root_public_key();
  PublicKey next_a = root, next_b = root;
  append_public(next_a, kObsP0Wins);
  append_public(next_b, kObsP1Wins);

  TrajectoryStep step;
  step.pub = root;
  step.isets = {root_infoset_key(0), root_infoset_key(1)};
  step.a0 = 2;
  step.a1 = 1;
  step.reward = 3.0;
  step.terminal = true;
  step.next_pub = next_a;
  step.next_isets = {root_infoset_key(0), root_infoset_key(1)};

  TrajectoryStep conflict = step;
  conflict.next_pub = next_b;

  SampledBatch batch{spec, {Trajectory{{step}}, Trajectory{{conflict}}}};
  REQUIRE_THROWS_AS(fit_model(batch, map), std::runtime_error);
}

TEST_CASE("model fidelity improves with more data") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  auto map = identity_abstraction(g);
  auto profile = cfr_plus(view, 4000).avg;

  FidelityReport prev;
  prev.reward_mae = 1e9;
  prev.holes = std::numeric_limits<int64_t>::max();
  for (int64_t n : {1000, 10000, 100000}) {
    auto batch = sample_trajectories(g.spec, profile, 0.5, static_cast<int>(n),
                                     derive_seed(7, "batch"));
    auto report = model_fidelity_report(fit_model(batch, map), g, map);
    INFO("trajectories " << n << ": " << report.summary());
    REQUIRE(report.transition_accuracy >= prev.transition_accuracy);
    REQUIRE(report.public_accuracy >= prev.public_accuracy);
    REQUIRE(report.terminal_accuracy >= prev.terminal_accuracy);
    REQUIRE(report.mask_exactness >= prev.mask_exactness);
    REQUIRE(report.reward_mae <= prev.reward_mae);
    REQUIRE(report.holes <= prev.holes);
    prev = report;
  }
  REQUIRE(prev.mask_exactness == 1.0);
  REQUIRE(prev.holes == 0);
}

TEST_CASE("models serialize to bytes and back without loss") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  PolicyProfile uniform;
  auto model = fit_model(sample_trajectories(g.spec, uniform, 0.5, 200, 13), map);

  auto bytes = model_to_bytes(model);
  auto back = model_from_bytes(bytes);
  REQUIRE(model_to_bytes(back) == bytes);
  REQUIRE(back.spec.name() == g.spec.name());

  // The public reward marginal is rebuilt on load, not stored.
  REQUIRE(back.public_reward.size() == model.public_reward.size());
  for (const auto& [key, cell] : model.public_reward) {
    auto it = back.public_reward.find(key);
    REQUIRE(it != back.public_reward.end());
    REQUIRE(it->second.sum == cell.sum);
    REQUIRE(it->second.count == cell.count);
  }

  REQUIRE_THROWS(model_from_bytes("XXXX"));
  REQUIRE_THROWS(model_from_bytes(bytes.substr(0, bytes.size() / 2)));
}

TEST_CASE("the two stage lookup agrees with the grounded tables") {
  // Public transitions are the marginal of infoset transitions: unrolling
  // with identity indices must land on the infosets of the public successor.
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto map = identity_abstraction(g);
  auto model = fit_model(exhaustive_batch(g), map);

  for (const auto& n : g.nodes) {
    if (n.terminal) continue;
    const auto& pub = g.pub_keys[n.pub];
    int abs0 = map.lookup(0, g.infosets[0][n.iset[0]].key);
    int abs1 = map.lookup(1, g.infosets[1][n.iset[1]].key);
    for (int i0 = 0; i0 < n.na[0]; ++i0)
      for (int i1 = 0; i1 < n.na[1]; ++i1) {
        uint8_t a0 = g.legal0(n)[i0], a1 = g.legal1(n)[i1];
        int32_t c = g.child(n, i0, i1);
        int nabs0 = -1, nabs1 = -1;
        REQUIRE(model.find_successor_pair(pub, abs0, abs1, a0, a1, &nabs0, &nabs1));
        REQUIRE(nabs0 == map.lookup(0, g.infosets[0][g.nodes[c].iset[0]].key));
        REQUIRE(nabs1 == map.lookup(1, g.infosets[1][g.nodes[c].iset[1]].key));
        const PublicKey* np = model.find_public_successor(pub, a0, a1);
        REQUIRE(np != nullptr);
        REQUIRE(*np == g.pub_keys[g.nodes[c].pub]);
      }
  }
}
