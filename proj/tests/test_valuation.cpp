#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/enumerate.hpp"
#include "simsolve/policy.hpp"
#include "simsolve/solver.hpp"
#include "simsolve/valuation.hpp"
#include "simsolve/view.hpp"

using namespace simsolve;

namespace {

bool policies_equal(const Policy& a, const Policy& b) {
  if (a.table.size() != b.table.size()) return false;
  for (const auto& [key, dist] : a.table) {
    auto it = b.table.find(key);
    if (it == b.table.end() || it->second != dist) return false;
  }
  return true;
}

// Monte-Carlo estimate (mean, standard error) of the player-0 value when
// player 0 plays row policy i and player 1 plays column policy j.
std::pair<double, double> mc_pair_value(const GameSpec& spec, const Policy& p0,
                                        const Policy& p1, int64_t episodes,
                                        uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double sum = 0.0, sumsq = 0.0;
  const std::array<const Policy*, 2> pol = {&p0, &p1};
  for (int64_t e = 0; e < episodes; ++e) {
    auto s = new_game(spec);
    std::array<InfosetKey, 2> keys = {root_infoset_key(0), root_infoset_key(1)};
    double total = 0.0;
    while (!s.terminal) {
      int chosen[2];
      for (int p = 0; p < 2; ++p) {
        auto legal = s.legal_actions(p);
        auto dist = policy_on_legal(*pol[p], keys[p], legal, spec.num_actions());
        double u = unit(rng), acc = 0.0;
        chosen[p] = legal.back();
        for (int a : legal) {
          acc += dist[a];
          if (u <= acc) {
            chosen[p] = a;
            break;
          }
        }
      }
      auto out = s.apply(chosen[0], chosen[1]);
      total += out.reward;
      for (int p = 0; p < 2; ++p)
        append_infoset(keys[p], out.priv_obs[p], out.pub_obs);
    }
    sum += total;
    sumsq += total * total;
  }
  double mean = sum / episodes;
  double var = std::max(0.0, sumsq / episodes - mean * mean);
  return {mean, std::sqrt(var / episodes)};
}

}  // namespace

TEST_CASE("a one iteration blueprint is uniform play") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto view = build_real_view(g);
  auto bp = build_blueprint(view, 1);
  for (int p = 0; p < 2; ++p) {
    for (const auto& info : view.infosets[p]) {
      const auto& dist = bp[p].table.at(info.key);
      for (int a : info.actions)
        REQUIRE(dist[a] == Catch::Approx(1.0 / info.actions.size()).margin(1e-12));
    }
  }

  // The spec-level overload builds the same blueprint.
  auto bp2 = build_blueprint(GameSpec::parse("goofspiel:3"), 1);
  for (int p = 0; p < 2; ++p) REQUIRE(policies_equal(bp[p], bp2[p]));
}

TEST_CASE("longer blueprints are less exploitable") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  double e1000 = exploitability(view, build_blueprint(view, 1000));
  double e4000 = exploitability(view, build_blueprint(view, 4000));
  REQUIRE(e4000 <= e1000);
}

TEST_CASE("portfolios start with the blueprint and diversify") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  auto blueprint = build_blueprint(view, 4000);

  auto p1 = build_portfolio(g, view, 1, 4000);
  REQUIRE(p1.T == 1);
  for (int p = 0; p < 2; ++p) {
    REQUIRE(p1.policies[p].size() == 1);
    REQUIRE(policies_equal(p1.policies[p][0], blueprint[p]));
  }

  auto p2 = build_portfolio(g, view, 2, 4000);
  for (int p = 0; p < 2; ++p) {
    REQUIRE(p2.policies[p].size() == 2);
    REQUIRE(policies_equal(p2.policies[p][0], blueprint[p]));
    REQUIRE(policies_equal(p2.policies[p][1], uniform_policy(g, p)));
  }

  auto p4 = build_portfolio(g, view, 4, 4000);
  for (int p = 0; p < 2; ++p) {
    REQUIRE(p4.policies[p].size() == 4);
    REQUIRE(policies_equal(p4.policies[p][0], blueprint[p]));
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        INFO("player " << p << " members " << i << " and " << j);
        REQUIRE_FALSE(policies_equal(p4.policies[p][i], p4.policies[p][j]));
      }
  }
}

TEST_CASE("one step subtrees store their forced payoff in every cell") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto view = build_real_view(g);
  auto map = identity_abstraction(g);
  auto portfolio = build_portfolio(g, view, 2, 200);
  auto table = compute_value_table(g, map, portfolio);

  int checked = 0;
  for (const auto& n : g.nodes) {
    if (n.terminal || n.depth != 2) continue;
    REQUIRE(n.na[0] == 1);
    REQUIRE(n.na[1] == 1);
    double payoff = g.nodes[g.child(n, 0, 0)].step_reward;
    int abs0 = map.lookup(0, g.infosets[0][n.iset[0]].key);
    int abs1 = map.lookup(1, g.infosets[1][n.iset[1]].key);
    auto lk = value_lookup(table, g.pub_keys[n.pub], abs0, abs1);
    REQUIRE(lk.source == ValueSource::kStored);
    REQUIRE(lk.matrix.size() == 4);
    for (double v : lk.matrix)
      REQUIRE(v == Catch::Approx(payoff).margin(1e-12));
    ++checked;
  }
  REQUIRE(checked > 0);
}

TEST_CASE("an exact equilibrium portfolio values the root at zero") {
  auto g = enumerate_public_tree(GameSpec::parse("oshizumo:1,1"));
  auto map = identity_abstraction(g);

  StrategyPortfolio pf;
  pf.T = 1;
  for (int p = 0; p < 2; ++p) {
    Policy ne;
    ne.table.emplace(root_infoset_key(p), std::vector<double>{0.0, 1.0});
    pf.policies[p].push_back(std::move(ne));
  }
  auto table = compute_value_table(g, map, pf);
  auto lk = value_lookup(table, root_public_key(), 0, 0);
  REQUIRE(lk.source == ValueSource::kStored);
  REQUIRE(lk.matrix == std::vector<double>{0.0});

  // A near-equilibrium blueprint leaves the symmetric root close to zero.
  auto g4 = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view4 = build_real_view(g4);
  auto map4 = identity_abstraction(g4);
  auto pf4 = build_portfolio(g4, view4, 1, 4000);
  auto table4 = compute_value_table(g4, map4, pf4);
  int r0 = map4.lookup(0, root_infoset_key(0));
  int r1 = map4.lookup(1, root_infoset_key(1));
  auto root4 = value_lookup(table4, root_public_key(), r0, r1);
  REQUIRE(root4.source == ValueSource::kStored);
  REQUIRE(std::fabs(root4.matrix[0]) <= 1e-4);
}

TEST_CASE("root entries match Monte-Carlo playouts of the portfolio pairs") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  auto map = identity_abstraction(g);
  auto pf = build_portfolio(g, view, 2, 1000);
  auto table = compute_value_table(g, map, pf);

  int r0 = map.lookup(0, root_infoset_key(0));
  int r1 = map.lookup(1, root_infoset_key(1));
  auto lk = value_lookup(table, root_public_key(), r0, r1);
  REQUIRE(lk.source == ValueSource::kStored);

  struct Cell {
    int i, j;
    uint64_t seed;
  };
  for (const auto& cell : {Cell{0, 1, 501}, Cell{1, 1, 502}, Cell{0, 0, 503}}) {
    auto [mean, se] = mc_pair_value(g.spec, pf.policies[0][cell.i],
                                    pf.policies[1][cell.j], 200000, cell.seed);
    double stored = lk.matrix[cell.i * 2 + cell.j];
    INFO("pair (" << cell.i << "," << cell.j << ") stored " << stored
                  << " mc " << mean << " se " << se);
    REQUIRE(std::fabs(stored - mean) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("lookups fall back from stored to public mean to zero") {
  ValueTable table;
  table.T = 2;
  PublicKey pub = root_public_key();
  table.entries.emplace(detail::val_key(pub, 0, 0),
                        std::vector<double>{1, 2, 3, 4});
  table.entries.emplace(detail::val_key(pub, 1, 1),
                        std::vector<double>{5, 6, 7, 8});
  table.rebuild_means();

  auto stored = value_lookup(table, pub, 0, 0);
  REQUIRE(stored.source == ValueSource::kStored);
  REQUIRE(stored.matrix == std::vector<double>{1, 2, 3, 4});

  auto mean = value_lookup(table, pub, 0, 1);
  REQUIRE(mean.source == ValueSource::kPublicMean);
  REQUIRE(mean.matrix == std::vector<double>{3, 4, 5, 6});

  PublicKey other = pub;
  append_public(other, kObsP0Wins);
  auto zero = value_lookup(table, other, 0, 0);
  REQUIRE(zero.source == ValueSource::kZeroFallback);
  REQUIRE(zero.matrix == std::vector<double>(4, 0.0));
}

TEST_CASE("value entries stay inside the payoff range") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:4"));
  auto view = build_real_view(g);
  auto map = identity_abstraction(g);
  auto table = compute_value_table(g, map, build_portfolio(g, view, 2, 300));
  REQUIRE_FALSE(table.entries.empty());
  for (const auto& [key, mat] : table.entries)
    for (double v : mat) {
      REQUIRE(v <= 10.0);
      REQUIRE(v >= -10.0);
    }
}

TEST_CASE("value tables are deterministic and serialize without loss") {
  auto g = enumerate_public_tree(GameSpec::parse("goofspiel:3"));
  auto view = build_real_view(g);
  auto map = identity_abstraction(g);
  auto pf = build_portfolio(g, view, 2, 100);
  auto a = compute_value_table(g, map, pf);
  auto b = compute_value_table(g, map, pf);
  REQUIRE(value_table_to_bytes(a) == value_table_to_bytes(b));

  auto bytes = value_table_to_bytes(a);
  auto back = value_table_from_bytes(bytes);
  REQUIRE(back.T == a.T);
  REQUIRE(value_table_to_bytes(back) == bytes);

  // Means are rebuilt on load.
  REQUIRE(back.pub_mean.size() == a.pub_mean.size());
  for (const auto& [pub, mean] : a.pub_mean) {
    auto it = back.pub_mean.find(pub);
    REQUIRE(it != back.pub_mean.end());
    REQUIRE(it->second == mean);
  }
  REQUIRE_THROWS(value_table_from_bytes("bogus"));
}
