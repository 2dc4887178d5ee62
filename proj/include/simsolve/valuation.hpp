#ifndef SIMSOLVE_VALUATION_HPP
#define SIMSOLVE_VALUATION_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/model.hpp"
#include "simsolve/solver.hpp"

namespace simsolve {

// CFR+ average profile over the real game.
inline PolicyProfile build_blueprint(const TreeView& view, int iterations) {
  CfrRun run(view);
  run.run(iterations);
  return run.average();
}

inline PolicyProfile build_blueprint(const GameSpec& spec, int iterations) {
  auto g = enumerate_public_tree(spec);
  auto view = build_real_view(g);
  return build_blueprint(view, iterations);
}

// Explicit uniform policy over every enumerated infoset with actions.
inline Policy uniform_policy(const EnumeratedGame& g, int player) {
  Policy p;
  int a = g.spec.num_actions();
  for (const auto& info : g.infosets[player]) {
    auto actions = infoset_actions(g, player, info);
    if (!actions.empty()) p.table.emplace(info.key, uniform_over(actions, a));
  }
  return p;
}

// T strategy variants per player: the blueprint, the uniform policy, then
// average-policy snapshots of the same CFR+ run at geometrically earlier
// iteration counts (iterations/10, /100, ..., floored at 1).
struct StrategyPortfolio {
  int T = 1;
  std::array<std::vector<Policy>, 2> policies;  // [player][t], index 0 = blueprint
};

inline StrategyPortfolio build_portfolio(const EnumeratedGame& g, const TreeView& view,
                                         int T, int blueprint_iterations) {
  SS_CHECK(T >= 1, "build_portfolio: T must be at least 1");
  SS_CHECK(blueprint_iterations >= 1, "build_portfolio: need at least one iteration");
  std::vector<int> checkpoints;  // ascending execution order
  for (int k = T - 2; k >= 1; --k) {
    int64_t it = blueprint_iterations;
    for (int d = 0; d < k; ++d) it /= 10;
    checkpoints.push_back(static_cast<int>(std::max<int64_t>(1, it)));
  }

  CfrRun run(view);
  std::vector<PolicyProfile> snaps;
  for (int target : checkpoints) {
    run.run(std::max(0, target - run.completed()));
    snaps.push_back(run.average());
  }
  run.run(blueprint_iterations - run.completed());
  PolicyProfile blueprint = run.average();

  StrategyPortfolio pf;
  pf.T = T;
  for (int p = 0; p < 2; ++p) {
    pf.policies[p].push_back(blueprint[p]);
    if (T >= 2) pf.policies[p].push_back(uniform_policy(g, p));
    // Later snapshots (more iterations) enter first.
    for (auto it = snaps.rbegin();
         it != snaps.rend() && static_cast<int>(pf.policies[p].size()) < T; ++it)
      pf.policies[p].push_back((*it)[p]);
    while (static_cast<int>(pf.policies[p].size()) < T)
      pf.policies[p].push_back(blueprint[p]);
  }
  return pf;
}

// ---------------------------------------------------------------------------
// Value table over (public state, abstract infoset pair) x portfolio pairs

namespace detail {

inline std::string val_key(const PublicKey& pub, int abs0, int abs1) {
  SS_CHECK(abs0 >= 0 && abs0 < 65536 && abs1 >= 0 && abs1 < 65536,
           "abstract index out of range");
  std::string k = pub;
  k.push_back(static_cast<char>(abs0 >> 8));
  k.push_back(static_cast<char>(abs0 & 0xff));
  k.push_back(static_cast<char>(abs1 >> 8));
  k.push_back(static_cast<char>(abs1 & 0xff));
  return k;
}

}  // namespace detail

enum class ValueSource { kStored, kPublicMean, kZeroFallback };

struct ValueTable {
  int T = 1;
  // row-major T x T player-0 continuation values
  std::unordered_map<std::string, std::vector<double>> entries;
  // element-wise mean of all entries at one public state, for fallback
  std::unordered_map<PublicKey, std::vector<double>> pub_mean;

  void rebuild_means() {
    pub_mean.clear();
    std::unordered_map<PublicKey, int> counts;
    for (const auto& [key, mat] : entries) {
      PublicKey pub = key.substr(0, key.size() - 4);
      auto& mean = pub_mean[pub];
      if (mean.empty()) mean.assign(mat.size(), 0.0);
      for (size_t i = 0; i < mat.size(); ++i) mean[i] += mat[i];
      counts[pub] += 1;
    }
    for (auto& [pub, mean] : pub_mean)
      for (double& v : mean) v /= counts[pub];
  }
};

struct ValueLookup {
  std::vector<double> matrix;
  ValueSource source = ValueSource::kStored;
};

// Stored matrix, else the mean of the matrices stored at that public state,
// else zeros. Callers treat the zero fallback as a loggable event.
inline ValueLookup value_lookup(const ValueTable& table, const PublicKey& pub, int abs0,
                                int abs1) {
  auto it = table.entries.find(detail::val_key(pub, abs0, abs1));
  if (it != table.entries.end()) return {it->second, ValueSource::kStored};
  auto mit = table.pub_mean.find(pub);
  if (mit != table.pub_mean.end()) return {mit->second, ValueSource::kPublicMean};
  return {std::vector<double>(static_cast<size_t>(table.T) * table.T, 0.0),
          ValueSource::kZeroFallback};
}

// entry[(pub, abs0, abs1)][i*T+j] = expected player-0 continuation value when
// play reaches the public state, beliefs taken as exact reach frequencies
// under an eps-uniform blueprint mix conditioned on the abstract pair, and
// play continuing under (portfolio0[i], portfolio1[j]). Exact tree walks;
// pairs with zero reach mass are omitted.
inline ValueTable compute_value_table(const EnumeratedGame& g, const AbstractionMap& map,
                                      const StrategyPortfolio& portfolio,
                                      double eps = 0.5) {
  int T = portfolio.T;
  int a = g.spec.num_actions();
  size_t n_nodes = g.nodes.size();

  // Per (player, infoset, portfolio index): distribution over the infoset's
  // legal actions, resolved once.
  std::array<std::vector<std::vector<std::vector<double>>>, 2> sig;
  for (int p = 0; p < 2; ++p) {
    sig[p].assign(g.infosets[p].size(), {});
    for (size_t is = 0; is < g.infosets[p].size(); ++is) {
      const auto& info = g.infosets[p][is];
      auto actions = infoset_actions(g, p, info);
      if (actions.empty()) continue;
      sig[p][is].resize(T);
      for (int t = 0; t < T; ++t)
        sig[p][is][t] = policy_on_legal(portfolio.policies[p][t], info.key, actions, a);
    }
  }

  // Continuation values for every portfolio pair, bottom up. Children have
  // larger ids than parents, so a reverse sweep is in order.
  std::vector<std::vector<double>> cont(static_cast<size_t>(T) * T,
                                        std::vector<double>(n_nodes, 0.0));
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      auto& val = cont[static_cast<size_t>(i) * T + j];
      for (int64_t id = static_cast<int64_t>(n_nodes) - 1; id >= 0; --id) {
        const auto& n = g.nodes[id];
        if (n.terminal) continue;
        const auto& d0 = sig[0][n.iset[0]][i];
        const auto& d1 = sig[1][n.iset[1]][j];
        double v = 0.0;
        for (int x = 0; x < n.na[0]; ++x) {
          for (int y = 0; y < n.na[1]; ++y) {
            int32_t c = g.child(n, x, y);
            v += d0[g.legal0(n)[x]] * d1[g.legal1(n)[y]] *
                 (g.nodes[c].step_reward + val[c]);
          }
        }
        val[id] = v;
      }
    }
  }

  // Belief: joint reach under the eps-mixed blueprint.
  PolicyProfile blueprint{portfolio.policies[0][0], portfolio.policies[1][0]};
  std::vector<double> reach(n_nodes, 0.0);
  reach[0] = 1.0;
  for (size_t id = 0; id < n_nodes; ++id) {
    const auto& n = g.nodes[id];
    if (n.terminal || reach[id] <= 0.0) continue;
    std::array<std::vector<double>, 2> mix;
    for (int p = 0; p < 2; ++p) {
      const auto& info = g.infosets[p][n.iset[p]];
      auto actions = infoset_actions(g, p, info);
      mix[p] = eps_uniform_mix(
          policy_on_legal(blueprint[p], info.key, actions, a), actions, a, eps);
    }
    for (int x = 0; x < n.na[0]; ++x)
      for (int y = 0; y < n.na[1]; ++y)
        reach[g.child(n, x, y)] +=
            reach[id] * mix[0][g.legal0(n)[x]] * mix[1][g.legal1(n)[y]];
  }

  ValueTable table;
  table.T = T;
  std::unordered_map<std::string, double> mass;
  for (size_t id = 0; id < n_nodes; ++id) {
    const auto& n = g.nodes[id];
    if (reach[id] <= 0.0) continue;
    int abs0 = map.lookup(0, g.infosets[0][n.iset[0]].key);
    int abs1 = map.lookup(1, g.infosets[1][n.iset[1]].key);
    auto key = detail::val_key(g.pub_keys[n.pub], abs0, abs1);
    auto& mat = table.entries[key];
    if (mat.empty()) mat.assign(static_cast<size_t>(T) * T, 0.0);
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j)
        mat[static_cast<size_t>(i) * T + j] +=
            reach[id] * cont[static_cast<size_t>(i) * T + j][id];
    mass[key] += reach[id];
  }
  for (auto& [key, mat] : table.entries) {
    double m = mass[key];
    for (double& v : mat) v /= m;
  }
  table.rebuild_means();
  return table;
}

// ---------------------------------------------------------------------------
// Serialization (deterministic byte order; means rebuilt on load)

inline std::string value_table_to_bytes(const ValueTable& table) {
  std::string out = "SSV1";
  detail::put_u32(out, static_cast<uint32_t>(table.T));
  detail::put_u64(out, table.entries.size());
  for (auto it : detail::sorted_entries(table.entries)) {
    detail::put_str(out, it->first);
    for (double v : it->second) detail::put_f64(out, v);
  }
  return out;
}

inline ValueTable value_table_from_bytes(const std::string& bytes) {
  SS_CHECK(bytes.size() >= 4 && bytes.compare(0, 4, "SSV1") == 0,
           "bad value table header");
  detail::ByteReader r{bytes};
  r.pos = 4;
  ValueTable table;
  table.T = static_cast<int>(r.u32());
  SS_CHECK(table.T >= 1, "bad value table T");
  size_t cells = static_cast<size_t>(table.T) * table.T;
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto key = r.str();
    auto& mat = table.entries[key];
    mat.resize(cells);
    for (size_t c = 0; c < cells; ++c) mat[c] = r.f64();
  }
  SS_CHECK(r.pos == bytes.size(), "trailing bytes after value table");
  table.rebuild_means();
  return table;
}

}  // namespace simsolve

#endif  // SIMSOLVE_VALUATION_HPP
