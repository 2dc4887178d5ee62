#ifndef SIMSOLVE_DEPTH_LIMITED_HPP
#define SIMSOLVE_DEPTH_LIMITED_HPP

#include <cmath>
#include <string>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/model.hpp"
#include "simsolve/solver.hpp"
#include "simsolve/valuation.hpp"
#include "simsolve/view.hpp"

namespace simsolve {

struct SubgameSpec {
  PublicKey root_pub;
  std::array<std::vector<double>, 2> reach;  // weight per abstract id, per player
  int depth = 1;
  const LearnedModel* model = nullptr;
  const ValueTable* values = nullptr;
};

struct SubgameCounters {
  int64_t decision_nodes = 0;   // decision and transformation stages
  int64_t terminal_nodes = 0;   // includes transformation payoffs
  int64_t hole_fallbacks = 0;   // model holes turned into value-backed terminals
  int64_t zero_value_lookups = 0;
  int64_t mean_value_lookups = 0;
};

struct DepthLimitedView {
  TreeView view;
  SubgameCounters counters;
  double node_bound = 0.0;
  double terminal_bound = 0.0;
};

namespace detail {

// Expands (public state, abstract pair) nodes through the model tables.
// Shared between plain subgames and gadget games, which both charge their
// depth-limited cores against the same size budget.
class SubgameExpander {
 public:
  SubgameExpander(TreeViewBuilder& b, const LearnedModel& model, const ValueTable& values,
                  int depth)
      : b_(b), model_(model), values_(values), max_depth_(depth), t_(values.T) {}

  SubgameCounters counters;

  int32_t expand(const PublicKey& pub, int abs0, int abs1, int depth, double acc) {
    if (depth == max_depth_) return transformation(pub, abs0, abs1, acc);

    const auto* m0 = model_.find_mask(pub, 0, abs0);
    const auto* m1 = model_.find_mask(pub, 1, abs1);
    if (!m0 || !m1) return hole_terminal(pub, abs0, abs1, acc);

    auto acts0 = model_.mask_actions(*m0);
    auto acts1 = model_.mask_actions(*m1);
    if (acts0.empty() || acts1.empty()) return hole_terminal(pub, abs0, abs1, acc);

    std::array<int32_t, 2> isets{
        b_.intern_infoset(0, abstract_iset_key(0, pub, abs0), acts0),
        b_.intern_infoset(1, abstract_iset_key(1, pub, abs1), acts1)};
    int32_t node = b_.add_decision(isets, {acts0, acts1});
    ++counters.decision_nodes;

    for (size_t i = 0; i < acts0.size(); ++i) {
      for (size_t j = 0; j < acts1.size(); ++j) {
        uint8_t a0 = static_cast<uint8_t>(acts0[i]);
        uint8_t a1 = static_cast<uint8_t>(acts1[j]);
        const PublicKey* next_pub = model_.find_public_successor(pub, a0, a1);
        const auto* term = model_.find_terminal(pub, a0, a1);
        const auto* rew = model_.find_reward(pub, abs0, abs1, a0, a1);
        int nabs0 = 0, nabs1 = 0;
        bool have_pair =
            model_.find_successor_pair(pub, abs0, abs1, a0, a1, &nabs0, &nabs1);
        int32_t child;
        if (!next_pub || !term || !rew || !have_pair) {
          child = hole_terminal(pub, abs0, abs1, acc);
        } else if (term->is_terminal()) {
          child = b_.add_terminal(acc + rew->mean());
          ++counters.terminal_nodes;
        } else {
          child = expand(*next_pub, nabs0, nabs1, depth + 1, acc + rew->mean());
        }
        b_.set_child(node, static_cast<int>(i), static_cast<int>(j), child);
      }
    }
    return node;
  }

 private:
  int32_t transformation(const PublicKey& pub, int abs0, int abs1, double acc) {
    auto lk = value_lookup(values_, pub, abs0, abs1);
    note_lookup(lk.source);
    std::vector<int> choices(t_);
    for (int t = 0; t < t_; ++t) choices[t] = t;
    std::array<int32_t, 2> isets{
        b_.intern_infoset(0, abstract_iset_key(0, pub, abs0), choices),
        b_.intern_infoset(1, abstract_iset_key(1, pub, abs1), choices)};
    int32_t node = b_.add_decision(isets, {choices, choices});
    ++counters.decision_nodes;
    for (int i = 0; i < t_; ++i) {
      for (int j = 0; j < t_; ++j) {
        b_.set_child(node, i, j,
                     b_.add_terminal(acc + lk.matrix[static_cast<size_t>(i) * t_ + j]));
        ++counters.terminal_nodes;
      }
    }
    return node;
  }

  int32_t hole_terminal(const PublicKey& pub, int abs0, int abs1, double acc) {
    auto lk = value_lookup(values_, pub, abs0, abs1);
    note_lookup(lk.source);
    ++counters.hole_fallbacks;
    ++counters.terminal_nodes;
    return b_.add_terminal(acc + lk.matrix[0]);  // blueprint-vs-blueprint entry
  }

  void note_lookup(ValueSource src) {
    if (src == ValueSource::kZeroFallback) ++counters.zero_value_lookups;
    if (src == ValueSource::kPublicMean) ++counters.mean_value_lookups;
  }

  TreeViewBuilder& b_;
  const LearnedModel& model_;
  const ValueTable& values_;
  int max_depth_ = 1;
  int t_ = 1;
};

inline void check_subgame_bounds(const SubgameCounters& c, int64_t l, int alphabet,
                                 int depth, int t, double* node_bound,
                                 double* terminal_bound) {
  double l2 = static_cast<double>(l) * static_cast<double>(l);
  double nodes = 0.0;
  for (int d = 0; d <= depth; ++d) nodes += l2 * std::pow(alphabet, 2.0 * d);
  double terms = l2 * std::pow(alphabet, 2.0 * depth) * t * t;
  *node_bound = nodes;
  *terminal_bound = terms;
  SS_CHECK(static_cast<double>(c.decision_nodes) <= nodes,
           "subgame node count exceeds the size bound");
  SS_CHECK(static_cast<double>(c.terminal_nodes) <= terms,
           "subgame terminal count exceeds the size bound");
}

}  // namespace detail

// Depth-limited view of the abstract game: a weighted root over abstract
// pairs, D joint-action steps through the model, terminal payoffs from the
// reward table, and a T x T transformation stage at the frontier paying from
// the value table. Model holes below the root become value-backed terminals;
// a root no part of which the model covers is an error.
inline DepthLimitedView build_subgame(const SubgameSpec& spec) {
  SS_CHECK(spec.model != nullptr && spec.values != nullptr,
           "build_subgame: model and values required");
  SS_CHECK(spec.depth >= 1, "build_subgame: depth must be at least 1");
  int t = spec.values->T;
  int alphabet = spec.model->spec.num_actions();
  for (int p = 0; p < 2; ++p) {
    SS_CHECK(!spec.reach[p].empty(), "build_subgame: empty reach vector");
    for (double w : spec.reach[p])
      SS_CHECK(w >= 0.0, "build_subgame: negative reach weight");
  }

  struct Pair {
    int abs0, abs1;
    double w;
  };
  std::vector<Pair> pairs;
  double total = 0.0;
  for (size_t i = 0; i < spec.reach[0].size(); ++i) {
    if (spec.reach[0][i] <= 0.0) continue;
    for (size_t j = 0; j < spec.reach[1].size(); ++j) {
      if (spec.reach[1][j] <= 0.0) continue;
      double w = spec.reach[0][i] * spec.reach[1][j];
      pairs.push_back({static_cast<int>(i), static_cast<int>(j), w});
      total += w;
    }
  }
  SS_CHECK(!pairs.empty(), "build_subgame: no abstract pair has positive reach");

  TreeViewBuilder b(std::max(alphabet, t));
  int32_t root = b.add_weighted(static_cast<int>(pairs.size()));
  detail::SubgameExpander ex(b, *spec.model, *spec.values, spec.depth);
  for (size_t k = 0; k < pairs.size(); ++k) {
    int32_t child = ex.expand(spec.root_pub, pairs[k].abs0, pairs[k].abs1, 0, 0.0);
    b.set_weighted_child(root, static_cast<int>(k), child, pairs[k].w / total);
  }
  if (ex.counters.decision_nodes == 0)
    throw ModelHoleError("subgame-root", spec.root_pub);

  DepthLimitedView out;
  out.counters = ex.counters;
  int64_t l = static_cast<int64_t>(std::max(spec.reach[0].size(), spec.reach[1].size()));
  detail::check_subgame_bounds(out.counters, l, alphabet, spec.depth, t,
                               &out.node_bound, &out.terminal_bound);
  out.view = b.take();
  return out;
}

inline SolveResult solve_subgame(const DepthLimitedView& dl, int iterations) {
  return cfr_plus(dl.view, iterations);
}

// Average policy of every abstract infoset at one public state, keyed by
// abstract id, from a subgame or gadget solution.
inline std::unordered_map<int, std::vector<double>> root_abstract_policy(
    const SolveResult& res, int player, const PublicKey& pub) {
  std::unordered_map<int, std::vector<double>> out;
  AbstractKeyParts parts;
  for (const auto& [key, dist] : res.avg[player].table) {
    if (!parse_abstract_key(key, &parts)) continue;
    if (parts.player != player || parts.pub != pub) continue;
    out.emplace(parts.abs, dist);
  }
  return out;
}

}  // namespace simsolve

#endif  // SIMSOLVE_DEPTH_LIMITED_HPP
