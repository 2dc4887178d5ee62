#ifndef SIMSOLVE_SOLVER_HPP
#define SIMSOLVE_SOLVER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "simsolve/view.hpp"

namespace simsolve {

// Opponent-reach-weighted counterfactual values, plus the reach mass itself so
// callers can convert to per-infoset expected values.
struct CfValues {
  struct Entry {
    double value = 0.0;  // sum over members of pi_{-p}(h) * u_p(h | profile)
    double reach = 0.0;  // sum over members of pi_{-p}(h)
  };
  std::array<std::unordered_map<InfosetKey, Entry>, 2> table;
};

struct SolveResult {
  PolicyProfile avg;
  CfValues cfvs;        // under the average profile
  double root_value = 0.0;  // player-0 expected value under the average profile
};

namespace detail {

constexpr int kMaxBranch = 64;

// Per-infoset distributions aligned to the infoset's action list, resolved
// once so tree walks don't touch hash maps. Missing infosets become uniform.
inline std::vector<std::vector<double>> align_policy(const TreeView& view, int player,
                                                     const Policy& policy) {
  const auto& sets = view.infosets[player];
  std::vector<std::vector<double>> out(sets.size());
  for (size_t i = 0; i < sets.size(); ++i) {
    auto dense = policy_on_legal(policy, sets[i].key, sets[i].actions, view.num_actions);
    out[i].reserve(sets[i].actions.size());
    for (int a : sets[i].actions) out[i].push_back(dense[a]);
  }
  return out;
}

// Restriction of an infoset-aligned distribution onto one node's slots,
// re-normalized (uniform when nothing overlaps). For views whose nodes carry
// the full infoset action set this is the identity.
inline void node_sig(const std::vector<double>& aligned, const uint16_t* slots, int na,
                     double* out) {
  double total = 0.0;
  for (int i = 0; i < na; ++i) total += aligned[slots[i]];
  if (total > 0.0) {
    for (int i = 0; i < na; ++i) out[i] = aligned[slots[i]] / total;
  } else {
    for (int i = 0; i < na; ++i) out[i] = 1.0 / na;
  }
}

struct CfrState {
  std::array<std::vector<int64_t>, 2> offset;
  std::array<std::vector<double>, 2> regret;
  std::array<std::vector<double>, 2> strat_sum;

  explicit CfrState(const TreeView& view) {
    for (int p = 0; p < 2; ++p) {
      offset[p].resize(view.infosets[p].size() + 1, 0);
      for (size_t i = 0; i < view.infosets[p].size(); ++i)
        offset[p][i + 1] = offset[p][i] +
                           static_cast<int64_t>(view.infosets[p][i].actions.size());
      regret[p].assign(offset[p].back(), 0.0);
      strat_sum[p].assign(offset[p].back(), 0.0);
    }
  }
};

struct CfrWalker {
  const TreeView& view;
  CfrState& st;
  int updater = 0;
  double weight = 1.0;  // linear averaging weight (iteration index)

  void strategy(int player, const TreeView::Node& n, double* sig) const {
    int na = n.na[player];
    if (n.iset[player] < 0) {
      sig[0] = 1.0;
      return;
    }
    const uint16_t* sl = (player == 0) ? view.slots0(n) : view.slots1(n);
    const double* reg = st.regret[player].data() + st.offset[player][n.iset[player]];
    double total = 0.0;
    for (int i = 0; i < na; ++i) {
      double r = reg[sl[i]];
      sig[i] = r > 0.0 ? r : 0.0;
      total += sig[i];
    }
    if (total > 0.0)
      for (int i = 0; i < na; ++i) sig[i] /= total;
    else
      for (int i = 0; i < na; ++i) sig[i] = 1.0 / na;
  }

  double walk(int32_t id, double reach_me, double reach_opp) {
    const auto& n = view.nodes[id];
    if (n.kind == TreeView::kTerminal) return updater == 0 ? n.util : -n.util;
    if (n.kind == TreeView::kWeighted) {
      double v = 0.0;
      for (int i = 0; i < n.na[0]; ++i) {
        double w = view.weights[n.child_begin + i];
        if (w <= 0.0) continue;
        v += w * walk(view.children[n.child_begin + i], reach_me, reach_opp * w);
      }
      return v;
    }

    double sig0[kMaxBranch], sig1[kMaxBranch];
    strategy(0, n, sig0);
    strategy(1, n, sig1);
    const double* sig_me = updater == 0 ? sig0 : sig1;
    const double* sig_op = updater == 0 ? sig1 : sig0;
    int na_me = n.na[updater];
    int na_op = n.na[1 - updater];

    double q[kMaxBranch];
    double value = 0.0;
    for (int i = 0; i < na_me; ++i) {
      double qi = 0.0;
      for (int j = 0; j < na_op; ++j) {
        int32_t c = updater == 0 ? view.child(n, i, j) : view.child(n, j, i);
        qi += sig_op[j] * walk(c, reach_me * sig_me[i], reach_opp * sig_op[j]);
      }
      q[i] = qi;
      value += sig_me[i] * qi;
    }

    if (n.iset[updater] >= 0) {
      const uint16_t* sl = updater == 0 ? view.slots0(n) : view.slots1(n);
      int64_t off = st.offset[updater][n.iset[updater]];
      double* reg = st.regret[updater].data() + off;
      double* sum = st.strat_sum[updater].data() + off;
      for (int i = 0; i < na_me; ++i) {
        double r = reg[sl[i]] + reach_opp * (q[i] - value);
        reg[sl[i]] = r > 0.0 ? r : 0.0;  // regret matching plus: clamp at zero
        sum[sl[i]] += weight * reach_me * sig_me[i];
      }
    }
    return value;
  }
};

// Bottom-up expected player-0 utility of every node under a resolved profile.
inline void eval_values(const TreeView& view,
                        const std::array<std::vector<std::vector<double>>, 2>& aligned,
                        std::vector<double>& val) {
  val.assign(view.nodes.size(), 0.0);
  // Children always have larger ids than their parent (builders append
  // children after the parent), so one reverse sweep is a valid order.
  for (int32_t id = static_cast<int32_t>(view.nodes.size()) - 1; id >= 0; --id) {
    const auto& n = view.nodes[id];
    if (n.kind == TreeView::kTerminal) {
      val[id] = n.util;
      continue;
    }
    if (n.kind == TreeView::kWeighted) {
      double v = 0.0;
      for (int i = 0; i < n.na[0]; ++i)
        v += view.weights[n.child_begin + i] * val[view.children[n.child_begin + i]];
      val[id] = v;
      continue;
    }
    double sig0[kMaxBranch], sig1[kMaxBranch];
    node_sig(n.iset[0] >= 0 ? aligned[0][n.iset[0]] : std::vector<double>{1.0},
             view.slots0(n), n.na[0], sig0);
    node_sig(n.iset[1] >= 0 ? aligned[1][n.iset[1]] : std::vector<double>{1.0},
             view.slots1(n), n.na[1], sig1);
    double v = 0.0;
    for (int i = 0; i < n.na[0]; ++i)
      for (int j = 0; j < n.na[1]; ++j)
        v += sig0[i] * sig1[j] * val[view.child(n, i, j)];
    val[id] = v;
  }
}

struct ReachWalker {
  const TreeView& view;
  const std::array<std::vector<std::vector<double>>, 2>& aligned;
  const std::vector<double>& val;
  CfValues& out;

  void walk(int32_t id, double r0, double r1, double rc) {
    const auto& n = view.nodes[id];
    if (n.kind == TreeView::kTerminal) return;
    if (n.kind == TreeView::kWeighted) {
      for (int i = 0; i < n.na[0]; ++i) {
        double w = view.weights[n.child_begin + i];
        if (w > 0.0) walk(view.children[n.child_begin + i], r0, r1, rc * w);
      }
      return;
    }
    double sig0[kMaxBranch], sig1[kMaxBranch];
    node_sig(n.iset[0] >= 0 ? aligned[0][n.iset[0]] : std::vector<double>{1.0},
             view.slots0(n), n.na[0], sig0);
    node_sig(n.iset[1] >= 0 ? aligned[1][n.iset[1]] : std::vector<double>{1.0},
             view.slots1(n), n.na[1], sig1);
    if (n.iset[0] >= 0) {
      auto& e = out.table[0][view.infosets[0][n.iset[0]].key];
      e.value += rc * r1 * val[id];
      e.reach += rc * r1;
    }
    if (n.iset[1] >= 0) {
      auto& e = out.table[1][view.infosets[1][n.iset[1]].key];
      e.value += rc * r0 * (-val[id]);
      e.reach += rc * r0;
    }
    for (int i = 0; i < n.na[0]; ++i)
      for (int j = 0; j < n.na[1]; ++j)
        walk(view.child(n, i, j), r0 * sig0[i], r1 * sig1[j], rc);
  }
};

}  // namespace detail

inline double expected_value(const TreeView& view, const PolicyProfile& profile) {
  SS_CHECK(!view.empty(), "expected_value: empty view");
  std::array<std::vector<std::vector<double>>, 2> aligned = {
      detail::align_policy(view, 0, profile[0]),
      detail::align_policy(view, 1, profile[1])};
  std::vector<double> val;
  detail::eval_values(view, aligned, val);
  return val[view.root];
}

// Counterfactual values of every infoset under the profile.
inline CfValues counterfactual_values(const TreeView& view, const PolicyProfile& profile) {
  SS_CHECK(!view.empty(), "counterfactual_values: empty view");
  std::array<std::vector<std::vector<double>>, 2> aligned = {
      detail::align_policy(view, 0, profile[0]),
      detail::align_policy(view, 1, profile[1])};
  std::vector<double> val;
  detail::eval_values(view, aligned, val);
  CfValues out;
  detail::ReachWalker rw{view, aligned, val, out};
  rw.walk(view.root, 1.0, 1.0, 1.0);
  return out;
}

// CFR+ with alternating updates, zero-clamped regrets and linearly weighted
// strategy averaging. Deterministic: no randomness anywhere in the loop.
// Incremental so callers can snapshot the average policy mid-run.
class CfrRun {
 public:
  explicit CfrRun(const TreeView& view) : view_(view), st_(view) {
    SS_CHECK(!view.empty(), "cfr_plus: empty view");
  }

  void run(int iterations) {
    SS_CHECK(iterations >= 0, "cfr_plus: negative iteration count");
    detail::CfrWalker walker{view_, st_};
    for (int t = 0; t < iterations; ++t) {
      ++done_;
      walker.weight = static_cast<double>(done_);
      walker.updater = 0;
      walker.walk(view_.root, 1.0, 1.0);
      walker.updater = 1;
      walker.walk(view_.root, 1.0, 1.0);
    }
  }

  int completed() const { return done_; }

  // Smallest stored cumulative regret; regret clamping keeps this at >= 0.
  double min_regret() const {
    double lo = 0.0;
    for (int p = 0; p < 2; ++p)
      for (double r : st_.regret[p]) lo = std::min(lo, r);
    return lo;
  }

  PolicyProfile average() const {
    PolicyProfile avg;
    for (int p = 0; p < 2; ++p) {
      for (size_t i = 0; i < view_.infosets[p].size(); ++i) {
        const auto& info = view_.infosets[p][i];
        const double* sum = st_.strat_sum[p].data() + st_.offset[p][i];
        double total = 0.0;
        for (size_t k = 0; k < info.actions.size(); ++k) total += sum[k];
        std::vector<double> dist(view_.num_actions, 0.0);
        if (total > 0.0) {
          for (size_t k = 0; k < info.actions.size(); ++k)
            dist[info.actions[k]] = sum[k] / total;
        } else {
          for (int a : info.actions) dist[a] = 1.0 / info.actions.size();
        }
        avg[p].table.emplace(info.key, std::move(dist));
      }
    }
    return avg;
  }

  SolveResult result() const {
    SolveResult res;
    res.avg = average();
    std::array<std::vector<std::vector<double>>, 2> aligned = {
        detail::align_policy(view_, 0, res.avg[0]),
        detail::align_policy(view_, 1, res.avg[1])};
    std::vector<double> val;
    detail::eval_values(view_, aligned, val);
    res.root_value = val[view_.root];
    detail::ReachWalker rw{view_, aligned, val, res.cfvs};
    rw.walk(view_.root, 1.0, 1.0, 1.0);
    return res;
  }

 private:
  const TreeView& view_;
  detail::CfrState st_;
  int done_ = 0;
};

inline SolveResult cfr_plus(const TreeView& view, int iterations) {
  SS_CHECK(iterations >= 1, "cfr_plus: iterations must be positive");
  CfrRun run(view);
  run.run(iterations);
  return run.result();
}

struct BestResponse {
  double value = 0.0;  // responder's expected utility against the fixed policy
  Policy policy;       // pure, ties broken toward the lowest action id
};

// Exact best response by bottom-up expectimax over the responder's infosets.
// Assumes the responder has perfect recall in this view (true for real games;
// the infosets of every view built here are depth-uniform, which is the part
// the sweep below relies on).
inline BestResponse best_response(const TreeView& view, const Policy& fixed,
                                  int responder) {
  SS_CHECK(!view.empty(), "best_response: empty view");
  int fixed_player = 1 - responder;
  auto aligned = detail::align_policy(view, fixed_player, fixed);

  size_t n_nodes = view.nodes.size();
  std::vector<int> depth(n_nodes, 0);
  std::vector<double> reach_opp(n_nodes, 0.0);  // chance * fixed player
  reach_opp[view.root] = 1.0;
  int max_depth = 0;

  // Forward sweep (parents precede children by construction).
  for (size_t id = 0; id < n_nodes; ++id) {
    const auto& n = view.nodes[id];
    if (n.kind == TreeView::kTerminal) continue;
    if (n.kind == TreeView::kWeighted) {
      for (int i = 0; i < n.na[0]; ++i) {
        int32_t c = view.children[n.child_begin + i];
        depth[c] = depth[id] + 1;
        max_depth = std::max(max_depth, depth[c]);
        reach_opp[c] += reach_opp[id] * view.weights[n.child_begin + i];
      }
      continue;
    }
    double sig_fix[detail::kMaxBranch];
    int na_fix = n.na[fixed_player];
    detail::node_sig(n.iset[fixed_player] >= 0 ? aligned[n.iset[fixed_player]]
                                               : std::vector<double>{1.0},
                     fixed_player == 0 ? view.slots0(n) : view.slots1(n), na_fix,
                     sig_fix);
    for (int i = 0; i < n.na[0]; ++i) {
      for (int j = 0; j < n.na[1]; ++j) {
        int32_t c = view.child(n, i, j);
        depth[c] = depth[id] + 1;
        max_depth = std::max(max_depth, depth[c]);
        reach_opp[c] += reach_opp[id] * sig_fix[fixed_player == 0 ? i : j];
      }
    }
  }

  std::vector<std::vector<int32_t>> by_depth(max_depth + 1);
  for (size_t id = 0; id < n_nodes; ++id)
    by_depth[depth[id]].push_back(static_cast<int32_t>(id));

  const auto& rsets = view.infosets[responder];
  std::vector<int> br_slot(rsets.size(), -1);
  std::vector<int> iset_depth(rsets.size(), -1);
  std::vector<std::vector<double>> score(rsets.size());
  std::vector<double> val(n_nodes, 0.0);
  std::vector<std::vector<double>> qbuf(n_nodes);

  for (int d = max_depth; d >= 0; --d) {
    // Q-values and infoset scores first, then infoset decisions, then node values.
    std::vector<int32_t> pending;
    for (int32_t id : by_depth[d]) {
      const auto& n = view.nodes[id];
      if (n.kind == TreeView::kTerminal) {
        val[id] = responder == 0 ? n.util : -n.util;
        continue;
      }
      if (n.kind == TreeView::kWeighted) {
        double v = 0.0;
        for (int i = 0; i < n.na[0]; ++i)
          v += view.weights[n.child_begin + i] * val[view.children[n.child_begin + i]];
        val[id] = v;
        continue;
      }
      double sig_fix[detail::kMaxBranch];
      int na_fix = n.na[fixed_player];
      detail::node_sig(n.iset[fixed_player] >= 0 ? aligned[n.iset[fixed_player]]
                                                 : std::vector<double>{1.0},
                       fixed_player == 0 ? view.slots0(n) : view.slots1(n), na_fix,
                       sig_fix);
      int na_me = n.na[responder];
      std::vector<double> q(na_me, 0.0);
      for (int i = 0; i < na_me; ++i) {
        for (int j = 0; j < na_fix; ++j) {
          int32_t c = responder == 0 ? view.child(n, i, j) : view.child(n, j, i);
          q[i] += sig_fix[j] * val[c];
        }
      }
      int32_t is = n.iset[responder];
      if (is < 0) {
        val[id] = q[0];
        continue;
      }
      if (iset_depth[is] < 0) iset_depth[is] = d;
      SS_CHECK(iset_depth[is] == d,
               "best_response: infoset spans multiple depths");
      if (score[is].empty()) score[is].assign(rsets[is].actions.size(), 0.0);
      const uint16_t* sl = responder == 0 ? view.slots0(n) : view.slots1(n);
      for (int i = 0; i < na_me; ++i) score[is][sl[i]] += reach_opp[id] * q[i];
      qbuf[id] = std::move(q);
      pending.push_back(id);
    }
    // Decide per infoset (slots ascend with action id, so the first argmax is
    // the lowest-action tie-break), then fill node values.
    for (int32_t id : pending) {
      int32_t is = view.nodes[id].iset[responder];
      if (br_slot[is] < 0) {
        int best = 0;
        for (size_t k = 1; k < score[is].size(); ++k)
          if (score[is][k] > score[is][best]) best = static_cast<int>(k);
        br_slot[is] = best;
      }
    }
    for (int32_t id : pending) {
      const auto& n = view.nodes[id];
      int32_t is = n.iset[responder];
      const uint16_t* sl = responder == 0 ? view.slots0(n) : view.slots1(n);
      int local = -1;
      for (int i = 0; i < n.na[responder]; ++i)
        if (sl[i] == br_slot[is]) local = i;
      if (local < 0) {
        // The infoset-level choice is not offered at this node (merged
        // abstractions only); respond with the best locally available action.
        local = 0;
        for (int i = 1; i < n.na[responder]; ++i)
          if (qbuf[id][i] > qbuf[id][local]) local = i;
      }
      val[id] = qbuf[id][local];
      qbuf[id].clear();
    }
  }

  BestResponse br;
  br.value = val[view.root];
  for (size_t is = 0; is < rsets.size(); ++is) {
    std::vector<double> dist(view.num_actions, 0.0);
    int slot = br_slot[is] >= 0 ? br_slot[is] : 0;
    dist[rsets[is].actions[slot]] = 1.0;
    br.policy.table.emplace(rsets[is].key, std::move(dist));
  }
  return br;
}

// Mean of the two best-response gains. For the value-zero symmetric games
// here this equals (u_br0 + u_br1) / 2.
inline double exploitability(const TreeView& real_view, const PolicyProfile& profile) {
  double br0 = best_response(real_view, profile[1], 0).value;
  double br1 = best_response(real_view, profile[0], 1).value;
  return 0.5 * (br0 + br1);
}

}  // namespace simsolve

#endif  // SIMSOLVE_SOLVER_HPP
