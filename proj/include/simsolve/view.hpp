#ifndef SIMSOLVE_VIEW_HPP
#define SIMSOLVE_VIEW_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "simsolve/enumerate.hpp"
#include "simsolve/policy.hpp"

namespace simsolve {

// Solver-facing game tree. One structure serves the real game, abstracted
// games, depth-limited model games, and resolving gadgets, so the solver code
// never needs to know which it is walking.
//
// Node kinds:
//   kTerminal  leaf with a total player-0 utility for the whole path.
//   kWeighted  fixed-probability branch (root range distributions).
//   kDecision  simultaneous move; either side may be a forced single branch
//              with no infoset (iset = -1), e.g. the non-acting side of a
//              gadget terminate/follow choice.
//
// A decision node's actions are slots into its infoset's action list, which
// lets several nodes with different legal subsets share one infoset (this
// happens in merged abstractions). For well-formed games the slots are simply
// 0..n-1.
struct TreeView {
  enum NodeKind : uint8_t { kTerminal = 0, kWeighted = 1, kDecision = 2 };

  struct Infoset {
    InfosetKey key;
    std::vector<int> actions;  // global action ids, ascending
  };

  struct Node {
    NodeKind kind = kTerminal;
    std::array<int32_t, 2> iset = {-1, -1};
    std::array<uint16_t, 2> na = {1, 1};
    double util = 0.0;
    int64_t child_begin = -1;  // kDecision/kWeighted: block in `children`
    int64_t slot_begin = -1;   // kDecision: na[0] slots then na[1] slots
  };

  std::array<std::vector<Infoset>, 2> infosets;
  std::vector<Node> nodes;
  std::vector<int32_t> children;
  std::vector<double> weights;        // parallel to children, kWeighted blocks only
  std::vector<uint16_t> slots;
  int32_t root = 0;
  int num_actions = 0;  // size of the dense action alphabet for policies

  int32_t child(const Node& n, int i0, int i1) const {
    return children[n.child_begin + static_cast<int64_t>(i0) * n.na[1] + i1];
  }
  const uint16_t* slots0(const Node& n) const { return slots.data() + n.slot_begin; }
  const uint16_t* slots1(const Node& n) const {
    return slots.data() + n.slot_begin + n.na[0];
  }
  bool empty() const { return nodes.empty(); }
};

// Incremental builder shared by all view constructors.
struct TreeViewBuilder {
  TreeView view;
  std::array<std::unordered_map<InfosetKey, int32_t>, 2> iset_ids;

  explicit TreeViewBuilder(int num_actions) { view.num_actions = num_actions; }

  int32_t intern_infoset(int player, const InfosetKey& key,
                         const std::vector<int>& actions) {
    auto it = iset_ids[player].find(key);
    if (it != iset_ids[player].end()) {
      // Merge action sets (sorted union) when nodes disagree.
      auto& have = view.infosets[player][it->second].actions;
      std::vector<int> merged;
      merged.reserve(have.size() + actions.size());
      size_t i = 0, j = 0;
      while (i < have.size() || j < actions.size()) {
        if (j == actions.size() || (i < have.size() && have[i] < actions[j]))
          merged.push_back(have[i++]);
        else if (i == have.size() || actions[j] < have[i])
          merged.push_back(actions[j++]);
        else {
          merged.push_back(have[i++]);
          ++j;
        }
      }
      have = std::move(merged);
      return it->second;
    }
    int32_t id = static_cast<int32_t>(view.infosets[player].size());
    iset_ids[player].emplace(key, id);
    view.infosets[player].push_back({key, actions});
    return id;
  }

  int32_t add_terminal(double util) {
    TreeView::Node n;
    n.kind = TreeView::kTerminal;
    n.util = util;
    view.nodes.push_back(n);
    return static_cast<int32_t>(view.nodes.size()) - 1;
  }

  // Children must be filled afterwards via set_weighted_child.
  int32_t add_weighted(int count) {
    TreeView::Node n;
    n.kind = TreeView::kWeighted;
    n.na = {static_cast<uint16_t>(count), 1};
    n.child_begin = static_cast<int64_t>(view.children.size());
    view.children.resize(view.children.size() + count, -1);
    view.weights.resize(view.children.size(), 0.0);
    view.nodes.push_back(n);
    return static_cast<int32_t>(view.nodes.size()) - 1;
  }

  void set_weighted_child(int32_t node, int i, int32_t child, double w) {
    auto& n = view.nodes[node];
    view.children[n.child_begin + i] = child;
    view.weights[n.child_begin + i] = w;
  }

  // iset -1 with a single action marks a forced branch for that side.
  int32_t add_decision(std::array<int32_t, 2> iset,
                       const std::array<std::vector<int>, 2>& actions) {
    TreeView::Node n;
    n.kind = TreeView::kDecision;
    n.iset = iset;
    n.na = {static_cast<uint16_t>(std::max<size_t>(actions[0].size(), 1)),
            static_cast<uint16_t>(std::max<size_t>(actions[1].size(), 1))};
    n.slot_begin = static_cast<int64_t>(view.slots.size());
    for (int p = 0; p < 2; ++p) {
      if (iset[p] < 0) {
        view.slots.push_back(0);
        continue;
      }
      const auto& all = view.infosets[p][iset[p]].actions;
      for (int a : actions[p]) {
        size_t s = 0;
        while (s < all.size() && all[s] != a) ++s;
        SS_CHECK(s < all.size(), "node action missing from infoset action set");
        view.slots.push_back(static_cast<uint16_t>(s));
      }
    }
    n.child_begin = static_cast<int64_t>(view.children.size());
    view.children.resize(view.children.size() +
                             static_cast<size_t>(n.na[0]) * n.na[1], -1);
    view.nodes.push_back(n);
    return static_cast<int32_t>(view.nodes.size()) - 1;
  }

  void set_child(int32_t node, int i0, int i1, int32_t child) {
    auto& n = view.nodes[node];
    view.children[n.child_begin + static_cast<int64_t>(i0) * n.na[1] + i1] = child;
  }

  TreeView take() { return std::move(view); }
};

// The real game as a view: node-per-history, real information sets, terminal
// utility = accumulated player-0 reward.
inline TreeView build_real_view(const EnumeratedGame& g) {
  TreeViewBuilder b(g.spec.num_actions());
  std::vector<int32_t> map(g.nodes.size(), -1);

  // Enumeration order is parent-before-child, so one forward pass suffices.
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& en = g.nodes[i];
    int32_t vid;
    if (en.terminal) {
      vid = b.add_terminal(en.reward_sum);
    } else {
      std::array<std::vector<int>, 2> acts;
      for (int p = 0; p < 2; ++p) {
        const uint8_t* l = (p == 0) ? g.legal0(en) : g.legal1(en);
        acts[p].assign(l, l + en.na[p]);
      }
      std::array<int32_t, 2> iset;
      for (int p = 0; p < 2; ++p)
        iset[p] = b.intern_infoset(p, g.infosets[p][en.iset[p]].key, acts[p]);
      vid = b.add_decision(iset, acts);
    }
    map[i] = vid;
    if (en.parent >= 0) {
      const auto& pn = g.nodes[en.parent];
      // Locate the action-pair indices on the edge into this node.
      const uint8_t* l0 = g.legal0(pn);
      const uint8_t* l1 = g.legal1(pn);
      int i0 = 0, i1 = 0;
      while (l0[i0] != en.action_in[0]) ++i0;
      while (l1[i1] != en.action_in[1]) ++i1;
      b.set_child(map[en.parent], i0, i1, vid);
    }
  }
  return b.take();
}

}  // namespace simsolve

#endif  // SIMSOLVE_VIEW_HPP
