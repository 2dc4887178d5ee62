#ifndef SIMSOLVE_ENUMERATE_HPP
#define SIMSOLVE_ENUMERATE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "simsolve/game.hpp"

namespace simsolve {

struct EnumerationBudgetExceeded : std::runtime_error {
  explicit EnumerationBudgetExceeded(int64_t budget)
      : std::runtime_error("enumeration node budget exceeded (" +
                           std::to_string(budget) + ")") {}
};

// Full history tree of a game together with its public-state and
// information-set partitions. Node 0 is the root; children of a decision node
// are stored row-major over (player-0 action, player-1 action) index pairs.
struct EnumeratedGame {
  GameSpec spec;

  struct Node {
    int32_t parent = -1;
    int32_t pub = -1;
    std::array<int32_t, 2> iset = {-1, -1};
    int64_t child_begin = -1;  // index into `children`; -1 for terminal nodes
    int64_t legal_begin = 0;   // index into `legal`: na[0] entries, then na[1]
    std::array<uint8_t, 2> na = {0, 0};
    std::array<uint8_t, 2> action_in = {0, 0};  // joint action on the edge from parent
    uint8_t depth = 0;
    bool terminal = false;
    double step_reward = 0.0;  // player-0 reward emitted on the edge into this node
    double reward_sum = 0.0;   // accumulated player-0 reward from the root
  };

  std::vector<Node> nodes;
  std::vector<int32_t> children;
  std::vector<uint8_t> legal;

  std::vector<PublicKey> pub_keys;
  std::unordered_map<PublicKey, int32_t> pub_ids;

  struct InfosetInfo {
    InfosetKey key;
    int32_t pub = -1;
    int32_t num_actions = 0;      // the owning player's action count (0 if no nonterminal member)
    int32_t nonterminal_members = 0;
    std::vector<int32_t> members;  // node ids, discovery order
  };
  std::array<std::vector<InfosetInfo>, 2> infosets;
  std::array<std::unordered_map<InfosetKey, int32_t>, 2> infoset_ids;
  // Per public state, per player: infoset ids in discovery order.
  std::array<std::vector<std::vector<int32_t>>, 2> pub_infosets;

  const Node& node(int32_t id) const { return nodes[id]; }
  int32_t child(const Node& n, int i0, int i1) const {
    return children[n.child_begin + static_cast<int64_t>(i0) * n.na[1] + i1];
  }
  const uint8_t* legal0(const Node& n) const { return legal.data() + n.legal_begin; }
  const uint8_t* legal1(const Node& n) const { return legal.data() + n.legal_begin + n.na[0]; }

  // Reconstructs the game state at a node by replaying the action path.
  GameState state_of(int32_t id) const {
    std::vector<std::array<uint8_t, 2>> path;
    for (int32_t cur = id; cur != 0; cur = nodes[cur].parent)
      path.push_back(nodes[cur].action_in);
    GameState s = new_game(spec);
    for (auto it = path.rbegin(); it != path.rend(); ++it) s.apply((*it)[0], (*it)[1]);
    return s;
  }
};

namespace detail {

inline int32_t intern_pub(EnumeratedGame& g, const PublicKey& key) {
  auto it = g.pub_ids.find(key);
  if (it != g.pub_ids.end()) return it->second;
  int32_t id = static_cast<int32_t>(g.pub_keys.size());
  g.pub_ids.emplace(key, id);
  g.pub_keys.push_back(key);
  g.pub_infosets[0].emplace_back();
  g.pub_infosets[1].emplace_back();
  return id;
}

inline int32_t intern_infoset(EnumeratedGame& g, int player, const InfosetKey& key,
                              int32_t pub) {
  auto it = g.infoset_ids[player].find(key);
  if (it != g.infoset_ids[player].end()) return it->second;
  int32_t id = static_cast<int32_t>(g.infosets[player].size());
  g.infoset_ids[player].emplace(key, id);
  EnumeratedGame::InfosetInfo info;
  info.key = key;
  info.pub = pub;
  g.infosets[player].push_back(std::move(info));
  g.pub_infosets[player][pub].push_back(id);
  return id;
}

}  // namespace detail

// Enumerates the complete game: every history, grouped into public states and
// information sets. Guarded by a node budget; exceeding it throws.
inline EnumeratedGame enumerate_public_tree(const GameSpec& spec,
                                            int64_t node_budget = 2'000'000) {
  EnumeratedGame g;
  g.spec = spec;

  struct Frame {
    GameState state;
    PublicKey pub;
    std::array<InfosetKey, 2> iset;
    int32_t node_id;
  };

  {
    EnumeratedGame::Node root;
    root.depth = 0;
    GameState rs = new_game(spec);
    PublicKey pk = root_public_key();
    root.pub = detail::intern_pub(g, pk);
    g.nodes.push_back(root);
  }

  // Recursive expansion with an explicit work list is awkward here because
  // children must land in one contiguous block, so use plain recursion; depth
  // is bounded by the round limit.
  struct Expander {
    EnumeratedGame& g;
    int64_t budget;

    void bind(int32_t node_id, int player, const InfosetKey& key, bool terminal,
              int num_actions) {
      int32_t pub = g.nodes[node_id].pub;
      int32_t id = detail::intern_infoset(g, player, key, pub);
      auto& info = g.infosets[player][id];
      SS_CHECK(info.pub == pub, "equal infoset keys in different public states");
      info.members.push_back(node_id);
      if (!terminal) {
        ++info.nonterminal_members;
        if (info.num_actions == 0) info.num_actions = num_actions;
        SS_CHECK(info.num_actions == num_actions,
                 "legal-action count varies inside one infoset");
      }
      g.nodes[node_id].iset[player] = id;
    }

    void expand(int32_t node_id, const GameState& state, const PublicKey& pub,
                const std::array<InfosetKey, 2>& isets) {
      std::array<std::vector<int>, 2> acts;
      bool terminal = state.terminal;
      if (!terminal) {
        acts[0] = state.legal_actions(0);
        acts[1] = state.legal_actions(1);
      }
      bind(node_id, 0, isets[0], terminal, static_cast<int>(acts[0].size()));
      bind(node_id, 1, isets[1], terminal, static_cast<int>(acts[1].size()));
      if (terminal) return;

      auto& n = g.nodes[node_id];
      n.na = {static_cast<uint8_t>(acts[0].size()), static_cast<uint8_t>(acts[1].size())};
      n.legal_begin = static_cast<int64_t>(g.legal.size());
      for (int a : acts[0]) g.legal.push_back(static_cast<uint8_t>(a));
      for (int a : acts[1]) g.legal.push_back(static_cast<uint8_t>(a));
      n.child_begin = static_cast<int64_t>(g.children.size());
      size_t block = acts[0].size() * acts[1].size();
      g.children.resize(g.children.size() + block, -1);

      for (size_t i0 = 0; i0 < acts[0].size(); ++i0) {
        for (size_t i1 = 0; i1 < acts[1].size(); ++i1) {
          if (static_cast<int64_t>(g.nodes.size()) >= budget)
            throw EnumerationBudgetExceeded(budget);
          GameState child_state = state;
          StepResult step = child_state.apply(acts[0][i0], acts[1][i1]);

          EnumeratedGame::Node child;
          child.parent = node_id;
          child.action_in = {static_cast<uint8_t>(acts[0][i0]),
                             static_cast<uint8_t>(acts[1][i1])};
          child.depth = static_cast<uint8_t>(g.nodes[node_id].depth + 1);
          child.terminal = step.terminal;
          child.step_reward = step.reward;
          child.reward_sum = g.nodes[node_id].reward_sum + step.reward;

          PublicKey child_pub = pub;
          append_public(child_pub, step.pub_obs);
          child.pub = detail::intern_pub(g, child_pub);

          std::array<InfosetKey, 2> child_isets = isets;
          append_infoset(child_isets[0], step.priv_obs[0], step.pub_obs);
          append_infoset(child_isets[1], step.priv_obs[1], step.pub_obs);

          int32_t child_id = static_cast<int32_t>(g.nodes.size());
          g.nodes.push_back(child);
          g.children[g.nodes[node_id].child_begin +
                     static_cast<int64_t>(i0) * acts[1].size() + i1] = child_id;
          expand(child_id, child_state, child_pub, child_isets);
        }
      }
    }
  };

  Expander ex{g, node_budget};
  ex.expand(0, new_game(spec), root_public_key(),
            {root_infoset_key(0), root_infoset_key(1)});
  return g;
}

// Summary used by the enumeration reports. "Choice" infosets are those where
// the owning player actually has a decision to make: at least one nonterminal
// member and two or more legal actions. Forced last-round bids and
// terminal-only observation sequences are excluded from that statistic (they
// still appear in `infosets` and get abstraction entries).
struct PublicTreeStats {
  int64_t num_nodes = 0;
  int64_t num_public_states = 0;
  std::array<int64_t, 2> num_infosets = {0, 0};
  std::array<int, 2> max_infosets = {0, 0};
  std::array<int, 2> max_choice_infosets = {0, 0};
  std::array<int32_t, 2> argmax_pub = {-1, -1};  // public state attaining the choice max
};

inline PublicTreeStats public_tree_stats(const EnumeratedGame& g) {
  PublicTreeStats st;
  st.num_nodes = static_cast<int64_t>(g.nodes.size());
  st.num_public_states = static_cast<int64_t>(g.pub_keys.size());
  for (int p = 0; p < 2; ++p) {
    st.num_infosets[p] = static_cast<int64_t>(g.infosets[p].size());
    for (size_t pub = 0; pub < g.pub_keys.size(); ++pub) {
      const auto& ids = g.pub_infosets[p][pub];
      int total = static_cast<int>(ids.size());
      int choice = 0;
      for (int32_t id : ids) {
        const auto& info = g.infosets[p][id];
        if (info.nonterminal_members > 0 && info.num_actions >= 2) ++choice;
      }
      if (total > st.max_infosets[p]) st.max_infosets[p] = total;
      if (choice > st.max_choice_infosets[p]) {
        st.max_choice_infosets[p] = choice;
        st.argmax_pub[p] = static_cast<int32_t>(pub);
      }
    }
  }
  return st;
}

}  // namespace simsolve

#endif  // SIMSOLVE_ENUMERATE_HPP
