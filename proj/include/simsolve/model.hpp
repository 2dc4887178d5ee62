#ifndef SIMSOLVE_MODEL_HPP
#define SIMSOLVE_MODEL_HPP

#include <cstring>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/enumerate.hpp"
#include "simsolve/policy.hpp"

namespace simsolve {

// ---------------------------------------------------------------------------
// Trajectory sampling

struct TrajectoryStep {
  PublicKey pub;
  std::array<InfosetKey, 2> isets;
  uint8_t a0 = 0, a1 = 0;
  double reward = 0.0;  // player-0 step reward
  bool terminal = false;
  PublicKey next_pub;
  std::array<InfosetKey, 2> next_isets;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

struct SampledBatch {
  GameSpec spec;
  std::vector<Trajectory> trajectories;
};

// Plays the raw rules engine `count` times. Every decision is uniform over
// legal actions with probability eps, otherwise drawn from the profile. Each
// trajectory gets its own derived seed, so results do not depend on how the
// work would be split across workers.
inline SampledBatch sample_trajectories(const GameSpec& spec, const PolicyProfile& profile,
                                        double eps, int count, uint64_t seed) {
  SS_CHECK(eps >= 0.0 && eps <= 1.0, "sample_trajectories: eps out of range");
  SS_CHECK(count >= 1, "sample_trajectories: count must be positive");
  SampledBatch batch{spec, {}};
  batch.trajectories.resize(count);
  int a = spec.num_actions();
  for (int t = 0; t < count; ++t) {
    Rng rng(derive_seed(seed, "traj", t));
    GameState st = new_game(spec);
    PublicKey pub = root_public_key();
    std::array<InfosetKey, 2> isets{root_infoset_key(0), root_infoset_key(1)};
    auto& traj = batch.trajectories[t];
    while (!st.terminal) {
      TrajectoryStep step;
      step.pub = pub;
      step.isets = isets;
      std::array<int, 2> act{};
      for (int p = 0; p < 2; ++p) {
        auto legal = st.legal_actions(p);
        auto dist = policy_on_legal(profile[p], isets[p], legal, a);
        dist = eps_uniform_mix(dist, legal, a, eps);
        act[p] = sample_action(rng, dist, legal);
      }
      StepResult r = st.apply(act[0], act[1]);
      step.a0 = static_cast<uint8_t>(act[0]);
      step.a1 = static_cast<uint8_t>(act[1]);
      step.reward = r.reward;
      step.terminal = r.terminal;
      append_public(pub, r.pub_obs);
      append_infoset(isets[0], static_cast<uint8_t>(act[0]), r.pub_obs);
      append_infoset(isets[1], static_cast<uint8_t>(act[1]), r.pub_obs);
      step.next_pub = pub;
      step.next_isets = isets;
      traj.steps.push_back(std::move(step));
    }
  }
  return batch;
}

// One trajectory per terminal node: the exact transition multiset of the
// whole game, used where sampling noise is unwanted.
inline SampledBatch exhaustive_batch(const EnumeratedGame& g) {
  SampledBatch batch{g.spec, {}};
  for (int32_t id = 0; id < static_cast<int32_t>(g.nodes.size()); ++id) {
    if (!g.nodes[id].terminal) continue;
    std::vector<int32_t> path;  // leaf up to (excluding) root
    for (int32_t cur = id; cur != 0; cur = g.nodes[cur].parent) path.push_back(cur);
    Trajectory traj;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      const auto& child = g.nodes[*it];
      const auto& par = g.nodes[child.parent];
      TrajectoryStep step;
      step.pub = g.pub_keys[par.pub];
      step.isets = {g.infosets[0][par.iset[0]].key, g.infosets[1][par.iset[1]].key};
      step.a0 = child.action_in[0];
      step.a1 = child.action_in[1];
      step.reward = child.step_reward;
      step.terminal = child.terminal;
      step.next_pub = g.pub_keys[child.pub];
      step.next_isets = {g.infosets[0][child.iset[0]].key,
                         g.infosets[1][child.iset[1]].key};
      traj.steps.push_back(std::move(step));
    }
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// The tabular model

namespace detail {

inline std::string pub_act_key(const PublicKey& pub, uint8_t a0, uint8_t a1) {
  std::string k = pub;
  k.push_back(static_cast<char>(a0));
  k.push_back(static_cast<char>(a1));
  return k;
}

inline std::string state_act_key(const PublicKey& pub, int abs0, int abs1, uint8_t a0,
                                 uint8_t a1) {
  SS_CHECK(abs0 >= 0 && abs0 < 65536 && abs1 >= 0 && abs1 < 65536,
           "abstract index out of range");
  std::string k = pub;
  k.push_back(static_cast<char>(abs0 >> 8));
  k.push_back(static_cast<char>(abs0 & 0xff));
  k.push_back(static_cast<char>(abs1 >> 8));
  k.push_back(static_cast<char>(abs1 & 0xff));
  k.push_back(static_cast<char>(a0));
  k.push_back(static_cast<char>(a1));
  return k;
}

inline std::string mask_key(const PublicKey& pub, int player, int abs) {
  SS_CHECK(abs >= 0 && abs < 65536, "abstract index out of range");
  std::string k = pub;
  k.push_back(static_cast<char>(player));
  k.push_back(static_cast<char>(abs >> 8));
  k.push_back(static_cast<char>(abs & 0xff));
  return k;
}

// (abs0', abs1') packed so that numeric order is lexicographic pair order.
inline uint32_t pack_pair(int abs0, int abs1) {
  return (static_cast<uint32_t>(abs0) << 16) | static_cast<uint32_t>(abs1);
}

}  // namespace detail

class ModelHoleError : public std::runtime_error {
 public:
  ModelHoleError(const std::string& table, const std::string& key)
      : std::runtime_error("model hole in " + table + " table at key " + to_hex(key)),
        table_(table),
        key_(key) {}
  const std::string& table() const { return table_; }
  const std::string& key() const { return key_; }

 private:
  std::string table_;
  std::string key_;
};

struct LearnedModel {
  GameSpec spec;

  struct RewardCell {
    double sum = 0.0;
    int64_t count = 0;
    double mean() const { return count > 0 ? sum / count : 0.0; }
  };
  struct TerminalCell {
    int64_t terminal = 0;
    int64_t total = 0;
    bool is_terminal() const { return total > 0 && 2 * terminal >= total; }
    double frequency() const { return total > 0 ? double(terminal) / total : 0.0; }
  };
  struct MaskCell {
    std::vector<int64_t> action_counts;  // one per action id
  };

  std::unordered_map<std::string, PublicKey> public_transition;
  // Ordered successor maps so the argmax scan meets the lexicographic tie rule.
  std::unordered_map<std::string, std::map<uint32_t, int64_t>> infoset_transition;
  std::unordered_map<std::string, RewardCell> reward;
  std::unordered_map<std::string, TerminalCell> terminal;
  std::unordered_map<std::string, MaskCell> legal_mask;
  // Reward marginal over abstract-state pairs, keyed by public state and joint
  // action. Derived from the reward table at fit, merge, and load time; never
  // serialized.
  std::unordered_map<std::string, RewardCell> public_reward;

  // Lookup helpers; null when the key was never observed.
  const PublicKey* find_public_successor(const PublicKey& pub, uint8_t a0,
                                         uint8_t a1) const {
    auto it = public_transition.find(detail::pub_act_key(pub, a0, a1));
    return it == public_transition.end() ? nullptr : &it->second;
  }
  const TerminalCell* find_terminal(const PublicKey& pub, uint8_t a0, uint8_t a1) const {
    auto it = terminal.find(detail::pub_act_key(pub, a0, a1));
    return it == terminal.end() ? nullptr : &it->second;
  }
  const RewardCell* find_reward(const PublicKey& pub, int abs0, int abs1, uint8_t a0,
                                uint8_t a1) const {
    auto it = reward.find(detail::state_act_key(pub, abs0, abs1, a0, a1));
    return it == reward.end() ? nullptr : &it->second;
  }
  const RewardCell* find_public_reward(const PublicKey& pub, uint8_t a0,
                                       uint8_t a1) const {
    auto it = public_reward.find(detail::pub_act_key(pub, a0, a1));
    return it == public_reward.end() ? nullptr : &it->second;
  }
  // Count-argmax successor pair, ties toward the lexicographically smallest.
  bool find_successor_pair(const PublicKey& pub, int abs0, int abs1, uint8_t a0,
                           uint8_t a1, int* out0, int* out1) const {
    auto it = infoset_transition.find(detail::state_act_key(pub, abs0, abs1, a0, a1));
    if (it == infoset_transition.end() || it->second.empty()) return false;
    uint32_t best_pair = 0;
    int64_t best_count = -1;
    for (const auto& [pair, count] : it->second) {
      if (count > best_count) {
        best_count = count;
        best_pair = pair;
      }
    }
    *out0 = static_cast<int>(best_pair >> 16);
    *out1 = static_cast<int>(best_pair & 0xffff);
    return true;
  }
  const MaskCell* find_mask(const PublicKey& pub, int player, int abs) const {
    auto it = legal_mask.find(detail::mask_key(pub, player, abs));
    return it == legal_mask.end() ? nullptr : &it->second;
  }
  std::vector<int> mask_actions(const MaskCell& cell) const {
    std::vector<int> out;
    for (size_t a = 0; a < cell.action_counts.size(); ++a)
      if (cell.action_counts[a] > 0) out.push_back(static_cast<int>(a));
    return out;
  }
};

// Exact tabular fit: public transitions recorded (and cross-checked), infoset
// transitions and terminal flags by count, rewards by running sum, masks by
// per-action observation counts.
inline LearnedModel fit_model(const SampledBatch& batch, const AbstractionMap& map) {
  SS_CHECK(!batch.trajectories.empty(), "fit_model: empty batch");
  LearnedModel m;
  m.spec = batch.spec;
  int a = batch.spec.num_actions();
  for (const auto& traj : batch.trajectories) {
    for (const auto& step : traj.steps) {
      int abs0 = map.lookup(0, step.isets[0]);
      int abs1 = map.lookup(1, step.isets[1]);
      int nabs0 = map.lookup(0, step.next_isets[0]);
      int nabs1 = map.lookup(1, step.next_isets[1]);

      auto pk = detail::pub_act_key(step.pub, step.a0, step.a1);
      auto [pit, inserted] = m.public_transition.emplace(pk, step.next_pub);
      SS_CHECK(inserted || pit->second == step.next_pub,
               "conflicting public transitions for one key");

      auto sk = detail::state_act_key(step.pub, abs0, abs1, step.a0, step.a1);
      m.infoset_transition[sk][detail::pack_pair(nabs0, nabs1)] += 1;
      auto& rc = m.reward[sk];
      rc.sum += step.reward;
      rc.count += 1;
      auto& prc = m.public_reward[pk];
      prc.sum += step.reward;
      prc.count += 1;

      auto& tc = m.terminal[pk];
      tc.total += 1;
      tc.terminal += step.terminal ? 1 : 0;

      for (int p = 0; p < 2; ++p) {
        auto& mc = m.legal_mask[detail::mask_key(step.pub, p, p == 0 ? abs0 : abs1)];
        if (mc.action_counts.empty()) mc.action_counts.assign(a, 0);
        mc.action_counts[p == 0 ? step.a0 : step.a1] += 1;
      }
    }
  }
  return m;
}

// Count-wise sum of two fits over the same game. Conflicting deterministic
// tables signal that the inputs came from different games.
inline LearnedModel merge_models(const LearnedModel& a, const LearnedModel& b) {
  SS_CHECK(a.spec.kind == b.spec.kind && a.spec.goof_n == b.spec.goof_n &&
               a.spec.oz_k == b.spec.oz_k && a.spec.oz_n == b.spec.oz_n,
           "merge_models: different games");
  LearnedModel m = a;
  for (const auto& [k, v] : b.public_transition) {
    auto [it, inserted] = m.public_transition.emplace(k, v);
    SS_CHECK(inserted || it->second == v, "merge_models: conflicting public transitions");
  }
  for (const auto& [k, succ] : b.infoset_transition)
    for (const auto& [pair, count] : succ) m.infoset_transition[k][pair] += count;
  for (const auto& [k, v] : b.reward) {
    auto& cell = m.reward[k];
    cell.sum += v.sum;
    cell.count += v.count;
  }
  for (const auto& [k, v] : b.public_reward) {
    auto& cell = m.public_reward[k];
    cell.sum += v.sum;
    cell.count += v.count;
  }
  for (const auto& [k, v] : b.terminal) {
    auto& cell = m.terminal[k];
    cell.terminal += v.terminal;
    cell.total += v.total;
  }
  for (const auto& [k, v] : b.legal_mask) {
    auto& cell = m.legal_mask[k];
    if (cell.action_counts.empty()) cell.action_counts.assign(v.action_counts.size(), 0);
    SS_CHECK(cell.action_counts.size() == v.action_counts.size(),
             "merge_models: mask width mismatch");
    for (size_t i = 0; i < v.action_counts.size(); ++i)
      cell.action_counts[i] += v.action_counts[i];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Unrolling

struct UnrollStep {
  PublicKey pub;
  int abs0 = 0, abs1 = 0;
  double reward = 0.0;  // reward received entering this state
  bool terminal = false;
};

// Deterministic rollout through the tables, stopping at the first terminal.
// The first element is the start state itself.
inline std::vector<UnrollStep> unroll(const LearnedModel& m, const PublicKey& start,
                                      int abs0, int abs1,
                                      const std::vector<std::array<uint8_t, 2>>& actions) {
  std::vector<UnrollStep> out;
  out.push_back({start, abs0, abs1, 0.0, false});
  PublicKey pub = start;
  for (const auto& act : actions) {
    auto pk = detail::pub_act_key(pub, act[0], act[1]);
    auto pit = m.public_transition.find(pk);
    if (pit == m.public_transition.end()) throw ModelHoleError("public-transition", pk);
    auto tit = m.terminal.find(pk);
    if (tit == m.terminal.end()) throw ModelHoleError("terminal", pk);
    auto sk = detail::state_act_key(pub, abs0, abs1, act[0], act[1]);
    auto rit = m.reward.find(sk);
    if (rit == m.reward.end()) throw ModelHoleError("reward", sk);
    int nabs0 = 0, nabs1 = 0;
    if (!m.find_successor_pair(pub, abs0, abs1, act[0], act[1], &nabs0, &nabs1))
      throw ModelHoleError("infoset-transition", sk);
    UnrollStep step;
    step.pub = pit->second;
    step.abs0 = nabs0;
    step.abs1 = nabs1;
    step.reward = rit->second.mean();
    step.terminal = tit->second.is_terminal();
    out.push_back(step);
    if (step.terminal) break;
    pub = pit->second;
    abs0 = nabs0;
    abs1 = nabs1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fidelity against the true game

struct FidelityReport {
  double transition_accuracy = 0.0;  // argmax successor pair matches the game
  double public_accuracy = 0.0;      // public successor matches the game
  double reward_mae = 0.0;
  double mask_exactness = 0.0;  // infoset masks equal to the true legal set
  double terminal_accuracy = 0.0;
  int64_t covered = 0;  // (state, joint action) pairs with full table coverage
  int64_t holes = 0;    // pairs missing from at least one table

  std::string summary() const {
    return "transition=" + fmt_double(transition_accuracy) +
           " public=" + fmt_double(public_accuracy) +
           " reward_mae=" + fmt_double(reward_mae) +
           " mask=" + fmt_double(mask_exactness) +
           " terminal=" + fmt_double(terminal_accuracy) +
           " covered=" + std::to_string(covered) + " holes=" + std::to_string(holes);
  }
};

// Exhaustive comparison of the tables against every reachable (state, joint
// action) of the real game. Holes are excluded from the accuracy denominators
// and reported on their own.
inline FidelityReport model_fidelity_report(const LearnedModel& m, const EnumeratedGame& g,
                                            const AbstractionMap& map) {
  FidelityReport rep;
  int64_t trans_hit = 0, pub_hit = 0, term_hit = 0;
  double abs_err = 0.0;
  int64_t mask_total = 0, mask_hit = 0;

  for (int32_t id = 0; id < static_cast<int32_t>(g.nodes.size()); ++id) {
    const auto& n = g.nodes[id];
    if (n.terminal) continue;
    const auto& pub = g.pub_keys[n.pub];
    int abs0 = map.lookup(0, g.infosets[0][n.iset[0]].key);
    int abs1 = map.lookup(1, g.infosets[1][n.iset[1]].key);
    for (int i = 0; i < n.na[0]; ++i) {
      for (int j = 0; j < n.na[1]; ++j) {
        uint8_t a0 = g.legal0(n)[i], a1 = g.legal1(n)[j];
        const auto& child = g.nodes[g.child(n, i, j)];
        const PublicKey* mpub = m.find_public_successor(pub, a0, a1);
        const auto* mterm = m.find_terminal(pub, a0, a1);
        const auto* mrew = m.find_reward(pub, abs0, abs1, a0, a1);
        int nabs0 = 0, nabs1 = 0;
        bool have_pair = m.find_successor_pair(pub, abs0, abs1, a0, a1, &nabs0, &nabs1);
        if (!mpub || !mterm || !mrew || !have_pair) {
          ++rep.holes;
          continue;
        }
        ++rep.covered;
        if (*mpub == g.pub_keys[child.pub]) ++pub_hit;
        if (mterm->is_terminal() == child.terminal) ++term_hit;
        abs_err += std::abs(mrew->mean() - child.step_reward);
        int tabs0 = map.lookup(0, g.infosets[0][child.iset[0]].key);
        int tabs1 = map.lookup(1, g.infosets[1][child.iset[1]].key);
        if (nabs0 == tabs0 && nabs1 == tabs1) ++trans_hit;
      }
    }
  }
  if (rep.covered > 0) {
    rep.transition_accuracy = double(trans_hit) / rep.covered;
    rep.public_accuracy = double(pub_hit) / rep.covered;
    rep.terminal_accuracy = double(term_hit) / rep.covered;
    rep.reward_mae = abs_err / rep.covered;
  }

  for (int p = 0; p < 2; ++p) {
    for (const auto& info : g.infosets[p]) {
      if (info.num_actions == 0) continue;
      ++mask_total;
      const auto* cell = m.find_mask(g.pub_keys[info.pub], p, map.lookup(p, info.key));
      if (!cell) continue;
      auto have = m.mask_actions(*cell);
      if (have == infoset_actions(g, p, info)) ++mask_hit;
    }
  }
  rep.mask_exactness = mask_total > 0 ? double(mask_hit) / mask_total : 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization: versioned binary with counts, deterministic byte order.

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}
inline void put_u64(std::string& out, uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}
inline void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}
inline void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;
  void need(size_t n) const { SS_CHECK(pos + n <= buf.size(), "truncated model data"); }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

template <typename M>
std::vector<typename M::const_iterator> sorted_entries(const M& m) {
  std::vector<typename M::const_iterator> its;
  its.reserve(m.size());
  for (auto it = m.begin(); it != m.end(); ++it) its.push_back(it);
  std::sort(its.begin(), its.end(),
            [](const auto& a, const auto& b) { return a->first < b->first; });
  return its;
}

}  // namespace detail

inline std::string model_to_bytes(const LearnedModel& m) {
  std::string out = "SSM1";
  out.push_back(m.spec.kind == GameKind::kGoofspiel ? 'G' : 'O');
  detail::put_u32(out, static_cast<uint32_t>(m.spec.goof_n));
  detail::put_u32(out, static_cast<uint32_t>(m.spec.oz_k));
  detail::put_u32(out, static_cast<uint32_t>(m.spec.oz_n));

  detail::put_u64(out, m.public_transition.size());
  for (auto it : detail::sorted_entries(m.public_transition)) {
    detail::put_str(out, it->first);
    detail::put_str(out, it->second);
  }
  detail::put_u64(out, m.infoset_transition.size());
  for (auto it : detail::sorted_entries(m.infoset_transition)) {
    detail::put_str(out, it->first);
    detail::put_u32(out, static_cast<uint32_t>(it->second.size()));
    for (const auto& [pair, count] : it->second) {
      detail::put_u32(out, pair);
      detail::put_u64(out, static_cast<uint64_t>(count));
    }
  }
  detail::put_u64(out, m.reward.size());
  for (auto it : detail::sorted_entries(m.reward)) {
    detail::put_str(out, it->first);
    detail::put_f64(out, it->second.sum);
    detail::put_u64(out, static_cast<uint64_t>(it->second.count));
  }
  detail::put_u64(out, m.terminal.size());
  for (auto it : detail::sorted_entries(m.terminal)) {
    detail::put_str(out, it->first);
    detail::put_u64(out, static_cast<uint64_t>(it->second.terminal));
    detail::put_u64(out, static_cast<uint64_t>(it->second.total));
  }
  detail::put_u64(out, m.legal_mask.size());
  for (auto it : detail::sorted_entries(m.legal_mask)) {
    detail::put_str(out, it->first);
    detail::put_u32(out, static_cast<uint32_t>(it->second.action_counts.size()));
    for (int64_t c : it->second.action_counts)
      detail::put_u64(out, static_cast<uint64_t>(c));
  }
  return out;
}

inline LearnedModel model_from_bytes(const std::string& bytes) {
  detail::ByteReader r{bytes};
  SS_CHECK(bytes.size() >= 5 && bytes.compare(0, 4, "SSM1") == 0, "bad model header");
  r.pos = 4;
  LearnedModel m;
  char kind = bytes[r.pos++];
  SS_CHECK(kind == 'G' || kind == 'O', "bad model game kind");
  m.spec.kind = kind == 'G' ? GameKind::kGoofspiel : GameKind::kOshiZumo;
  m.spec.goof_n = static_cast<int>(r.u32());
  m.spec.oz_k = static_cast<int>(r.u32());
  m.spec.oz_n = static_cast<int>(r.u32());

  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto k = r.str();
    m.public_transition[k] = r.str();
  }
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto k = r.str();
    auto& succ = m.infoset_transition[k];
    for (uint32_t j = 0, np = r.u32(); j < np; ++j) {
      uint32_t pair = r.u32();
      succ[pair] = static_cast<int64_t>(r.u64());
    }
  }
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto k = r.str();
    auto& cell = m.reward[k];
    cell.sum = r.f64();
    cell.count = static_cast<int64_t>(r.u64());
    SS_CHECK(k.size() >= 6, "reward key too short");
    auto pk = k.substr(0, k.size() - 6);
    pk.push_back(k[k.size() - 2]);
    pk.push_back(k[k.size() - 1]);
    auto& pcell = m.public_reward[pk];
    pcell.sum += cell.sum;
    pcell.count += cell.count;
  }
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto k = r.str();
    auto& cell = m.terminal[k];
    cell.terminal = static_cast<int64_t>(r.u64());
    cell.total = static_cast<int64_t>(r.u64());
  }
  for (uint64_t i = 0, n = r.u64(); i < n; ++i) {
    auto k = r.str();
    auto& cell = m.legal_mask[k];
    uint32_t na = r.u32();
    cell.action_counts.resize(na);
    for (uint32_t j = 0; j < na; ++j)
      cell.action_counts[j] = static_cast<int64_t>(r.u64());
  }
  SS_CHECK(r.pos == bytes.size(), "trailing bytes after model data");
  return m;
}

}  // namespace simsolve

#endif  // SIMSOLVE_MODEL_HPP
