#ifndef SIMSOLVE_RESOLVING_HPP
#define SIMSOLVE_RESOLVING_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "simsolve/bundle.hpp"
#include "simsolve/depth_limited.hpp"

namespace simsolve {

// Key for the opponent's terminate-or-follow decision in a resolve gadget.
// Lives in its own tag namespace so it can never collide with real or
// abstract infoset keys.
inline InfosetKey gadget_iset_key(int player, const PublicKey& pub, int abs) {
  SS_CHECK(abs >= 0 && abs < 65536, "abstract index out of range");
  std::string k(1, static_cast<char>(0x40 + player));
  k += pub;
  k.push_back(static_cast<char>(abs >> 8));
  k.push_back(static_cast<char>(abs & 0xff));
  return k;
}

// ---------------------------------------------------------------------------
// Gadget construction

// One resolve step at a public state. The opponent may take the value it was
// promised at this state (terminate, action 0) or keep playing into the
// depth-limited subgame (follow, action 1). Solving this choice keeps the
// re-solved strategy safe against shifts in the opponent's range.
struct GadgetSpec {
  PublicKey pub;
  int resolver = 0;
  std::vector<double> own_reach;  // resolver reach weight per abstract id
  std::vector<double> opp_reach;  // opponent reach estimate per abstract id
  std::vector<double> opp_cfv;    // opponent value promise per abstract id
  // Share of the root distribution spread evenly over every opponent id the
  // model knows at this state. The estimate can hit exact zero for ids a best
  // responder is free to play into, so each one must keep solver pressure.
  double opp_mix = 0.25;
  int depth = 1;
  const LearnedModel* model = nullptr;
  const ValueTable* values = nullptr;
};

inline DepthLimitedView build_gadget(const GadgetSpec& spec) {
  SS_CHECK(spec.model != nullptr && spec.values != nullptr,
           "build_gadget: model and values are required");
  SS_CHECK(spec.depth >= 1, "build_gadget: depth must be at least 1");
  SS_CHECK(spec.resolver == 0 || spec.resolver == 1,
           "build_gadget: resolver must be player 0 or 1");
  SS_CHECK(spec.opp_cfv.empty() || spec.opp_cfv.size() == spec.opp_reach.size(),
           "build_gadget: value promises do not match the opponent range");
  int t = spec.values->T;
  int alphabet = spec.model->spec.num_actions();
  int me = spec.resolver;
  int opp = 1 - me;

  std::vector<int> own_ids;
  double own_total = 0.0;
  for (size_t i = 0; i < spec.own_reach.size(); ++i) {
    SS_CHECK(spec.own_reach[i] >= 0.0, "build_gadget: negative reach weight");
    if (spec.own_reach[i] > 0.0) {
      own_ids.push_back(static_cast<int>(i));
      own_total += spec.own_reach[i];
    }
  }
  SS_CHECK(!own_ids.empty(), "build_gadget: no own abstract id has positive reach");

  // Every opponent id the model knows at this state takes part in the solve,
  // weighted by the reach estimate mixed with a uniform floor.
  SS_CHECK(spec.opp_mix >= 0.0 && spec.opp_mix <= 1.0,
           "build_gadget: opponent mix must lie in [0, 1]");
  std::vector<int> opp_ids;
  double est_total = 0.0;
  for (size_t j = 0; j < spec.opp_reach.size(); ++j) {
    SS_CHECK(spec.opp_reach[j] >= 0.0, "build_gadget: negative reach weight");
    if (spec.model->find_mask(spec.pub, opp, static_cast<int>(j)))
      opp_ids.push_back(static_cast<int>(j));
    est_total += spec.opp_reach[j];
  }
  if (opp_ids.empty()) {
    // The model has no opponent infosets here at all; cover every id so the
    // solve stays defined (the expander reports the holes).
    for (size_t j = 0; j < spec.opp_reach.size(); ++j)
      opp_ids.push_back(static_cast<int>(j));
  }
  SS_CHECK(!opp_ids.empty(), "build_gadget: opponent range is empty");
  double mix = est_total > 0.0 ? spec.opp_mix : 1.0;
  std::vector<double> opp_w(opp_ids.size(), 0.0);
  for (size_t k = 0; k < opp_ids.size(); ++k) {
    double est = est_total > 0.0 ? spec.opp_reach[opp_ids[k]] / est_total : 0.0;
    opp_w[k] = (1.0 - mix) * est + mix / static_cast<double>(opp_ids.size());
  }
  double opp_total = 0.0;
  for (double w : opp_w) opp_total += w;

  DepthLimitedView out;
  TreeViewBuilder b(std::max({alphabet, t, 2}));
  int32_t root = b.add_weighted(static_cast<int>(opp_ids.size()));
  detail::SubgameExpander ex(b, *spec.model, *spec.values, spec.depth);
  for (size_t k = 0; k < opp_ids.size(); ++k) {
    int j = opp_ids[k];
    std::array<int32_t, 2> isets{-1, -1};
    std::array<std::vector<int>, 2> acts;
    isets[opp] = b.intern_infoset(opp, gadget_iset_key(opp, spec.pub, j), {0, 1});
    acts[opp] = {0, 1};
    int32_t tf = b.add_decision(isets, acts);

    // The view scores everything for player 0, so flip the promise when the
    // opponent is player 1. The stored double is paid out unchanged.
    double cfv = spec.opp_cfv.empty() ? 0.0 : spec.opp_cfv[j];
    int32_t term = b.add_terminal(opp == 0 ? cfv : -cfv);

    int32_t follow = b.add_weighted(static_cast<int>(own_ids.size()));
    for (size_t q = 0; q < own_ids.size(); ++q) {
      int i = own_ids[q];
      int a0 = me == 0 ? i : j;
      int a1 = me == 0 ? j : i;
      int32_t sub = ex.expand(spec.pub, a0, a1, 0, 0.0);
      b.set_weighted_child(follow, static_cast<int>(q), sub,
                           spec.own_reach[i] / own_total);
    }

    if (opp == 0) {
      b.set_child(tf, 0, 0, term);
      b.set_child(tf, 1, 0, follow);
    } else {
      b.set_child(tf, 0, 0, term);
      b.set_child(tf, 0, 1, follow);
    }
    b.set_weighted_child(root, static_cast<int>(k), tf, opp_w[k] / opp_total);
  }
  if (ex.counters.decision_nodes == 0)
    throw ModelHoleError("subgame-root", spec.pub);
  out.counters = ex.counters;
  int64_t l = static_cast<int64_t>(
      std::max(spec.own_reach.size(), spec.opp_reach.size()));
  detail::check_subgame_bounds(out.counters, l, alphabet, spec.depth, t,
                               &out.node_bound, &out.terminal_bound);
  out.view = b.take();
  return out;
}

// ---------------------------------------------------------------------------
// Solved-state bookkeeping

// What a resolve leaves behind: both players' play at the solved public state
// plus the counterfactual values needed to price the next gadget.
struct SolvedState {
  std::array<std::unordered_map<int, std::vector<double>>, 2> policy;
  CfValues cfvs;
  double root_value = 0.0;
};

class SolveCache {
 public:
  explicit SolveCache(size_t capacity = size_t{1} << 16) : capacity_(capacity) {}

  std::shared_ptr<const SolvedState> find(const std::string& key) {
    auto it = table_.find(key);
    if (it == table_.end()) {
      ++misses_;
      return nullptr;
    }
    ++hits_;
    return it->second;
  }

  void put(const std::string& key, std::shared_ptr<const SolvedState> value) {
    if (table_.size() >= capacity_) table_.clear();
    table_[key] = std::move(value);
  }

  int64_t hits() const { return hits_; }
  int64_t misses() const { return misses_; }
  size_t size() const { return table_.size(); }

 private:
  size_t capacity_;
  std::unordered_map<std::string, std::shared_ptr<const SolvedState>> table_;
  int64_t hits_ = 0;
  int64_t misses_ = 0;
};

struct ResolveConfig {
  int depth = 1;
  int cfr_iterations = 1000;
  double opp_mix = 0.25;  // uniform share in the gadget root distribution
};

namespace detail {

// Restricts a dense distribution to the legal set and renormalizes; uniform
// when no mass overlaps.
inline std::vector<double> lift_onto_legal(const std::vector<double>& dist,
                                           const std::vector<int>& legal,
                                           int num_actions) {
  std::vector<double> out(num_actions, 0.0);
  double total = 0.0;
  for (int a : legal) {
    double w = a < static_cast<int>(dist.size()) ? dist[a] : 0.0;
    if (w > 0.0) {
      out[a] = w;
      total += w;
    }
  }
  if (total <= 0.0) return uniform_over(legal, num_actions);
  for (int a : legal) out[a] /= total;
  return out;
}

// Pushes one player's reach estimate from `pub` to the public successor
// `next`, marginalizing over the other player's range. Every distinct
// (id, action, successor id) edge contributes reach * policy once, no matter
// how many opponent pairings exhibit it.
inline std::vector<double> push_reach(
    const LearnedModel& model, const PublicKey& pub, const PublicKey& next,
    int mover, const std::vector<double>& reach,
    const std::unordered_map<int, std::vector<double>>& policy,
    const std::vector<double>& other_reach, size_t out_size) {
  std::vector<double> out(out_size, 0.0);
  int other = 1 - mover;

  std::vector<int> others;
  for (size_t j = 0; j < other_reach.size(); ++j)
    if (other_reach[j] > 0.0) others.push_back(static_cast<int>(j));
  if (others.empty()) {
    for (size_t j = 0; j < other_reach.size(); ++j)
      if (model.find_mask(pub, other, static_cast<int>(j)))
        others.push_back(static_cast<int>(j));
  }

  std::unordered_set<int64_t> seen;
  for (size_t i = 0; i < reach.size(); ++i) {
    if (reach[i] <= 0.0) continue;
    const auto* mc = model.find_mask(pub, mover, static_cast<int>(i));
    if (!mc) continue;
    auto acts = model.mask_actions(*mc);
    auto pit = policy.find(static_cast<int>(i));
    for (int a : acts) {
      double p;
      if (pit == policy.end()) {
        p = 1.0 / static_cast<double>(acts.size());
      } else {
        p = a < static_cast<int>(pit->second.size()) ? pit->second[a] : 0.0;
        if (p <= 0.0) continue;
      }
      for (int j : others) {
        const auto* oc = model.find_mask(pub, other, j);
        if (!oc) continue;
        for (int bact : model.mask_actions(*oc)) {
          uint8_t a0 = static_cast<uint8_t>(mover == 0 ? a : bact);
          uint8_t a1 = static_cast<uint8_t>(mover == 0 ? bact : a);
          const PublicKey* succ = model.find_public_successor(pub, a0, a1);
          if (!succ || *succ != next) continue;
          const auto* tc = model.find_terminal(pub, a0, a1);
          if (tc && tc->is_terminal()) continue;
          int n0 = 0, n1 = 0;
          int abs0 = mover == 0 ? static_cast<int>(i) : j;
          int abs1 = mover == 0 ? j : static_cast<int>(i);
          if (!model.find_successor_pair(pub, abs0, abs1, a0, a1, &n0, &n1))
            continue;
          int ni = mover == 0 ? n0 : n1;
          if (ni < 0 || ni >= static_cast<int>(out_size)) continue;
          int64_t edge = (static_cast<int64_t>(i) << 24) |
                         (static_cast<int64_t>(a) << 16) | ni;
          if (seen.insert(edge).second) out[ni] += reach[i] * p;
        }
      }
    }
  }
  return out;
}

// Count-weighted mean reward of the public transition from `pub` into `next`,
// marginalized over joint actions. Zero when the model never saw it.
inline double public_step_reward(const LearnedModel& model, const PublicKey& pub,
                                 const PublicKey& next) {
  int a = model.spec.num_actions();
  double sum = 0.0;
  int64_t count = 0;
  for (int a0 = 0; a0 < a; ++a0) {
    for (int a1 = 0; a1 < a; ++a1) {
      const auto* succ = model.find_public_successor(pub, static_cast<uint8_t>(a0),
                                                     static_cast<uint8_t>(a1));
      if (succ == nullptr || *succ != next) continue;
      const auto* cell = model.find_public_reward(pub, static_cast<uint8_t>(a0),
                                                  static_cast<uint8_t>(a1));
      if (cell == nullptr) continue;
      sum += cell->sum;
      count += cell->count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

// Normalized opponent values at `next` read from the previous solve. That
// solve measured utility from its own root, so the reward of the public step
// into `next` is removed to express each promise as a continuation value from
// `next`. Ids the previous subgame never placed at `next` are left unknown;
// those with a positive reach estimate are counted as missing.
inline std::vector<double> opp_promises(const CfValues& cfvs, int opp,
                                        const PublicKey& next, double step_reward,
                                        const std::vector<double>& opp_reach,
                                        std::vector<char>* known,
                                        int64_t* missing) {
  std::vector<double> out(opp_reach.size(), 0.0);
  known->assign(opp_reach.size(), 0);
  double shift = opp == 0 ? step_reward : -step_reward;
  for (size_t j = 0; j < opp_reach.size(); ++j) {
    auto key = abstract_iset_key(opp, next, static_cast<int>(j));
    auto it = cfvs.table[opp].find(key);
    if (it == cfvs.table[opp].end() || it->second.reach <= 0.0) {
      if (missing && opp_reach[j] > 0.0) ++*missing;
      continue;
    }
    out[j] = it->second.value / it->second.reach - shift;
    (*known)[j] = 1;
  }
  return out;
}

// Prices the unknown promises with the blueprint continuation value against
// the resolver's normalized range, read from the value table. A zero promise
// would invite the opponent into exactly those ids.
inline void fill_missing_promises(const ValueTable& values, const PublicKey& pub,
                                  int opp, const std::vector<double>& own_reach,
                                  const std::vector<char>& known,
                                  std::vector<double>* promises) {
  double own_total = 0.0;
  for (double w : own_reach) own_total += w;
  if (own_total <= 0.0) return;
  for (size_t j = 0; j < promises->size(); ++j) {
    if (known[j]) continue;
    double acc = 0.0;
    for (size_t i = 0; i < own_reach.size(); ++i) {
      if (own_reach[i] <= 0.0) continue;
      int abs0 = opp == 0 ? static_cast<int>(j) : static_cast<int>(i);
      int abs1 = opp == 0 ? static_cast<int>(i) : static_cast<int>(j);
      auto lk = value_lookup(values, pub, abs0, abs1);
      double v0 = lk.matrix.empty() ? 0.0 : lk.matrix[0];
      acc += own_reach[i] / own_total * (opp == 0 ? v0 : -v0);
    }
    (*promises)[j] = acc;
  }
}

inline void key_doubles(std::string& out, const std::vector<double>& v) {
  put_u32(out, static_cast<uint32_t>(v.size()));
  for (double x : v) put_f64(out, x);
}

inline std::shared_ptr<const SolvedState> state_from(const SolveResult& res,
                                                     const PublicKey& pub) {
  auto st = std::make_shared<SolvedState>();
  st->policy[0] = root_abstract_policy(res, 0, pub);
  st->policy[1] = root_abstract_policy(res, 1, pub);
  st->cfvs = res.cfvs;
  st->root_value = res.root_value;
  return st;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Match agents

// Per-episode protocol: begin each episode with start_episode, then for every
// joint step the driver calls act on the player's current information set and,
// when the episode continues, observe with the public signal and the action
// the agent itself took.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void start_episode(int player, uint64_t seed) = 0;
  virtual int act(const InfosetKey& iset, const std::vector<int>& legal) = 0;
  virtual void observe(uint8_t pub_obs, uint8_t own_action) {
    (void)pub_obs;
    (void)own_action;
  }
  // Episodes that lost coverage somewhere and finished on the blueprint.
  virtual int64_t fallback_episodes() const { return 0; }
};

class UniformAgent : public Agent {
 public:
  std::string name() const override { return "uniform"; }
  void start_episode(int, uint64_t seed) override { rng_.seed(seed); }
  int act(const InfosetKey&, const std::vector<int>& legal) override {
    SS_CHECK(!legal.empty(), "act: no legal actions");
    return legal[uniform_index(rng_, static_cast<int>(legal.size()))];
  }

 private:
  Rng rng_{1};
};

class BlueprintAgent : public Agent {
 public:
  BlueprintAgent(const PolicyProfile& profile, int num_actions)
      : profile_(&profile), num_actions_(num_actions) {}
  std::string name() const override { return "blueprint"; }
  void start_episode(int player, uint64_t seed) override {
    player_ = player;
    rng_.seed(seed);
  }
  int act(const InfosetKey& iset, const std::vector<int>& legal) override {
    auto dist = policy_on_legal((*profile_)[player_], iset, legal, num_actions_);
    return sample_action(rng_, dist, legal);
  }

 private:
  const PolicyProfile* profile_;
  int num_actions_;
  int player_ = 0;
  Rng rng_{1};
};

// Continual resolving at play time. Keeps reach estimates over abstract ids
// for both players, re-solves a gadget after every public step, and falls
// back to the blueprint for the rest of the episode if the model loses
// coverage of the play path.
class ResolverAgent : public Agent {
 public:
  ResolverAgent(const Bundle& bundle, const ResolveConfig& cfg,
                std::shared_ptr<SolveCache> cache = nullptr)
      : bundle_(&bundle),
        cfg_(cfg),
        cache_(cache ? std::move(cache) : std::make_shared<SolveCache>()) {
    num_ids_ = static_cast<size_t>(bundle_->abstraction.num_clusters);
    num_actions_ = bundle_->spec.num_actions();
  }

  std::string name() const override { return "resolver"; }

  void start_episode(int player, uint64_t seed) override {
    me_ = player;
    rng_.seed(seed);
    pub_ = root_public_key();
    iset_ = root_infoset_key(me_);
    fallback_ = false;
    last_dist_.clear();
    realized_reach_ = 1.0;
    own_reach_.assign(num_ids_, 0.0);
    opp_reach_.assign(num_ids_, 0.0);
    solved_.reset();

    const int* mine = bundle_->abstraction.find(me_, iset_);
    const int* theirs = bundle_->abstraction.find(1 - me_, root_infoset_key(1 - me_));
    if (!mine || !theirs) {
      enter_fallback();
      return;
    }
    own_reach_[static_cast<size_t>(*mine)] = 1.0;
    opp_reach_[static_cast<size_t>(*theirs)] = 1.0;
    solve_root();
  }

  int act(const InfosetKey& iset, const std::vector<int>& legal) override {
    SS_CHECK(!legal.empty(), "act: no legal actions");
    iset_ = iset;
    std::vector<double> dist;
    if (!fallback_ && !solved_) enter_fallback();
    if (!fallback_) {
      const int* mine = bundle_->abstraction.find(me_, iset_);
      if (!mine) {
        enter_fallback();
      } else {
        auto it = solved_->policy[me_].find(*mine);
        dist = it == solved_->policy[me_].end()
                   ? uniform_over(legal, num_actions_)
                   : detail::lift_onto_legal(it->second, legal, num_actions_);
      }
    }
    if (fallback_)
      dist = policy_on_legal(bundle_->blueprint[me_], iset_, legal, num_actions_);
    last_dist_ = dist;
    return sample_action(rng_, dist, legal);
  }

  void observe(uint8_t pub_obs, uint8_t own_action) override {
    if (!last_dist_.empty()) realized_reach_ *= last_dist_[own_action];
    append_infoset(iset_, own_action, pub_obs);
    PublicKey next = pub_;
    append_public(next, pub_obs);
    if (fallback_) {
      pub_ = next;
      return;
    }

    auto own_next =
        detail::push_reach(bundle_->model, pub_, next, me_, own_reach_,
                           solved_->policy[me_], opp_reach_, num_ids_);
    auto opp_next =
        detail::push_reach(bundle_->model, pub_, next, 1 - me_, opp_reach_,
                           solved_->policy[1 - me_], own_reach_, num_ids_);

    const int* mine = bundle_->abstraction.find(me_, iset_);
    if (!mine) {
      pub_ = next;
      enter_fallback();
      return;
    }
    // The id actually reached must stay in range even if the model dropped
    // the edge that got us here.
    if (own_next[static_cast<size_t>(*mine)] <= 0.0) {
      own_next[static_cast<size_t>(*mine)] = std::max(realized_reach_, 1e-12);
      ++reach_repairs_;
    }

    int64_t missing = 0;
    std::vector<char> known;
    double step0 = detail::public_step_reward(bundle_->model, pub_, next);
    auto promises = detail::opp_promises(solved_->cfvs, 1 - me_, next, step0,
                                         opp_next, &known, &missing);
    detail::fill_missing_promises(bundle_->values, next, 1 - me_, own_next,
                                  known, &promises);
    missing_promises_ += missing;

    pub_ = next;
    own_reach_ = std::move(own_next);
    opp_reach_ = std::move(opp_next);
    solve_gadget(promises);
  }

  int64_t fallback_episodes() const override { return fallback_episodes_; }
  int64_t reach_repairs() const { return reach_repairs_; }
  int64_t missing_promises() const { return missing_promises_; }
  double realized_reach() const { return realized_reach_; }
  const std::vector<double>& own_reach() const { return own_reach_; }
  const std::vector<double>& opp_reach() const { return opp_reach_; }
  bool in_fallback() const { return fallback_; }
  const SolveCache& cache() const { return *cache_; }

 private:
  void enter_fallback() {
    if (!fallback_) {
      fallback_ = true;
      ++fallback_episodes_;
    }
    solved_.reset();
  }

  std::string cache_key(char tag, const std::vector<double>& promises) const {
    std::string key(1, tag);
    key.push_back(static_cast<char>('0' + me_));
    detail::put_u32(key, static_cast<uint32_t>(cfg_.depth));
    detail::put_u32(key, static_cast<uint32_t>(cfg_.cfr_iterations));
    detail::put_f64(key, cfg_.opp_mix);
    detail::put_str(key, pub_);
    detail::key_doubles(key, own_reach_);
    detail::key_doubles(key, opp_reach_);
    detail::key_doubles(key, promises);
    return key;
  }

  void solve_root() {
    auto key = cache_key('R', {});
    if (auto hit = cache_->find(key)) {
      solved_ = std::move(hit);
      return;
    }
    SubgameSpec ss;
    ss.root_pub = pub_;
    ss.reach[me_] = own_reach_;
    ss.reach[1 - me_] = opp_reach_;
    ss.depth = cfg_.depth;
    ss.model = &bundle_->model;
    ss.values = &bundle_->values;
    try {
      auto dl = build_subgame(ss);
      auto res = solve_subgame(dl, cfg_.cfr_iterations);
      auto st = detail::state_from(res, pub_);
      cache_->put(key, st);
      solved_ = std::move(st);
    } catch (const ModelHoleError&) {
      enter_fallback();
    }
  }

  void solve_gadget(const std::vector<double>& promises) {
    auto key = cache_key('G', promises);
    if (auto hit = cache_->find(key)) {
      solved_ = std::move(hit);
      return;
    }
    GadgetSpec gs;
    gs.pub = pub_;
    gs.resolver = me_;
    gs.own_reach = own_reach_;
    gs.opp_reach = opp_reach_;
    gs.opp_cfv = promises;
    gs.opp_mix = cfg_.opp_mix;
    gs.depth = cfg_.depth;
    gs.model = &bundle_->model;
    gs.values = &bundle_->values;
    try {
      auto dl = build_gadget(gs);
      auto res = solve_subgame(dl, cfg_.cfr_iterations);
      auto st = detail::state_from(res, pub_);
      cache_->put(key, st);
      solved_ = std::move(st);
    } catch (const ModelHoleError&) {
      enter_fallback();
    }
  }

  const Bundle* bundle_;
  ResolveConfig cfg_;
  std::shared_ptr<SolveCache> cache_;
  size_t num_ids_ = 0;
  int num_actions_ = 0;

  int me_ = 0;
  Rng rng_{1};
  PublicKey pub_;
  InfosetKey iset_;
  std::vector<double> own_reach_;
  std::vector<double> opp_reach_;
  std::vector<double> last_dist_;
  double realized_reach_ = 1.0;
  std::shared_ptr<const SolvedState> solved_;
  bool fallback_ = false;
  int64_t fallback_episodes_ = 0;
  int64_t reach_repairs_ = 0;
  int64_t missing_promises_ = 0;
};

// ---------------------------------------------------------------------------
// Head-to-head matches

struct MatchRow {
  int episode = 0;
  uint64_t seed = 0;
  int a_seat = 0;
  double a_reward = 0.0;  // episode reward from agent A's seat
  int64_t a_fallbacks = 0;
  int64_t b_fallbacks = 0;
};

struct MatchResult {
  int episodes = 0;
  int64_t a_wins = 0;
  int64_t a_losses = 0;
  int64_t draws = 0;
  double a_mean_reward = 0.0;
  double a_win_rate = 0.0;  // wins plus half of draws
  double two_sigma = 0.0;   // two standard errors of the win rate
  int64_t a_fallback_episodes = 0;
  int64_t b_fallback_episodes = 0;
  std::vector<MatchRow> rows;
};

// Plays seeded episodes with alternating seats: agent A sits as player 0 in
// even episodes and player 1 in odd ones. Rewards are reported from A's seat.
inline MatchResult play_match(const GameSpec& spec, Agent& a, Agent& b,
                              int episodes, uint64_t seed,
                              bool keep_rows = true) {
  SS_CHECK(episodes > 0, "play_match: episode count must be positive");
  MatchResult out;
  out.episodes = episodes;
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    uint64_t ep_seed = derive_seed(seed, "match", static_cast<uint64_t>(e));
    int a_seat = e % 2;
    Agent* seat[2] = {a_seat == 0 ? &a : &b, a_seat == 0 ? &b : &a};
    int64_t a_f0 = a.fallback_episodes();
    int64_t b_f0 = b.fallback_episodes();
    seat[0]->start_episode(0, derive_seed(ep_seed, "seat", 0));
    seat[1]->start_episode(1, derive_seed(ep_seed, "seat", 1));

    GameState st = new_game(spec);
    std::array<InfosetKey, 2> isets{root_infoset_key(0), root_infoset_key(1)};
    double p0_reward = 0.0;
    for (;;) {
      auto l0 = st.legal_actions(0);
      auto l1 = st.legal_actions(1);
      int a0 = seat[0]->act(isets[0], l0);
      int a1 = seat[1]->act(isets[1], l1);
      StepResult sr = st.apply(a0, a1);
      p0_reward += sr.reward;
      if (sr.terminal) break;
      append_infoset(isets[0], static_cast<uint8_t>(a0), sr.pub_obs);
      append_infoset(isets[1], static_cast<uint8_t>(a1), sr.pub_obs);
      seat[0]->observe(sr.pub_obs, static_cast<uint8_t>(a0));
      seat[1]->observe(sr.pub_obs, static_cast<uint8_t>(a1));
    }

    double a_reward = a_seat == 0 ? p0_reward : -p0_reward;
    sum += a_reward;
    if (a_reward > 1e-12)
      ++out.a_wins;
    else if (a_reward < -1e-12)
      ++out.a_losses;
    else
      ++out.draws;
    if (keep_rows) {
      MatchRow row;
      row.episode = e;
      row.seed = ep_seed;
      row.a_seat = a_seat;
      row.a_reward = a_reward;
      row.a_fallbacks = a.fallback_episodes() - a_f0;
      row.b_fallbacks = b.fallback_episodes() - b_f0;
      out.rows.push_back(row);
    }
  }
  out.a_fallback_episodes = a.fallback_episodes();
  out.b_fallback_episodes = b.fallback_episodes();
  out.a_mean_reward = sum / static_cast<double>(episodes);
  double n = static_cast<double>(episodes);
  out.a_win_rate =
      (static_cast<double>(out.a_wins) + 0.5 * static_cast<double>(out.draws)) / n;
  out.two_sigma = 2.0 * std::sqrt(out.a_win_rate * (1.0 - out.a_win_rate) / n);
  return out;
}

// ---------------------------------------------------------------------------
// Whole-tree composition

// Resolves every reachable public state once per resolver seat and composes
// the root policies into one full profile, so the play-time procedure can be
// scored with the exact exploitability machinery.
struct PipelineEval {
  PolicyProfile composed;
  int64_t solves = 0;
  int64_t fallback_public_states = 0;  // counted per (public state, seat)
  // Seats whose own range died out: the composed profile never plays into
  // these states, so the blueprint fills them without affecting soundness.
  int64_t unreachable_public_states = 0;
  int64_t missing_promises = 0;
  double exploitability = 0.0;
};

inline PipelineEval resolve_all(const EnumeratedGame& g, const TreeView& view,
                                const Bundle& bundle, const ResolveConfig& cfg) {
  size_t num_ids = static_cast<size_t>(bundle.abstraction.num_clusters);
  size_t num_pubs = g.pub_keys.size();
  int num_actions = g.spec.num_actions();

  // Parent links over the public tree; ids are in creation order, so a
  // parent's id is always smaller than its children's.
  std::vector<int32_t> pub_parent(num_pubs, -1);
  for (size_t n = 1; n < g.nodes.size(); ++n) {
    const auto& node = g.nodes[n];
    int32_t par_pub = g.nodes[node.parent].pub;
    if (node.pub == par_pub) continue;
    if (pub_parent[node.pub] < 0) pub_parent[node.pub] = par_pub;
    SS_CHECK(pub_parent[node.pub] == par_pub,
             "resolve_all: public state has two parents");
  }

  // Public states whose nodes are all terminal have no play left in them:
  // nothing to solve, nothing to compose, no children to feed.
  std::vector<char> pub_live(num_pubs, 0);
  for (size_t pub = 0; pub < num_pubs; ++pub)
    for (int p = 0; p < 2 && !pub_live[pub]; ++p)
      for (int32_t is : g.pub_infosets[p][pub])
        if (g.infosets[p][is].nonterminal_members > 0) {
          pub_live[pub] = 1;
          break;
        }

  struct SeatState {
    bool fallback = false;
    bool unreachable = false;
    std::shared_ptr<const SolvedState> solved;
    std::array<std::vector<double>, 2> reach;  // indexed by player
  };
  std::vector<std::array<SeatState, 2>> states(num_pubs);

  PipelineEval out;

  // Root solve, shared by both seats: both ranges start as unit mass.
  {
    SeatState root;
    const int* r0 = bundle.abstraction.find(0, root_infoset_key(0));
    const int* r1 = bundle.abstraction.find(1, root_infoset_key(1));
    if (!r0 || !r1) {
      root.fallback = true;
    } else {
      root.reach[0].assign(num_ids, 0.0);
      root.reach[1].assign(num_ids, 0.0);
      root.reach[0][static_cast<size_t>(*r0)] = 1.0;
      root.reach[1][static_cast<size_t>(*r1)] = 1.0;
      SubgameSpec ss;
      ss.root_pub = g.pub_keys[0];
      ss.reach[0] = root.reach[0];
      ss.reach[1] = root.reach[1];
      ss.depth = cfg.depth;
      ss.model = &bundle.model;
      ss.values = &bundle.values;
      try {
        auto dl = build_subgame(ss);
        root.solved = detail::state_from(solve_subgame(dl, cfg.cfr_iterations),
                                         g.pub_keys[0]);
        ++out.solves;
      } catch (const ModelHoleError&) {
        root.fallback = true;
      }
    }
    if (root.fallback) out.fallback_public_states += 2;
    states[0][0] = root;
    states[0][1] = root;
  }

  for (size_t pub = 1; pub < num_pubs; ++pub) {
    if (!pub_live[pub]) continue;
    int32_t par = pub_parent[pub];
    SS_CHECK(par >= 0 && static_cast<size_t>(par) < pub, "resolve_all: orphan public state");
    for (int p = 0; p < 2; ++p) {
      const SeatState& prev = states[par][p];
      SeatState& cur = states[pub][p];
      if (prev.unreachable) {
        cur.unreachable = true;
        ++out.unreachable_public_states;
        continue;
      }
      if (prev.fallback || !prev.solved) {
        cur.fallback = true;
        ++out.fallback_public_states;
        continue;
      }
      cur.reach[p] = detail::push_reach(bundle.model, g.pub_keys[par],
                                        g.pub_keys[pub], p, prev.reach[p],
                                        prev.solved->policy[p],
                                        prev.reach[1 - p], num_ids);
      cur.reach[1 - p] = detail::push_reach(bundle.model, g.pub_keys[par],
                                            g.pub_keys[pub], 1 - p,
                                            prev.reach[1 - p],
                                            prev.solved->policy[1 - p],
                                            prev.reach[p], num_ids);
      bool any_own = false;
      for (double w : cur.reach[p])
        if (w > 0.0) any_own = true;
      if (!any_own) {
        cur.unreachable = true;
        ++out.unreachable_public_states;
        continue;
      }

      int64_t missing = 0;
      std::vector<char> known;
      double step0 = detail::public_step_reward(bundle.model, g.pub_keys[par],
                                                g.pub_keys[pub]);
      auto promises = detail::opp_promises(prev.solved->cfvs, 1 - p,
                                           g.pub_keys[pub], step0,
                                           cur.reach[1 - p], &known, &missing);
      detail::fill_missing_promises(bundle.values, g.pub_keys[pub], 1 - p,
                                    cur.reach[p], known, &promises);
      out.missing_promises += missing;

      GadgetSpec gs;
      gs.pub = g.pub_keys[pub];
      gs.resolver = p;
      gs.own_reach = cur.reach[p];
      gs.opp_reach = cur.reach[1 - p];
      gs.opp_cfv = promises;
      gs.opp_mix = cfg.opp_mix;
      gs.depth = cfg.depth;
      gs.model = &bundle.model;
      gs.values = &bundle.values;
      try {
        auto dl = build_gadget(gs);
        cur.solved = detail::state_from(solve_subgame(dl, cfg.cfr_iterations),
                                        g.pub_keys[pub]);
        ++out.solves;
      } catch (const ModelHoleError&) {
        cur.fallback = true;
        ++out.fallback_public_states;
      }
    }
  }

  // Compose each seat's own play at every public state into one profile.
  for (size_t pub = 0; pub < num_pubs; ++pub) {
    for (int p = 0; p < 2; ++p) {
      const SeatState& st = states[pub][p];
      for (int32_t is : g.pub_infosets[p][pub]) {
        const auto& info = g.infosets[p][is];
        if (info.nonterminal_members == 0) continue;
        auto actions = infoset_actions(g, p, info);
        if (actions.empty()) continue;
        std::vector<double> dist;
        if (!st.fallback && st.solved) {
          const int* id = bundle.abstraction.find(p, info.key);
          if (id) {
            auto it = st.solved->policy[p].find(*id);
            if (it != st.solved->policy[p].end()) dist = it->second;
          }
        }
        if (dist.empty())
          dist = policy_on_legal(bundle.blueprint[p], info.key, actions,
                                 num_actions);
        out.composed[p].table[info.key] = std::move(dist);
      }
    }
  }

  out.exploitability = exploitability(view, out.composed);
  return out;
}

}  // namespace simsolve

#endif  // SIMSOLVE_RESOLVING_HPP
