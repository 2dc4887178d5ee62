#ifndef SIMSOLVE_ABSTRACTION_HPP
#define SIMSOLVE_ABSTRACTION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "simsolve/enumerate.hpp"
#include "simsolve/policy.hpp"
#include "simsolve/view.hpp"

namespace simsolve {

// What goes into an infoset's feature vector. Each successive kind appends a
// block: legal-action mask (|A|), current strategy (|A|), then one-hot own
// action per past round (rounds * |A|).
enum class PropertyKind : uint8_t {
  kLegalActions = 0,
  kLegalActionsStrategy = 1,
  kLegalActionsStrategyHistory = 2,
};

inline const char* property_kind_name(PropertyKind k) {
  switch (k) {
    case PropertyKind::kLegalActions: return "legal";
    case PropertyKind::kLegalActionsStrategy: return "legal+strategy";
    case PropertyKind::kLegalActionsStrategyHistory: return "legal+strategy+history";
  }
  return "?";
}

inline PropertyKind parse_property_kind(const std::string& s) {
  if (s == "legal") return PropertyKind::kLegalActions;
  if (s == "legal+strategy") return PropertyKind::kLegalActionsStrategy;
  if (s == "legal+strategy+history") return PropertyKind::kLegalActionsStrategyHistory;
  throw std::invalid_argument("unknown property kind: " + s);
}

inline int property_dim(PropertyKind kind, const GameSpec& spec) {
  int a = spec.num_actions();
  switch (kind) {
    case PropertyKind::kLegalActions: return a;
    case PropertyKind::kLegalActionsStrategy: return 2 * a;
    case PropertyKind::kLegalActionsStrategyHistory: return (2 + spec.max_rounds()) * a;
  }
  return 0;
}

// Feature vector for one infoset. `actions` is the infoset's legal set (may
// be empty for infosets whose members are all terminal). `source` supplies
// the strategy block; null means uniform over the legal set.
inline std::vector<double> infoset_properties(PropertyKind kind, const GameSpec& spec,
                                              const InfosetKey& key,
                                              const std::vector<int>& actions,
                                              const Policy* source) {
  int a = spec.num_actions();
  std::vector<double> v(property_dim(kind, spec), 0.0);
  for (int act : actions) v[act] = 1.0;
  if (kind == PropertyKind::kLegalActions) return v;

  if (!actions.empty()) {
    static const Policy kEmpty;
    auto dist = policy_on_legal(source ? *source : kEmpty, key, actions, a);
    for (int act = 0; act < a; ++act) v[a + act] = dist[act];
  }
  if (kind == PropertyKind::kLegalActionsStrategy) return v;

  size_t pos = 1;  // skip the root byte
  int round = 0;
  while (pos < key.size()) {
    uint8_t len = static_cast<uint8_t>(key[pos]);
    SS_CHECK(len == 2 && pos + 2 < key.size(), "malformed infoset key");
    uint8_t own = static_cast<uint8_t>(key[pos + 1]);
    SS_CHECK(own < a && round < spec.max_rounds(), "infoset key out of range");
    v[(2 + round) * a + own] = 1.0;
    pos += 1 + len;
    ++round;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Clustering

struct ClusterConfig {
  int num_clusters = 4;       // cluster count per public state and player
  double eta = 0.05;          // online step size
  double gamma = 1.0;         // softmax sharpness for the all-centroid move
  double d_hard = 0.3;        // squared distance below which only the nearest moves
  double d_rep = 0.5;         // centroids are pushed apart to this squared distance
  double noise_sigma = 0.02;  // per-coordinate noise added to online samples
};

struct ClusterSet {
  std::vector<std::vector<double>> centroids;

  int assign(const std::vector<double>& v) const {
    SS_CHECK(!centroids.empty(), "assign on empty cluster set");
    int best = 0;
    double best_d = sq_distance(centroids[0], v);
    for (size_t i = 1; i < centroids.size(); ++i) {
      double d = sq_distance(centroids[i], v);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }
};

namespace detail {

inline void move_toward(std::vector<double>& c, const std::vector<double>& target,
                        double eta) {
  for (size_t i = 0; i < c.size(); ++i) c[i] += eta * (target[i] - c[i]);
}

}  // namespace detail

// Weighted k-means with a k-means++ start. Assignment ties and all argmax
// ties go to the lowest index, which keeps results reproducible for a given
// seed. Zero total weight falls back to unweighted.
inline ClusterSet kmeans_cluster(const std::vector<std::vector<double>>& points,
                                 std::vector<double> weights, int k, Rng& rng) {
  SS_CHECK(k >= 1, "kmeans: need at least one cluster");
  SS_CHECK(!points.empty(), "kmeans: no points");
  SS_CHECK(weights.size() == points.size(), "kmeans: weight count mismatch");
  size_t n = points.size();
  double wtotal = 0.0;
  for (double w : weights) {
    SS_CHECK(w >= 0.0, "kmeans: negative weight");
    wtotal += w;
  }
  if (wtotal <= 0.0) weights.assign(n, 1.0);

  ClusterSet cs;
  cs.centroids.reserve(k);
  // Seed the first centroid by weight, the rest by weight * squared distance
  // to the nearest chosen centroid.
  std::vector<double> mass = weights;
  cs.centroids.push_back(points[sample_discrete(rng, mass)]);
  std::vector<double> near_d(n);
  while (static_cast<int>(cs.centroids.size()) < k) {
    for (size_t i = 0; i < n; ++i) {
      double d = sq_distance(points[i], cs.centroids[0]);
      for (size_t c = 1; c < cs.centroids.size(); ++c)
        d = std::min(d, sq_distance(points[i], cs.centroids[c]));
      near_d[i] = d;
      mass[i] = weights[i] * d;
    }
    double total = 0.0;
    for (double m : mass) total += m;
    if (total > 0.0) {
      cs.centroids.push_back(points[sample_discrete(rng, mass)]);
    } else {
      // All points coincide with the chosen centroids; cycle duplicates.
      cs.centroids.push_back(points[cs.centroids.size() % n]);
    }
  }

  std::vector<int> owner(n, -1);
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      int o = cs.assign(points[i]);
      if (o != owner[i]) {
        owner[i] = o;
        changed = true;
      }
    }
    if (!changed && round > 0) break;

    size_t dim = points[0].size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<double> wsum(k, 0.0);
    for (size_t i = 0; i < n; ++i) {
      wsum[owner[i]] += weights[i];
      for (size_t d = 0; d < dim; ++d) sums[owner[i]][d] += weights[i] * points[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (wsum[c] > 0.0) {
        for (size_t d = 0; d < dim; ++d) cs.centroids[c][d] = sums[c][d] / wsum[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its owner.
        size_t far = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < n; ++i) {
          double d = sq_distance(points[i], cs.centroids[owner[i]]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        cs.centroids[c] = points[far];
        owner[far] = c;
        wsum[c] = weights[far];
      }
    }
  }
  return cs;
}

// One streamed sample: perturb it, move the nearest centroid (or softly move
// all of them when nothing is close), then push any crowded centroids apart
// until every pair is at squared distance d_rep or more.
inline void online_soft_update(ClusterSet& cs, const std::vector<double>& sample,
                               const ClusterConfig& cfg, Rng& rng) {
  SS_CHECK(!cs.centroids.empty(), "online update on empty cluster set");
  std::vector<double> x = sample;
  for (double& v : x) v += gaussian(rng, cfg.noise_sigma);

  size_t k = cs.centroids.size();
  std::vector<double> d(k);
  int nearest = 0;
  for (size_t i = 0; i < k; ++i) {
    d[i] = sq_distance(cs.centroids[i], x);
    if (d[i] < d[nearest]) nearest = static_cast<int>(i);
  }
  if (d[nearest] < cfg.d_hard) {
    detail::move_toward(cs.centroids[nearest], x, cfg.eta);
  } else {
    double zmax = -cfg.gamma * d[0];
    for (size_t i = 1; i < k; ++i) zmax = std::max(zmax, -cfg.gamma * d[i]);
    double denom = 0.0;
    std::vector<double> soft(k);
    for (size_t i = 0; i < k; ++i) {
      soft[i] = std::exp(-cfg.gamma * d[i] - zmax);
      denom += soft[i];
    }
    for (size_t i = 0; i < k; ++i)
      detail::move_toward(cs.centroids[i], x, cfg.eta * soft[i] / denom);
  }

  size_t dim = cs.centroids[0].size();
  double half = std::sqrt(cfg.d_rep) / 2.0;
  int max_sweeps = 100 * static_cast<int>(k) + 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = i + 1; j < k; ++j) {
        double dist2 = sq_distance(cs.centroids[i], cs.centroids[j]);
        if (dist2 >= cfg.d_rep) continue;
        std::vector<double> unit(dim, 0.0);
        if (dist2 > 0.0) {
          double dist = std::sqrt(dist2);
          for (size_t t = 0; t < dim; ++t)
            unit[t] = (cs.centroids[j][t] - cs.centroids[i][t]) / dist;
        } else {
          unit[0] = 1.0;  // coincident pair: separate along the first axis
        }
        for (size_t t = 0; t < dim; ++t) {
          double mid = 0.5 * (cs.centroids[i][t] + cs.centroids[j][t]);
          cs.centroids[i][t] = mid - half * unit[t];
          cs.centroids[j][t] = mid + half * unit[t];
        }
        moved = true;
      }
    }
    if (!moved) break;
  }
}

// ---------------------------------------------------------------------------
// Per-public-state abstraction of infosets

struct AbstractionMap {
  PropertyKind kind = PropertyKind::kLegalActions;
  int num_clusters = 1;
  std::array<std::unordered_map<InfosetKey, int>, 2> index;
  // Kept only by builders that may continue refining online; not serialized.
  std::unordered_map<PublicKey, std::array<ClusterSet, 2>> clusters;

  int lookup(int player, const InfosetKey& key) const {
    auto it = index[player].find(key);
    SS_CHECK(it != index[player].end(), "abstraction lookup miss");
    return it->second;
  }
  const int* find(int player, const InfosetKey& key) const {
    auto it = index[player].find(key);
    return it == index[player].end() ? nullptr : &it->second;
  }
};

// Infosets of the abstract game are keyed by (player, public key, abstract
// id). A public key fixes the depth, so decision-stage and transformation-
// stage uses of the same key never collide.
inline InfosetKey abstract_iset_key(int player, const PublicKey& pub, int abs) {
  SS_CHECK(abs >= 0 && abs < 65536, "abstract index out of range");
  std::string k(1, static_cast<char>(0x20 + player));
  k += pub;
  k.push_back(static_cast<char>(abs >> 8));
  k.push_back(static_cast<char>(abs & 0xff));
  return k;
}

struct AbstractKeyParts {
  int player = 0;
  PublicKey pub;
  int abs = 0;
};

inline bool parse_abstract_key(const InfosetKey& key, AbstractKeyParts* out) {
  if (key.size() < 3) return false;
  uint8_t tag = static_cast<uint8_t>(key[0]);
  if (tag != 0x20 && tag != 0x21) return false;
  out->player = tag - 0x20;
  out->pub = key.substr(1, key.size() - 3);
  out->abs = (static_cast<uint8_t>(key[key.size() - 2]) << 8) |
             static_cast<uint8_t>(key[key.size() - 1]);
  return true;
}

// Legal actions of an infoset, taken from its first nonterminal member
// (enumeration guarantees all members agree). Empty for terminal-only sets.
inline std::vector<int> infoset_actions(const EnumeratedGame& g, int player,
                                        const EnumeratedGame::InfosetInfo& info) {
  if (info.num_actions == 0) return {};
  for (int32_t m : info.members) {
    const auto& n = g.nodes[m];
    if (n.terminal) continue;
    const uint8_t* legal = player == 0 ? g.legal0(n) : g.legal1(n);
    return std::vector<int>(legal, legal + n.na[player]);
  }
  return {};
}

// Joint reach probability of every infoset when both players play an
// eps-uniform mix around `source` (uniform everywhere when source is null).
inline std::array<std::unordered_map<InfosetKey, double>, 2> infoset_reach_weights(
    const EnumeratedGame& g, const PolicyProfile* source, double eps) {
  int a = g.spec.num_actions();
  static const Policy kEmpty;
  std::vector<double> reach(g.nodes.size(), 0.0);
  reach[0] = 1.0;
  std::array<std::unordered_map<InfosetKey, double>, 2> out;
  for (size_t id = 0; id < g.nodes.size(); ++id) {
    const auto& n = g.nodes[id];
    for (int p = 0; p < 2; ++p)
      if (n.iset[p] >= 0) out[p][g.infosets[p][n.iset[p]].key] += reach[id];
    if (n.terminal) continue;
    std::array<std::vector<double>, 2> sig;
    for (int p = 0; p < 2; ++p) {
      const auto& info = g.infosets[p][n.iset[p]];
      std::vector<int> legal(p == 0 ? g.legal0(n) : g.legal1(n),
                             (p == 0 ? g.legal0(n) : g.legal1(n)) + n.na[p]);
      sig[p] = policy_on_legal(source ? (*source)[p] : kEmpty, info.key, legal, a);
      sig[p] = eps_uniform_mix(sig[p], legal, a, eps);
    }
    for (int i = 0; i < n.na[0]; ++i)
      for (int j = 0; j < n.na[1]; ++j)
        reach[g.child(n, i, j)] += reach[id] * sig[0][g.legal0(n)[i]] * sig[1][g.legal1(n)[j]];
  }
  return out;
}

// Clusters the infosets of every (public state, player) pair and assigns each
// infoset its cluster id. Every enumerated infoset gets an entry.
inline AbstractionMap build_abstraction(const EnumeratedGame& g, PropertyKind kind,
                                        const ClusterConfig& cfg, uint64_t seed,
                                        const PolicyProfile* source = nullptr,
                                        double eps = 0.5) {
  AbstractionMap map;
  map.kind = kind;
  map.num_clusters = cfg.num_clusters;
  auto weights = infoset_reach_weights(g, source, eps);

  for (size_t pub = 0; pub < g.pub_keys.size(); ++pub) {
    for (int p = 0; p < 2; ++p) {
      const auto& ids = g.pub_infosets[p][pub];
      if (ids.empty()) continue;
      std::vector<std::vector<double>> points;
      std::vector<double> w;
      points.reserve(ids.size());
      for (int32_t is : ids) {
        const auto& info = g.infosets[p][is];
        points.push_back(infoset_properties(kind, g.spec, info.key,
                                            infoset_actions(g, p, info),
                                            source ? &(*source)[p] : nullptr));
        auto it = weights[p].find(info.key);
        w.push_back(it == weights[p].end() ? 0.0 : it->second);
      }
      Rng rng(derive_seed(seed, "kmeans", pub * 2 + p));
      auto cs = kmeans_cluster(points, w, cfg.num_clusters, rng);
      for (size_t i = 0; i < ids.size(); ++i)
        map.index[p][g.infosets[p][ids[i]].key] = cs.assign(points[i]);
      map.clusters[g.pub_keys[pub]][p] = std::move(cs);
    }
  }
  return map;
}

// One abstract id per infoset: the finest abstraction, useful as a baseline
// and for exactness tests.
inline AbstractionMap identity_abstraction(const EnumeratedGame& g) {
  AbstractionMap map;
  map.kind = PropertyKind::kLegalActionsStrategyHistory;
  map.num_clusters = 1;
  for (size_t pub = 0; pub < g.pub_keys.size(); ++pub) {
    for (int p = 0; p < 2; ++p) {
      const auto& ids = g.pub_infosets[p][pub];
      for (size_t i = 0; i < ids.size(); ++i)
        map.index[p][g.infosets[p][ids[i]].key] = static_cast<int>(i);
      map.num_clusters = std::max(map.num_clusters, static_cast<int>(ids.size()));
    }
  }
  return map;
}

// Streams sampled infosets through the online update rule, then re-assigns
// the infosets of every touched public state.
inline void online_refine(AbstractionMap& map, const EnumeratedGame& g, int num_samples,
                          const ClusterConfig& cfg, Rng& rng,
                          const PolicyProfile* source = nullptr, double eps = 0.5) {
  SS_CHECK(!map.clusters.empty(), "online_refine needs cluster centroids");
  int a = g.spec.num_actions();
  static const Policy kEmpty;
  for (int s = 0; s < num_samples; ++s) {
    // Sample one trajectory under the eps-mixed profile and pick a random
    // visited decision node, then update that node's two infoset clusters.
    std::vector<int32_t> visited;
    int32_t id = 0;
    while (!g.nodes[id].terminal) {
      visited.push_back(id);
      const auto& n = g.nodes[id];
      std::array<int, 2> act{};
      for (int p = 0; p < 2; ++p) {
        const uint8_t* legal = p == 0 ? g.legal0(n) : g.legal1(n);
        std::vector<int> la(legal, legal + n.na[p]);
        auto dist = policy_on_legal(source ? (*source)[p] : kEmpty,
                                    g.infosets[p][n.iset[p]].key, la, a);
        dist = eps_uniform_mix(dist, la, a, eps);
        act[p] = sample_action(rng, dist, la);
      }
      const uint8_t* l0 = g.legal0(n);
      const uint8_t* l1 = g.legal1(n);
      int i0 = static_cast<int>(std::find(l0, l0 + n.na[0], act[0]) - l0);
      int i1 = static_cast<int>(std::find(l1, l1 + n.na[1], act[1]) - l1);
      id = g.child(n, i0, i1);
    }
    if (visited.empty()) continue;
    int32_t pick = visited[uniform_index(rng, visited.size())];
    const auto& n = g.nodes[pick];
    auto cit = map.clusters.find(g.pub_keys[n.pub]);
    if (cit == map.clusters.end()) continue;
    for (int p = 0; p < 2; ++p) {
      const auto& info = g.infosets[p][n.iset[p]];
      const uint8_t* legal = p == 0 ? g.legal0(n) : g.legal1(n);
      std::vector<int> la(legal, legal + n.na[p]);
      auto vec = infoset_properties(map.kind, g.spec, info.key, la,
                                    source ? &(*source)[p] : nullptr);
      online_soft_update(cit->second[p], vec, cfg, rng);
    }
  }
  // Refresh assignments everywhere centroids exist.
  for (size_t pub = 0; pub < g.pub_keys.size(); ++pub) {
    auto cit = map.clusters.find(g.pub_keys[pub]);
    if (cit == map.clusters.end()) continue;
    for (int p = 0; p < 2; ++p) {
      for (int32_t is : g.pub_infosets[p][pub]) {
        const auto& info = g.infosets[p][is];
        auto vec = infoset_properties(map.kind, g.spec, info.key,
                                      infoset_actions(g, p, info),
                                      source ? &(*source)[p] : nullptr);
        map.index[p][info.key] = cit->second[p].assign(vec);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// The abstract game: original tree and payoffs, coarsened information

// Replaces every information set by its abstract class while keeping the tree
// topology and payoffs. Members of one class may disagree on legal actions;
// the class carries their union and each node keeps its own legal subset, so
// the result generally has imperfect recall. Throws when the map misses an
// enumerated infoset.
inline TreeView build_abstract_game(const EnumeratedGame& g,
                                    const AbstractionMap& map) {
  TreeViewBuilder b(g.spec.num_actions());

  // Intern every abstract class with its full action union first; slot
  // layouts computed later must not be invalidated by growing unions.
  for (int p = 0; p < 2; ++p) {
    for (const auto& info : g.infosets[p]) {
      if (info.nonterminal_members == 0) continue;
      auto akey = abstract_iset_key(p, g.pub_keys[info.pub], map.lookup(p, info.key));
      b.intern_infoset(p, akey, infoset_actions(g, p, info));
    }
  }

  std::vector<int32_t> ids(g.nodes.size(), -1);
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& en = g.nodes[i];
    int32_t vid;
    if (en.terminal) {
      vid = b.add_terminal(en.reward_sum);
    } else {
      std::array<std::vector<int>, 2> acts;
      std::array<int32_t, 2> iset;
      for (int p = 0; p < 2; ++p) {
        const uint8_t* l = (p == 0) ? g.legal0(en) : g.legal1(en);
        acts[p].assign(l, l + en.na[p]);
        const auto& info = g.infosets[p][en.iset[p]];
        auto akey =
            abstract_iset_key(p, g.pub_keys[info.pub], map.lookup(p, info.key));
        iset[p] = b.intern_infoset(p, akey, acts[p]);
      }
      vid = b.add_decision(iset, acts);
    }
    ids[i] = vid;
    if (en.parent >= 0) {
      const auto& pn = g.nodes[en.parent];
      const uint8_t* l0 = g.legal0(pn);
      const uint8_t* l1 = g.legal1(pn);
      int i0 = 0, i1 = 0;
      while (l0[i0] != en.action_in[0]) ++i0;
      while (l1[i1] != en.action_in[1]) ++i1;
      b.set_child(ids[en.parent], i0, i1, vid);
    }
  }
  return b.take();
}

// Maps a policy keyed by abstract infoset keys back onto real infoset keys.
// Real infosets whose class is absent from the policy stay absent and
// evaluate as uniform; distributions are renormalized over the real legal
// set at evaluation time.
inline PolicyProfile lift_policy(const EnumeratedGame& g, const AbstractionMap& map,
                                 const PolicyProfile& abstract) {
  PolicyProfile out;
  for (int p = 0; p < 2; ++p) {
    for (const auto& info : g.infosets[p]) {
      if (info.nonterminal_members == 0) continue;
      const int* abs = map.find(p, info.key);
      if (abs == nullptr) continue;
      auto akey = abstract_iset_key(p, g.pub_keys[info.pub], *abs);
      auto it = abstract[p].table.find(akey);
      if (it != abstract[p].table.end()) out[p].table.emplace(info.key, it->second);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: deterministic, line oriented, round-trips exactly.

inline std::string abstraction_to_text(const AbstractionMap& map) {
  std::vector<std::string> lines;
  for (int p = 0; p < 2; ++p)
    for (const auto& [key, idx] : map.index[p])
      lines.push_back(to_hex(public_key_of(key)) + " " + std::to_string(p) + " " +
                      to_hex(key) + " " + std::to_string(idx));
  std::sort(lines.begin(), lines.end());
  std::string out = "abstraction v1 ";
  out += property_kind_name(map.kind);
  out += " " + std::to_string(map.num_clusters) + "\n";
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

inline AbstractionMap abstraction_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag, ver, kind_name;
  int clusters = 0;
  SS_CHECK(static_cast<bool>(in >> tag >> ver >> kind_name >> clusters) &&
               tag == "abstraction" && ver == "v1",
           "bad abstraction header");
  AbstractionMap map;
  map.kind = parse_property_kind(kind_name);
  map.num_clusters = clusters;
  std::string pub_hex, iset_hex;
  int player = 0, idx = 0;
  while (in >> pub_hex >> player >> iset_hex >> idx) {
    SS_CHECK(player == 0 || player == 1, "bad player in abstraction line");
    InfosetKey key = from_hex(iset_hex);
    SS_CHECK(to_hex(public_key_of(key)) == pub_hex,
             "abstraction line public key mismatch");
    map.index[player][key] = idx;
  }
  return map;
}

}  // namespace simsolve

#endif  // SIMSOLVE_ABSTRACTION_HPP
