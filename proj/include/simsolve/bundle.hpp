#ifndef SIMSOLVE_BUNDLE_HPP
#define SIMSOLVE_BUNDLE_HPP

#include <fstream>
#include <string>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/depth_limited.hpp"
#include "simsolve/model.hpp"
#include "simsolve/valuation.hpp"

namespace simsolve {

// Everything a resolver needs at play time, kept in one file: the abstraction
// index, the fitted model, the value table, and the blueprint profile.
struct Bundle {
  GameSpec spec;
  AbstractionMap abstraction;
  LearnedModel model;
  ValueTable values;
  PolicyProfile blueprint;
};

struct BundleBuildConfig {
  bool identity = false;  // one cluster per real infoset
  PropertyKind kind = PropertyKind::kLegalActions;
  int clusters = 4;
  ClusterConfig cluster_cfg;
  int blueprint_iterations = 4000;
  int T = 4;
  double eps = 0.5;
  int64_t trajectories = 100000;  // 0 means the exhaustive batch
  uint64_t seed = 1;
};

struct BundleBuildReport {
  FidelityReport fidelity;
  double blueprint_exploitability = 0.0;
  size_t value_entries = 0;
  int64_t distinct_public_states = 0;
};

// Runs the whole training pipeline on an enumerable game: blueprint and
// portfolio via one CFR+ run, per-public-state clustering, model fit from
// trajectories, exact value table.
inline Bundle build_bundle(const EnumeratedGame& g, const TreeView& view,
                           const BundleBuildConfig& cfg,
                           BundleBuildReport* report = nullptr) {
  Bundle b;
  b.spec = g.spec;
  auto portfolio = build_portfolio(g, view, cfg.T, cfg.blueprint_iterations);
  b.blueprint = {portfolio.policies[0][0], portfolio.policies[1][0]};

  if (cfg.identity) {
    b.abstraction = identity_abstraction(g);
  } else {
    ClusterConfig cc = cfg.cluster_cfg;
    cc.num_clusters = cfg.clusters;
    b.abstraction = build_abstraction(g, cfg.kind, cc, cfg.seed, &b.blueprint, cfg.eps);
  }

  SampledBatch batch =
      cfg.trajectories > 0
          ? sample_trajectories(g.spec, b.blueprint, cfg.eps,
                                static_cast<int>(cfg.trajectories),
                                derive_seed(cfg.seed, "batch"))
          : exhaustive_batch(g);
  b.model = fit_model(batch, b.abstraction);
  b.values = compute_value_table(g, b.abstraction, portfolio, cfg.eps);

  if (report) {
    report->fidelity = model_fidelity_report(b.model, g, b.abstraction);
    report->blueprint_exploitability = exploitability(view, b.blueprint);
    report->value_entries = b.values.entries.size();
    std::unordered_map<PublicKey, bool> seen;
    for (const auto& t : batch.trajectories)
      for (const auto& s : t.steps) seen[s.next_pub] = true;
    report->distinct_public_states = static_cast<int64_t>(seen.size()) + 1;
  }
  return b;
}

inline Bundle build_bundle(const GameSpec& spec, const BundleBuildConfig& cfg,
                           BundleBuildReport* report = nullptr) {
  auto g = enumerate_public_tree(spec);
  auto view = build_real_view(g);
  return build_bundle(g, view, cfg, report);
}

// ---------------------------------------------------------------------------
// Whole-game solve of a learned model under an abstraction

inline int max_public_depth(const EnumeratedGame& g) {
  int d = 0;
  for (const auto& n : g.nodes) d = std::max(d, static_cast<int>(n.depth));
  return d;
}

struct AbstractSolveResult {
  SolveResult solve;        // policies keyed by abstract infoset keys
  PolicyProfile lifted;     // the same play keyed by real infoset keys
  SubgameCounters counters;
};

// Expands the model from the root to past the longest real line, so every
// leaf is a model terminal, solves it, and maps the play back onto the real
// game through the abstraction. Real infosets outside the model's support
// stay absent and evaluate as uniform.
inline AbstractSolveResult solve_abstract_game(const EnumeratedGame& g,
                                               const AbstractionMap& map,
                                               const LearnedModel& model,
                                               int iterations) {
  ValueTable none;
  none.T = 1;
  SubgameSpec spec;
  spec.root_pub = root_public_key();
  spec.depth = max_public_depth(g) + 1;
  spec.model = &model;
  spec.values = &none;
  for (int p = 0; p < 2; ++p) {
    spec.reach[p].assign(static_cast<size_t>(map.num_clusters), 0.0);
    spec.reach[p][static_cast<size_t>(map.lookup(p, root_infoset_key(p)))] = 1.0;
  }
  auto dl = build_subgame(spec);

  AbstractSolveResult out;
  out.solve = solve_subgame(dl, iterations);
  out.counters = dl.counters;
  out.lifted = lift_policy(g, map, out.solve.avg);
  return out;
}

// ---------------------------------------------------------------------------
// One-file serialization with a hash manifest

struct BundleSectionInfo {
  std::string name;
  uint64_t hash = 0;
  uint64_t size = 0;
};

namespace detail {

inline const char* const kBundleSections[] = {"abstraction", "model", "values",
                                              "blueprint0", "blueprint1"};

}  // namespace detail

inline std::string bundle_to_bytes(const Bundle& b) {
  std::vector<std::string> sections = {
      abstraction_to_text(b.abstraction), model_to_bytes(b.model),
      value_table_to_bytes(b.values), policy_to_text(b.blueprint[0]),
      policy_to_text(b.blueprint[1])};

  std::string out = "SSB1";
  detail::put_str(out, b.spec.name());
  detail::put_u32(out, static_cast<uint32_t>(sections.size()));
  for (size_t i = 0; i < sections.size(); ++i) {
    detail::put_str(out, detail::kBundleSections[i]);
    detail::put_u64(out, fnv1a64(sections[i]));
    detail::put_u64(out, sections[i].size());
  }
  for (const auto& s : sections) out += s;
  return out;
}

// Parses the manifest only; used by inspection and by full loading.
inline std::vector<BundleSectionInfo> bundle_manifest(const std::string& bytes,
                                                      GameSpec* spec_out = nullptr,
                                                      size_t* payload_start = nullptr) {
  SS_CHECK(bytes.size() >= 4 && bytes.compare(0, 4, "SSB1") == 0, "bad bundle header");
  detail::ByteReader r{bytes};
  r.pos = 4;
  GameSpec spec = GameSpec::parse(r.str());
  uint32_t count = r.u32();
  SS_CHECK(count == 5, "unexpected bundle section count");
  std::vector<BundleSectionInfo> infos(count);
  for (uint32_t i = 0; i < count; ++i) {
    infos[i].name = r.str();
    SS_CHECK(infos[i].name == detail::kBundleSections[i], "bundle sections out of order");
    infos[i].hash = r.u64();
    infos[i].size = r.u64();
  }
  if (spec_out) *spec_out = spec;
  if (payload_start) *payload_start = r.pos;
  return infos;
}

inline Bundle bundle_from_bytes(const std::string& bytes) {
  GameSpec spec;
  size_t pos = 0;
  auto infos = bundle_manifest(bytes, &spec, &pos);
  std::vector<std::string> sections;
  for (const auto& info : infos) {
    SS_CHECK(pos + info.size <= bytes.size(), "truncated bundle payload");
    sections.push_back(bytes.substr(pos, info.size));
    SS_CHECK(fnv1a64(sections.back()) == info.hash,
             "bundle section hash mismatch: " + info.name);
    pos += info.size;
  }
  SS_CHECK(pos == bytes.size(), "trailing bytes after bundle payload");

  Bundle b;
  b.spec = spec;
  b.abstraction = abstraction_from_text(sections[0]);
  b.model = model_from_bytes(sections[1]);
  b.values = value_table_from_bytes(sections[2]);
  b.blueprint[0] = policy_from_text(sections[3]);
  b.blueprint[1] = policy_from_text(sections[4]);
  SS_CHECK(b.model.spec.name() == spec.name(), "bundle model game mismatch");
  return b;
}

inline void save_bundle(const std::string& path, const Bundle& b) {
  std::ofstream out(path, std::ios::binary);
  SS_CHECK(static_cast<bool>(out), "cannot open bundle file for writing: " + path);
  auto bytes = bundle_to_bytes(b);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  SS_CHECK(static_cast<bool>(out), "bundle write failed: " + path);
}

inline Bundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  SS_CHECK(static_cast<bool>(in), "cannot open bundle file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bundle_from_bytes(bytes);
}

}  // namespace simsolve

#endif  // SIMSOLVE_BUNDLE_HPP
