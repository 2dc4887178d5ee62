#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simsolve/bundle.hpp"
#include "simsolve/config.hpp"
#include "simsolve/resolving.hpp"

namespace ss = simsolve;

namespace {

// Geometric checkpoint schedule 1, 2, 5, 10, 20, 50, ... ending exactly at
// `last`.
std::vector<int> checkpoint_schedule(int last) {
  std::vector<int> out;
  int base = 1;
  while (true) {
    for (int m : {1, 2, 5}) {
      long long v = static_cast<long long>(m) * base;
      if (v >= last) {
        out.push_back(last);
        return out;
      }
      out.push_back(static_cast<int>(v));
    }
    base *= 10;
  }
}

struct Output {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot open output file: " + path);
      os = &file;
    }
  }
  std::ostream& stream() { return *os; }
};

void emit_convention_note(std::ostream& os) {
  os << "# exploitability = mean of both best-response gains, in game utility"
        " units\n";
}

int cmd_solve(const ss::ExperimentConfig& cfg) {
  auto g = ss::enumerate_public_tree(cfg.game_spec());
  auto view = ss::build_real_view(g);
  Output out(cfg.output);
  out.stream() << "# schema=solve-v1\n";
  emit_convention_note(out.stream());
  out.stream() << "iteration,exploitability\n";
  ss::CfrRun run(view);
  for (int mark : checkpoint_schedule(cfg.cfr_iterations)) {
    run.run(mark - run.completed());
    out.stream() << mark << "," << ss::fmt_double(ss::exploitability(view, run.average()))
                 << "\n";
  }
  return 0;
}

int cmd_abstract_eval(const ss::ExperimentConfig& cfg, std::vector<int> limits) {
  auto g = ss::enumerate_public_tree(cfg.game_spec());
  auto view = ss::build_real_view(g);
  if (limits.empty()) limits.push_back(cfg.clusters);

  // Strategy and history properties read a converged strategy; legal-action
  // properties ignore it.
  ss::CfrRun run(view);
  run.run(cfg.blueprint_iterations);
  ss::PolicyProfile source = run.average();

  Output out(cfg.output);
  out.stream() << "# schema=abstract-eval-v1\n";
  emit_convention_note(out.stream());
  out.stream() << "L,seed,exploitability\n";
  for (int limit : limits) {
    for (uint64_t seed : cfg.seeds) {
      ss::ClusterConfig cc = cfg.cluster_config();
      cc.num_clusters = limit;
      auto map = ss::build_abstraction(g, cfg.property, cc, seed, &source, cfg.eps);
      auto abstract_view = ss::build_abstract_game(g, map);
      ss::CfrRun arun(abstract_view);
      arun.run(cfg.cfr_iterations);
      auto lifted = ss::lift_policy(g, map, arun.average());
      out.stream() << limit << "," << seed << ","
                   << ss::fmt_double(ss::exploitability(view, lifted)) << "\n";
    }
  }
  return 0;
}

ss::BundleBuildConfig bundle_config(const ss::ExperimentConfig& cfg, uint64_t seed,
                                    int64_t trajectories) {
  ss::BundleBuildConfig bc;
  bc.identity = cfg.abstraction == "identity";
  bc.kind = cfg.property;
  bc.clusters = cfg.clusters;
  bc.cluster_cfg = cfg.cluster_config();
  bc.blueprint_iterations = cfg.blueprint_iterations;
  bc.T = cfg.T;
  bc.eps = cfg.eps;
  bc.trajectories = trajectories;
  bc.seed = seed;
  return bc;
}

int cmd_pipeline_eval(const ss::ExperimentConfig& cfg) {
  auto g = ss::enumerate_public_tree(cfg.game_spec());
  auto view = ss::build_real_view(g);
  double uniform_expl = ss::exploitability(
      view, {ss::uniform_policy(g, 0), ss::uniform_policy(g, 1)});

  std::vector<int64_t> budgets;
  if (cfg.trajectories == 0) {
    budgets.push_back(0);
  } else {
    for (int64_t b = 1000; b < cfg.trajectories; b *= 10) budgets.push_back(b);
    budgets.push_back(cfg.trajectories);
  }

  Output out(cfg.output);
  out.stream() << "# schema=pipeline-eval-v1\n";
  emit_convention_note(out.stream());
  out.stream() << "episode_budget,seed,exploitability,uniform_exploitability,"
                  "blueprint_exploitability,transition_accuracy,public_accuracy,"
                  "reward_mae,mask_exactness,terminal_accuracy,covered,holes,"
                  "solves,fallback_public_states,unreachable_public_states,"
                  "missing_promises\n";
  for (int64_t budget : budgets) {
    for (uint64_t seed : cfg.seeds) {
      ss::BundleBuildReport rep;
      auto bundle = ss::build_bundle(g, view, bundle_config(cfg, seed, budget), &rep);
      ss::ResolveConfig rc;
      rc.depth = cfg.depth;
      rc.cfr_iterations = cfg.cfr_iterations;
      rc.opp_mix = cfg.opp_mix;
      auto eval = ss::resolve_all(g, view, bundle, rc);
      out.stream() << budget << "," << seed << ","
                   << ss::fmt_double(eval.exploitability) << ","
                   << ss::fmt_double(uniform_expl) << ","
                   << ss::fmt_double(rep.blueprint_exploitability) << ","
                   << ss::fmt_double(rep.fidelity.transition_accuracy) << ","
                   << ss::fmt_double(rep.fidelity.public_accuracy) << ","
                   << ss::fmt_double(rep.fidelity.reward_mae) << ","
                   << ss::fmt_double(rep.fidelity.mask_exactness) << ","
                   << ss::fmt_double(rep.fidelity.terminal_accuracy) << ","
                   << rep.fidelity.covered << "," << rep.fidelity.holes << ","
                   << eval.solves << "," << eval.fallback_public_states << ","
                   << eval.unreachable_public_states << ","
                   << eval.missing_promises << "\n";
    }
  }
  return 0;
}

std::unique_ptr<ss::Agent> make_agent(const std::string& kind, const ss::Bundle& bundle,
                                      const ss::ExperimentConfig& cfg,
                                      std::shared_ptr<ss::SolveCache> cache) {
  if (kind == "uniform") return std::make_unique<ss::UniformAgent>();
  if (kind == "blueprint")
    return std::make_unique<ss::BlueprintAgent>(bundle.blueprint,
                                                bundle.spec.num_actions());
  ss::ResolveConfig rc;
  rc.depth = cfg.depth;
  rc.cfr_iterations = cfg.cfr_iterations;
  rc.opp_mix = cfg.opp_mix;
  return std::make_unique<ss::ResolverAgent>(bundle, rc, std::move(cache));
}

int cmd_match(const ss::ExperimentConfig& cfg) {
  ss::Bundle bundle;
  bool need_bundle = cfg.agent != "uniform" || cfg.opponent != "uniform";
  bool have_file = false;
  if (!cfg.bundle.empty()) {
    std::ifstream probe(cfg.bundle, std::ios::binary);
    have_file = static_cast<bool>(probe);
  }
  if (have_file) {
    bundle = ss::load_bundle(cfg.bundle);
  } else if (need_bundle) {
    bundle = ss::build_bundle(cfg.game_spec(),
                              bundle_config(cfg, cfg.seeds.front(), cfg.trajectories));
    if (!cfg.bundle.empty()) {
      ss::save_bundle(cfg.bundle, bundle);
      std::cerr << "saved bundle to " << cfg.bundle << "\n";
    }
  }
  if (cfg.agent != "uniform" || cfg.opponent != "uniform") {
    if (bundle.spec.name() != cfg.game)
      throw std::runtime_error("bundle game " + bundle.spec.name() +
                               " does not match config game " + cfg.game);
  }

  auto cache = std::make_shared<ss::SolveCache>();
  auto a = make_agent(cfg.agent, bundle, cfg, cache);
  auto b = make_agent(cfg.opponent, bundle, cfg, cache);

  Output out(cfg.output);
  out.stream() << "# schema=match-v1\n";
  out.stream() << "# win_rate counts draws as half; two_sigma = 2*sqrt(p(1-p)/n)\n";
  out.stream() << "agent,opponent,episodes,seed,a_win_rate,two_sigma,"
                  "a_mean_reward,a_wins,a_losses,draws,a_fallback_episodes,"
                  "b_fallback_episodes\n";
  for (uint64_t seed : cfg.seeds) {
    auto res = ss::play_match(cfg.game_spec(), *a, *b, cfg.episodes, seed,
                              /*keep_rows=*/false);
    out.stream() << a->name() << "," << b->name() << "," << res.episodes << ","
                 << seed << "," << ss::fmt_double(res.a_win_rate) << ","
                 << ss::fmt_double(res.two_sigma) << ","
                 << ss::fmt_double(res.a_mean_reward) << "," << res.a_wins << ","
                 << res.a_losses << "," << res.draws << ","
                 << res.a_fallback_episodes << "," << res.b_fallback_episodes
                 << "\n";
  }
  return 0;
}

int cmd_inspect_bundle(const ss::ExperimentConfig& cfg) {
  if (cfg.bundle.empty()) throw std::invalid_argument("inspect-bundle: set bundle=PATH");
  std::ifstream in(cfg.bundle, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open bundle: " + cfg.bundle);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();

  ss::GameSpec spec;
  auto sections = ss::bundle_manifest(bytes, &spec);
  Output out(cfg.output);
  out.stream() << "bundle: " << cfg.bundle << "\n";
  out.stream() << "game: " << spec.name() << "\n";
  out.stream() << "total_bytes: " << bytes.size() << "\n";
  for (const auto& s : sections) {
    std::ostringstream hash;
    hash << std::hex << s.hash;
    out.stream() << "section " << s.name << " bytes=" << s.size
                 << " fnv1a64=" << hash.str() << "\n";
  }

  auto bundle = ss::bundle_from_bytes(bytes);
  out.stream() << "abstraction: clusters=" << bundle.abstraction.num_clusters
               << " property=" << ss::property_kind_name(bundle.abstraction.kind)
               << " entries_p0=" << bundle.abstraction.index[0].size()
               << " entries_p1=" << bundle.abstraction.index[1].size() << "\n";
  out.stream() << "model: public_transitions=" << bundle.model.public_transition.size()
               << " infoset_transitions=" << bundle.model.infoset_transition.size()
               << " rewards=" << bundle.model.reward.size()
               << " terminal_cells=" << bundle.model.terminal.size()
               << " masks=" << bundle.model.legal_mask.size() << "\n";
  out.stream() << "values: T=" << bundle.values.T
               << " entries=" << bundle.values.entries.size() << "\n";
  out.stream() << "blueprint: infosets_p0=" << bundle.blueprint[0].table.size()
               << " infosets_p1=" << bundle.blueprint[1].table.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solving toolkit for two-player zero-sum simultaneous-move games"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "key=value config file");
  app.add_option("-s,--set", sets, "override one config key (key=value)");

  auto* solve = app.add_subcommand("solve", "CFR+ on the real game with checkpoints");
  auto* abstract_eval = app.add_subcommand(
      "abstract-eval", "cluster, solve the coarsened game, lift, measure");
  std::vector<int> limits;
  abstract_eval->add_option("-L,--limits", limits,
                            "abstraction limits to sweep (default: clusters)");
  auto* pipeline_eval = app.add_subcommand(
      "pipeline-eval", "train a bundle and resolve every public state");
  auto* match = app.add_subcommand("match", "head-to-head episodes between agents");
  auto* inspect = app.add_subcommand("inspect-bundle", "print a bundle's manifest");
  auto* print_config =
      app.add_subcommand("print-config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  ss::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot open config file: " << config_path << "\n";
        return 1;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = ss::config_from_text(buf.str());
    }
    for (const auto& s : sets) ss::config_set(cfg, s);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(cfg);
    if (abstract_eval->parsed()) return cmd_abstract_eval(cfg, limits);
    if (pipeline_eval->parsed()) return cmd_pipeline_eval(cfg);
    if (match->parsed()) return cmd_match(cfg);
    if (inspect->parsed()) return cmd_inspect_bundle(cfg);
    if (print_config->parsed()) {
      Output out(cfg.output);
      out.stream() << ss::config_to_text(cfg);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
