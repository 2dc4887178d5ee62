#ifndef SIMSOLVE_CONFIG_HPP
#define SIMSOLVE_CONFIG_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simsolve/abstraction.hpp"
#include "simsolve/game.hpp"

namespace simsolve {

// Flat key=value experiment configuration. Unknown keys are rejected so a
// typo in a config file or a --set override fails loudly instead of running
// the wrong experiment. print/parse round-trip exactly.
struct ExperimentConfig {
  std::string game = "goofspiel:4";
  std::string abstraction = "kmeans";  // kmeans | identity
  PropertyKind property = PropertyKind::kLegalActions;
  int clusters = 4;                // abstract infosets per public state (L)
  int T = 4;                       // portfolio size per player
  int depth = 1;                   // subgame depth limit
  int cfr_iterations = 1000;       // per solve or re-solve
  int blueprint_iterations = 4000; // blueprint CFR+ iterations
  int64_t trajectories = 100000;   // sampled episodes for the model; 0 = exhaustive
  double eps = 0.5;                // uniform share in the sampling mix
  double opp_mix = 0.25;           // uniform share in the gadget root weights
  std::vector<uint64_t> seeds = {1};
  int episodes = 10000;            // match episodes
  std::string agent = "resolver";  // resolver | blueprint | uniform
  std::string opponent = "uniform";
  double gamma = 1.0;        // softmax sharpness in the online centroid move
  double d_hard = 0.3;       // hard-assignment squared-distance threshold
  double d_rep = 0.5;        // minimum squared distance between centroids
  double noise_sigma = 0.02; // per-coordinate noise on online samples
  double eta = 0.05;         // online step size
  std::string output;        // CSV destination; empty = stdout
  std::string bundle;        // bundle file for match/inspect-bundle
  bool budget = false;       // unlock long-running optional work

  GameSpec game_spec() const { return GameSpec::parse(game); }
  ClusterConfig cluster_config() const {
    ClusterConfig cc;
    cc.num_clusters = clusters;
    cc.eta = eta;
    cc.gamma = gamma;
    cc.d_hard = d_hard;
    cc.d_rep = d_rep;
    cc.noise_sigma = noise_sigma;
    return cc;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline int parse_int(const std::string& key, const std::string& v, int min_value) {
  size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not an integer: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument(key + ": not an integer: " + v);
  if (out < min_value)
    throw std::invalid_argument(key + ": must be >= " + std::to_string(min_value));
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: " + v);
  }
  if (pos != v.size()) throw std::invalid_argument(key + ": not a number: " + v);
  return out;
}

inline std::vector<uint64_t> parse_seeds(const std::string& v) {
  std::vector<uint64_t> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    out.push_back(static_cast<uint64_t>(std::stoull(part)));
  }
  if (out.empty()) throw std::invalid_argument("seeds: empty list");
  return out;
}

inline std::string seeds_to_text(const std::vector<uint64_t>& seeds) {
  std::string out;
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(seeds[i]);
  }
  return out;
}

}  // namespace detail

// Applies one `key=value` assignment. Throws std::invalid_argument on an
// unknown key or a malformed value.
inline void config_set(ExperimentConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("expected key=value, got: " + assignment);
  std::string key = detail::trim(assignment.substr(0, eq));
  std::string val = detail::trim(assignment.substr(eq + 1));

  if (key == "game") {
    GameSpec::parse(val);  // validates
    cfg.game = val;
  } else if (key == "abstraction") {
    if (val != "kmeans" && val != "identity")
      throw std::invalid_argument("abstraction: kmeans or identity, got: " + val);
    cfg.abstraction = val;
  } else if (key == "property") {
    cfg.property = parse_property_kind(val);
  } else if (key == "clusters") {
    cfg.clusters = detail::parse_int(key, val, 1);
  } else if (key == "T") {
    cfg.T = detail::parse_int(key, val, 1);
  } else if (key == "depth") {
    cfg.depth = detail::parse_int(key, val, 1);
  } else if (key == "cfr_iterations") {
    cfg.cfr_iterations = detail::parse_int(key, val, 1);
  } else if (key == "blueprint_iterations") {
    cfg.blueprint_iterations = detail::parse_int(key, val, 1);
  } else if (key == "trajectories") {
    cfg.trajectories = detail::parse_int(key, val, 0);
  } else if (key == "eps") {
    cfg.eps = detail::parse_double(key, val);
  } else if (key == "opp_mix") {
    cfg.opp_mix = detail::parse_double(key, val);
  } else if (key == "seeds") {
    cfg.seeds = detail::parse_seeds(val);
  } else if (key == "episodes") {
    cfg.episodes = detail::parse_int(key, val, 1);
  } else if (key == "agent") {
    if (val != "resolver" && val != "blueprint" && val != "uniform")
      throw std::invalid_argument("agent: resolver, blueprint or uniform");
    cfg.agent = val;
  } else if (key == "opponent") {
    if (val != "resolver" && val != "blueprint" && val != "uniform")
      throw std::invalid_argument("opponent: resolver, blueprint or uniform");
    cfg.opponent = val;
  } else if (key == "gamma") {
    cfg.gamma = detail::parse_double(key, val);
  } else if (key == "d_hard") {
    cfg.d_hard = detail::parse_double(key, val);
  } else if (key == "d_rep") {
    cfg.d_rep = detail::parse_double(key, val);
  } else if (key == "noise_sigma") {
    cfg.noise_sigma = detail::parse_double(key, val);
  } else if (key == "eta") {
    cfg.eta = detail::parse_double(key, val);
  } else if (key == "output") {
    cfg.output = val;
  } else if (key == "bundle") {
    cfg.bundle = val;
  } else if (key == "budget") {
    if (val != "0" && val != "1" && val != "true" && val != "false")
      throw std::invalid_argument("budget: 0/1/true/false");
    cfg.budget = val == "1" || val == "true";
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

inline std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "game=" << cfg.game << "\n";
  out << "abstraction=" << cfg.abstraction << "\n";
  out << "property=" << property_kind_name(cfg.property) << "\n";
  out << "clusters=" << cfg.clusters << "\n";
  out << "T=" << cfg.T << "\n";
  out << "depth=" << cfg.depth << "\n";
  out << "cfr_iterations=" << cfg.cfr_iterations << "\n";
  out << "blueprint_iterations=" << cfg.blueprint_iterations << "\n";
  out << "trajectories=" << cfg.trajectories << "\n";
  out << "eps=" << fmt_double(cfg.eps) << "\n";
  out << "opp_mix=" << fmt_double(cfg.opp_mix) << "\n";
  out << "seeds=" << detail::seeds_to_text(cfg.seeds) << "\n";
  out << "episodes=" << cfg.episodes << "\n";
  out << "agent=" << cfg.agent << "\n";
  out << "opponent=" << cfg.opponent << "\n";
  out << "gamma=" << fmt_double(cfg.gamma) << "\n";
  out << "d_hard=" << fmt_double(cfg.d_hard) << "\n";
  out << "d_rep=" << fmt_double(cfg.d_rep) << "\n";
  out << "noise_sigma=" << fmt_double(cfg.noise_sigma) << "\n";
  out << "eta=" << fmt_double(cfg.eta) << "\n";
  out << "output=" << cfg.output << "\n";
  out << "bundle=" << cfg.bundle << "\n";
  out << "budget=" << (cfg.budget ? 1 : 0) << "\n";
  return out.str();
}

// Parses a whole config file body. Blank lines and lines starting with '#'
// are skipped.
inline ExperimentConfig config_from_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    config_set(cfg, line);
  }
  return cfg;
}

}  // namespace simsolve

#endif  // SIMSOLVE_CONFIG_HPP
