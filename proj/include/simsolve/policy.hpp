#ifndef SIMSOLVE_POLICY_HPP
#define SIMSOLVE_POLICY_HPP

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "simsolve/common.hpp"

namespace simsolve {

// Behavioral policy for one player: infoset key -> probability vector indexed
// by global action id. Mass on illegal actions is zero by construction.
struct Policy {
  std::unordered_map<InfosetKey, std::vector<double>> table;

  bool contains(const InfosetKey& key) const { return table.count(key) > 0; }
  size_t size() const { return table.size(); }
};

using PolicyProfile = std::array<Policy, 2>;

inline std::vector<double> uniform_over(const std::vector<int>& legal, int num_actions) {
  std::vector<double> dist(num_actions, 0.0);
  SS_CHECK(!legal.empty(), "uniform_over: no legal actions");
  double p = 1.0 / static_cast<double>(legal.size());
  for (int a : legal) dist[a] = p;
  return dist;
}

// Distribution over `legal` drawn from the policy, re-normalized onto the
// legal set; uniform when the infoset is missing or no mass overlaps.
inline std::vector<double> policy_on_legal(const Policy& policy, const InfosetKey& key,
                                           const std::vector<int>& legal,
                                           int num_actions) {
  auto it = policy.table.find(key);
  if (it == policy.table.end()) return uniform_over(legal, num_actions);
  std::vector<double> dist(num_actions, 0.0);
  double total = 0.0;
  for (int a : legal) {
    double w = (a < static_cast<int>(it->second.size())) ? it->second[a] : 0.0;
    if (w > 0.0) {
      dist[a] = w;
      total += w;
    }
  }
  if (total <= 0.0) return uniform_over(legal, num_actions);
  for (int a : legal) dist[a] /= total;
  return dist;
}

// (1-eps) * policy + eps * uniform, on the legal set.
inline std::vector<double> eps_uniform_mix(const std::vector<double>& dist,
                                           const std::vector<int>& legal,
                                           int num_actions, double eps) {
  std::vector<double> out(num_actions, 0.0);
  double u = 1.0 / static_cast<double>(legal.size());
  for (int a : legal) out[a] = (1.0 - eps) * dist[a] + eps * u;
  return out;
}

inline int sample_action(Rng& rng, const std::vector<double>& dist,
                         const std::vector<int>& legal) {
  std::vector<double> w;
  w.reserve(legal.size());
  for (int a : legal) w.push_back(dist[a]);
  return legal[sample_discrete(rng, w)];
}

// Line-oriented text form, one infoset per line, deterministic order,
// probabilities printed with enough digits to round-trip exactly.
inline std::string policy_to_text(const Policy& policy) {
  std::vector<std::string> lines;
  lines.reserve(policy.table.size());
  for (const auto& [key, dist] : policy.table) {
    std::string line = to_hex(key);
    for (double v : dist) {
      line += ' ';
      line += fmt_double(v);
    }
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

inline Policy policy_from_text(const std::string& text) {
  Policy p;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::istringstream line(text.substr(pos, eol - pos));
    pos = eol + 1;
    std::string key_hex;
    if (!(line >> key_hex)) continue;
    std::vector<double> dist;
    double v = 0.0;
    while (line >> v) dist.push_back(v);
    p.table[from_hex(key_hex)] = std::move(dist);
  }
  return p;
}

}  // namespace simsolve

#endif  // SIMSOLVE_POLICY_HPP
