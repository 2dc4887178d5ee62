#ifndef SIMSOLVE_COMMON_HPP
#define SIMSOLVE_COMMON_HPP

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Throwing check used for contract violations that must survive release builds.
#define SS_CHECK(cond, msg)                                                  \
  do {                                                                       \
    if (!(cond)) {                                                           \
      throw std::runtime_error(std::string(msg) + " [" + __FILE__ + ":" +    \
                               std::to_string(__LINE__) + "]");              \
    }                                                                        \
  } while (0)

namespace simsolve {

// Observation-sequence keys. Both are canonical byte strings built from
// length-prefixed per-step observation records, so equal sequences give equal
// bytes and a key is a prefix of every successor key.
using PublicKey = std::string;
using InfosetKey = std::string;

using Rng = std::mt19937_64;

inline void append_record(std::string& key, std::initializer_list<uint8_t> payload) {
  key.push_back(static_cast<char>(payload.size()));
  for (uint8_t b : payload) key.push_back(static_cast<char>(b));
}

inline std::string to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xF]);
  }
  return out;
}

inline std::string from_hex(const std::string& hex) {
  SS_CHECK(hex.size() % 2 == 0, "hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::runtime_error("invalid hex digit");
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  }
  return out;
}

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t seed = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

// Named sub-stream seed derivation: one master seed, independent streams per
// component ("sampling", "clustering", "match", ...) and index.
inline uint64_t derive_seed(uint64_t master, const std::string& stream, uint64_t index = 0) {
  uint64_t h = fnv1a64(stream);
  h = fnv1a64(&master, sizeof(master), h);
  h = fnv1a64(&index, sizeof(index), h);
  // splitmix finalizer to spread low-entropy inputs
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

inline double gaussian(Rng& rng, double stddev) {
  if (stddev <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, stddev);
  return dist(rng);
}

inline int uniform_index(Rng& rng, int n) {
  std::uniform_int_distribution<int> dist(0, n - 1);
  return dist(rng);
}

// Samples an index proportional to the (non-negative) weights.
inline int sample_discrete(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  SS_CHECK(total > 0.0, "sample_discrete: all weights zero");
  std::uniform_real_distribution<double> dist(0.0, total);
  double r = dist(rng);
  for (size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

inline double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  SS_CHECK(a.size() == b.size(), "sq_distance: dimension mismatch");
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

// Deterministic float formatting for CSV output (round-trip exact).
inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace simsolve

#endif  // SIMSOLVE_COMMON_HPP
