#ifndef SIMSOLVE_GAME_HPP
#define SIMSOLVE_GAME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "simsolve/common.hpp"

namespace simsolve {

// Two-player zero-sum simultaneous-move games without chance. Rewards are
// always reported for player 0; player 1 receives the negation.
//
// Goofspiel N: both players hold cards 1..N, the prize deck is fixed and
// descending (N, N-1, ..., 1). Each round both secretly bid one unspent card;
// the higher bid scores the prize (reward = +/- prize), an equal bid discards
// the prize and publicly reveals the tied value. Own bids are private.
//
// Oshi-Zumo K,N: a fighter token starts at position K on a board with cells
// 0..2K. Both players start with N coins and each round secretly bid between
// 0 and their remaining coins; both bids are paid. The higher bid pushes the
// fighter one cell toward the opponent's edge (player 0 pushes upward). The
// game ends at an edge, after N rounds, or once neither player has a coin
// left; the terminal reward is (position - K) / K. Only the fighter position
// is publicly observed; bids stay private.

enum class GameKind { kGoofspiel, kOshiZumo };

struct GameSpec {
  GameKind kind = GameKind::kGoofspiel;
  int goof_n = 0;  // deck size
  int oz_k = 0;    // half-board: positions 0..2k
  int oz_n = 0;    // starting coins, also the round limit

  int num_actions() const {
    return kind == GameKind::kGoofspiel ? goof_n : oz_n + 1;
  }
  int max_rounds() const {
    return kind == GameKind::kGoofspiel ? goof_n : oz_n;
  }

  std::string name() const {
    if (kind == GameKind::kGoofspiel) return "goofspiel:" + std::to_string(goof_n);
    return "oshizumo:" + std::to_string(oz_k) + "," + std::to_string(oz_n);
  }

  // Accepts "goofspiel:<N>" and "oshizumo:<K>,<N>".
  static GameSpec parse(const std::string& text) {
    auto fail = [&]() -> GameSpec {
      throw std::invalid_argument("unrecognized game spec: \"" + text + "\"");
    };
    size_t colon = text.find(':');
    if (colon == std::string::npos) return fail();
    std::string head = text.substr(0, colon);
    std::string args = text.substr(colon + 1);
    auto to_int = [&](const std::string& s) {
      if (s.empty()) fail();
      for (char c : s)
        if (c < '0' || c > '9') fail();
      return std::stoi(s);
    };
    GameSpec spec;
    if (head == "goofspiel") {
      spec.kind = GameKind::kGoofspiel;
      spec.goof_n = to_int(args);
      if (spec.goof_n < 2 || spec.goof_n > 13) fail();
    } else if (head == "oshizumo") {
      size_t comma = args.find(',');
      if (comma == std::string::npos) return fail();
      spec.kind = GameKind::kOshiZumo;
      spec.oz_k = to_int(args.substr(0, comma));
      spec.oz_n = to_int(args.substr(comma + 1));
      if (spec.oz_k < 1 || spec.oz_k > 30 || spec.oz_n < 1 || spec.oz_n > 30) fail();
    } else {
      return fail();
    }
    return spec;
  }
};

struct StepResult {
  double reward = 0.0;  // player-0 reward emitted by this step
  uint8_t pub_obs = 0;
  std::array<uint8_t, 2> priv_obs = {0, 0};  // own action index
  bool terminal = false;
};

// Public-observation codes. Goofspiel: 0x01 / 0x02 = player 0 / 1 took the
// prize, 0x80|v = draw with revealed bid v. Oshi-Zumo: fighter position.
inline constexpr uint8_t kObsP0Wins = 0x01;
inline constexpr uint8_t kObsP1Wins = 0x02;
inline constexpr uint8_t kObsDrawBit = 0x80;

struct GameState {
  GameSpec spec;
  int round = 0;
  bool terminal = false;
  // Goofspiel: bit c-1 set iff card c is still in hand.
  std::array<uint32_t, 2> hand = {0, 0};
  // Oshi-Zumo.
  std::array<int, 2> coins = {0, 0};
  int pos = 0;

  std::vector<int> legal_actions(int player) const {
    SS_CHECK(!terminal, "legal_actions on a terminal state");
    std::vector<int> acts;
    if (spec.kind == GameKind::kGoofspiel) {
      for (int c = 1; c <= spec.goof_n; ++c)
        if (hand[player] & (1u << (c - 1))) acts.push_back(c - 1);
    } else {
      for (int b = 0; b <= coins[player]; ++b) acts.push_back(b);
    }
    return acts;
  }

  bool is_legal(int player, int action) const {
    if (action < 0 || action >= spec.num_actions()) return false;
    if (spec.kind == GameKind::kGoofspiel) return (hand[player] >> action) & 1u;
    return action <= coins[player];
  }

  // Applies a joint action. Throws on illegal input from either player.
  StepResult apply(int a0, int a1) {
    SS_CHECK(!terminal, "apply on a terminal state");
    if (!is_legal(0, a0)) throw std::invalid_argument("illegal action for player 0");
    if (!is_legal(1, a1)) throw std::invalid_argument("illegal action for player 1");
    StepResult out;
    out.priv_obs = {static_cast<uint8_t>(a0), static_cast<uint8_t>(a1)};
    if (spec.kind == GameKind::kGoofspiel) {
      int bid0 = a0 + 1, bid1 = a1 + 1;
      int prize = spec.goof_n - round;
      hand[0] &= ~(1u << a0);
      hand[1] &= ~(1u << a1);
      if (bid0 > bid1) {
        out.reward = prize;
        out.pub_obs = kObsP0Wins;
      } else if (bid1 > bid0) {
        out.reward = -prize;
        out.pub_obs = kObsP1Wins;
      } else {
        out.reward = 0.0;
        out.pub_obs = static_cast<uint8_t>(kObsDrawBit | bid0);
      }
      ++round;
      terminal = (round == spec.goof_n);
    } else {
      coins[0] -= a0;
      coins[1] -= a1;
      if (a0 > a1) ++pos;
      else if (a1 > a0) --pos;
      ++round;
      out.pub_obs = static_cast<uint8_t>(pos);
      terminal = (pos == 0 || pos == 2 * spec.oz_k || round == spec.oz_n ||
                  (coins[0] == 0 && coins[1] == 0));
      if (terminal) out.reward = static_cast<double>(pos - spec.oz_k) / spec.oz_k;
    }
    out.terminal = terminal;
    return out;
  }
};

inline GameState new_game(const GameSpec& spec) {
  GameState s;
  s.spec = spec;
  if (spec.kind == GameKind::kGoofspiel) {
    s.hand[0] = s.hand[1] = (1u << spec.goof_n) - 1;
  } else {
    s.coins = {spec.oz_n, spec.oz_n};
    s.pos = spec.oz_k;
  }
  return s;
}

// Key roots. Keys grow by appending length-prefixed per-step records, so a
// state's key is a prefix of every successor's key and equal information
// sequences produce byte-identical keys.
inline PublicKey root_public_key() { return std::string(1, '\x00'); }

inline InfosetKey root_infoset_key(int player) {
  return std::string(1, static_cast<char>(0x10 + player));
}

inline void append_public(PublicKey& key, uint8_t pub_obs) {
  append_record(key, {pub_obs});
}

// A player's per-step information: own action followed by the public signal.
inline void append_infoset(InfosetKey& key, uint8_t own_action, uint8_t pub_obs) {
  append_record(key, {own_action, pub_obs});
}

// Strips the private half of every step record, recovering the public key an
// infoset key refines.
inline PublicKey public_key_of(const InfosetKey& key) {
  SS_CHECK(!key.empty(), "empty infoset key");
  PublicKey pub = root_public_key();
  size_t pos = 1;
  while (pos < key.size()) {
    uint8_t len = static_cast<uint8_t>(key[pos]);
    SS_CHECK(len == 2 && pos + 2 < key.size(), "malformed infoset key");
    append_public(pub, static_cast<uint8_t>(key[pos + 2]));
    pos += 1 + len;
  }
  return pub;
}

}  // namespace simsolve

#endif  // SIMSOLVE_GAME_HPP
