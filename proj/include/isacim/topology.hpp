#pragma once

// Partially connected network topologies for the interference-management
// schemes: cyclic "neighboring antidotes" graphs and d-regular (Wyner-type)
// graphs, each in two flavors — "replace" (a K+1-user network whose last user
// is repurposed as the sensor) and "add" (a K-user network plus an extra
// sensing-only user whose connectivity is a strict subset of one receiver's).

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/common.hpp"

namespace isacim {

enum class TopologyKind {
  antidote_replace,
  antidote_add,
  regular_replace,
  regular_add,
  full,
};

inline std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::antidote_replace: return "antidote_replace";
    case TopologyKind::antidote_add: return "antidote_add";
    case TopologyKind::regular_replace: return "regular_replace";
    case TopologyKind::regular_add: return "regular_add";
    case TopologyKind::full: return "full";
  }
  return "?";
}

inline TopologyKind topology_kind_from_string(const std::string& s) {
  if (s == "antidote_replace") return TopologyKind::antidote_replace;
  if (s == "antidote_add") return TopologyKind::antidote_add;
  if (s == "regular_replace") return TopologyKind::regular_replace;
  if (s == "regular_add") return TopologyKind::regular_add;
  if (s == "full") return TopologyKind::full;
  throw config_error("unknown topology kind: " + s);
}

struct TopologyGraph {
  TopologyKind kind = TopologyKind::full;
  int K = 0;  // number of communication receivers
  int U = 0;
  int D = 0;
  int d = 0;
  int anchor = 1;  // receiver whose connectivity the add-mode sensor inherits
  int n_tx = 0;
  int n_users = 0;                    // communication receivers (sensor excluded)
  std::vector<std::vector<int>> Rc;   // Rc[k-1]: sorted transmitter set of receiver k
  std::vector<int> Rs;                // sorted transmitter set of the sensor

  bool connected(int rx, int tx) const {  // rx in 1..K
    const auto& s = Rc[rx - 1];
    return std::binary_search(s.begin(), s.end(), tx);
  }
  bool sensor_connected(int tx) const {
    return std::binary_search(Rs.begin(), Rs.end(), tx);
  }
};

namespace detail {

// Cyclic window {<start>_n, <start+1>_n, ..., <start+len-1>_n}, sorted.
inline std::vector<int> cyclic_window(int start, int len, int n) {
  std::set<int> s;
  for (int j = 0; j < len; ++j) s.insert(cyclic_residue(start + j, n));
  if (static_cast<int>(s.size()) != len)
    throw config_error("topology window wraps onto itself");
  return {s.begin(), s.end()};
}

}  // namespace detail

// (K', U, D) neighboring-antidotes connectivity for user j out of K' users:
// disconnected from the U preceding and D succeeding transmitters, i.e.
// R_j = {j, <j+D+1>, ..., <j-U-1>} (size K'-U-D), indices cyclic over K'.
inline std::vector<int> antidote_user_set(int j, int Kp, int U, int D) {
  std::set<int> s;
  s.insert(cyclic_residue(j, Kp));
  for (int t = j + D + 1; t <= j + Kp - U - 1; ++t) s.insert(cyclic_residue(t, Kp));
  return {s.begin(), s.end()};
}

inline TopologyGraph build_topology_antidote_replace(int K, int U, int D) {
  if (K < 1 || U < 0 || D < 0) throw config_error("antidote_replace: bad parameters");
  if (!(K + 1 > U + D)) throw config_error("antidote_replace: requires K+1 > U+D");
  if (!(D >= U)) throw config_error("antidote_replace: requires D >= U");
  TopologyGraph g;
  g.kind = TopologyKind::antidote_replace;
  g.K = K;
  g.U = U;
  g.D = D;
  g.n_tx = K + 1;
  g.n_users = K;
  g.Rc.resize(K);
  for (int k = 1; k <= K; ++k) g.Rc[k - 1] = antidote_user_set(k, K + 1, U, D);
  g.Rs = antidote_user_set(K + 1, K + 1, U, D);
  return g;
}

inline TopologyGraph build_topology_antidote_add(int K, int U, int D, int anchor = 1) {
  if (K < 1 || U < 0 || D < 0) throw config_error("antidote_add: bad parameters");
  if (!(K > U + D)) throw config_error("antidote_add: requires K > U+D");
  if (!(D >= U)) throw config_error("antidote_add: requires D >= U");
  if (anchor < 1 || anchor > K) throw config_error("antidote_add: anchor out of range");
  TopologyGraph g;
  g.kind = TopologyKind::antidote_add;
  g.K = K;
  g.U = U;
  g.D = D;
  g.anchor = anchor;
  g.n_tx = K;
  g.n_users = K;
  g.Rc.resize(K);
  for (int k = 1; k <= K; ++k) g.Rc[k - 1] = antidote_user_set(k, K, U, D);
  // Sensor inherits receiver `anchor`'s set minus its own transmitter:
  // {<anchor+D+1>, ..., <anchor-U-1>} cyclic over K, size K-U-D-1 (possibly 0).
  {
    std::set<int> s;
    for (int t = anchor + D + 1; t <= anchor + K - U - 1; ++t)
      s.insert(cyclic_residue(t, K));
    g.Rs.assign(s.begin(), s.end());
  }
  return g;
}

inline TopologyGraph build_topology_regular_replace(int K, int d) {
  if (K < 1) throw config_error("regular_replace: bad K");
  if (d < 1 || d > K) throw config_error("regular_replace: requires 1 <= d <= K");
  TopologyGraph g;
  g.kind = TopologyKind::regular_replace;
  g.K = K;
  g.d = d;
  g.n_tx = K + 1;
  g.n_users = K;
  g.Rc.resize(K);
  for (int k = 1; k <= K; ++k) g.Rc[k - 1] = detail::cyclic_window(k, d, K + 1);
  g.Rs = detail::cyclic_window(K + 1, d, K + 1);
  return g;
}

inline TopologyGraph build_topology_regular_add(int K, int d, int anchor = 1) {
  if (K < 1) throw config_error("regular_add: bad K");
  if (d < 1 || d > K) throw config_error("regular_add: requires 1 <= d <= K");
  if (anchor < 1 || anchor > K) throw config_error("regular_add: anchor out of range");
  TopologyGraph g;
  g.kind = TopologyKind::regular_add;
  g.K = K;
  g.d = d;
  g.anchor = anchor;
  g.n_tx = K;
  g.n_users = K;
  g.Rc.resize(K);
  for (int k = 1; k <= K; ++k) g.Rc[k - 1] = detail::cyclic_window(k, d, K);
  // Sensor takes receiver `anchor`'s set with the leading element removed:
  // {<anchor+1>, ..., <anchor+d-1>}, size d-1 (empty when d = 1).
  if (d >= 2)
    g.Rs = detail::cyclic_window(anchor + 1, d - 1, K);
  return g;
}

inline TopologyGraph build_topology_full(int K) {
  if (K < 1) throw config_error("full: bad K");
  TopologyGraph g;
  g.kind = TopologyKind::full;
  g.K = K;
  g.n_tx = K;
  g.n_users = K;
  g.Rc.resize(K);
  std::vector<int> all(K);
  for (int i = 0; i < K; ++i) all[i] = i + 1;
  for (int k = 0; k < K; ++k) g.Rc[k] = all;
  g.Rs = all;
  return g;
}

inline nlohmann::json topology_to_json(const TopologyGraph& g) {
  nlohmann::json j;
  j["kind"] = to_string(g.kind);
  j["K"] = g.K;
  if (g.kind == TopologyKind::antidote_replace || g.kind == TopologyKind::antidote_add) {
    j["U"] = g.U;
    j["D"] = g.D;
  } else if (g.kind != TopologyKind::full) {
    j["d"] = g.d;
  }
  j["Rc"] = g.Rc;
  j["Rs"] = g.Rs;
  return j;
}

inline TopologyGraph topology_from_json(const nlohmann::json& j) {
  TopologyKind kind = topology_kind_from_string(j.at("kind").get<std::string>());
  int K = j.at("K").get<int>();
  switch (kind) {
    case TopologyKind::antidote_replace:
      return build_topology_antidote_replace(K, j.at("U").get<int>(), j.at("D").get<int>());
    case TopologyKind::antidote_add:
      return build_topology_antidote_add(K, j.at("U").get<int>(), j.at("D").get<int>());
    case TopologyKind::regular_replace:
      return build_topology_regular_replace(K, j.at("d").get<int>());
    case TopologyKind::regular_add:
      return build_topology_regular_add(K, j.at("d").get<int>());
    case TopologyKind::full:
      return build_topology_full(K);
  }
  throw config_error("topology_from_json: bad kind");
}

}  // namespace isacim
