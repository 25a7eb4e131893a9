#pragma once

// Sensing/communication degrees-of-freedom bookkeeping: closed-form scheme
// points as exact rationals, the Pareto-dominant upper boundary over a point
// set, and time-sharing chord comparisons. All arithmetic is exact until a
// caller asks for doubles.

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/common.hpp"
#include "isacim/rational.hpp"

namespace isacim {

struct TradeoffPoint {
  Rational sdof;      // effective sensing observations per slot
  Rational cdof;      // decoded message symbols per slot, summed over receivers
  std::string label;  // scheme identifier; ignored by comparisons

  friend bool operator==(const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.sdof == b.sdof && a.cdof == b.cdof;
  }
  friend bool operator!=(const TradeoffPoint& a, const TradeoffPoint& b) {
    return !(a == b);
  }
  std::string str() const { return "(" + sdof.str() + ", " + cdof.str() + ")"; }
};

enum class SchemeFamily {
  bia_ic,        // K-user SISO interference channel, fast comm fading
  bia_miso,      // single m-antenna transmitter, K single-antenna users
  bia_mimo,      // single m-antenna transmitter, users with n_k antennas
  tim_antidote,  // neighboring-antidotes connectivity
  tim_regular,   // d-regular connectivity
};

inline std::string to_string(SchemeFamily s) {
  switch (s) {
    case SchemeFamily::bia_ic: return "bia_ic";
    case SchemeFamily::bia_miso: return "bia_miso";
    case SchemeFamily::bia_mimo: return "bia_mimo";
    case SchemeFamily::tim_antidote: return "tim_antidote";
    case SchemeFamily::tim_regular: return "tim_regular";
  }
  return "?";
}

inline SchemeFamily scheme_family_from_string(const std::string& s) {
  if (s == "bia_ic") return SchemeFamily::bia_ic;
  if (s == "bia_miso") return SchemeFamily::bia_miso;
  if (s == "bia_mimo") return SchemeFamily::bia_mimo;
  if (s == "tim_antidote") return SchemeFamily::tim_antidote;
  if (s == "tim_regular") return SchemeFamily::tim_regular;
  throw config_error("unknown scheme: " + s);
}

struct SchemeParams {
  SchemeFamily family = SchemeFamily::bia_ic;
  int K = 3;
  int m = 1;               // transmit antennas (miso/mimo)
  std::vector<int> n;      // receive antennas per user (mimo)
  int U = 0, D = 0;        // antidote connectivity
  int d = 1;               // regular connectivity
  bool add_mode = false;   // sensor added to a K-user graph vs replacing user K+1
};

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Closed-form trade-off point for each scheme family.
inline TradeoffPoint scheme_point_unlabeled(const SchemeParams& p) {
  switch (p.family) {
    case SchemeFamily::bia_ic: {
      if (p.K < 2) throw infeasible_error("bia_ic: need K >= 2");
      return {Rational(p.K - 1, p.K), Rational(1), ""};
    }
    case SchemeFamily::bia_miso: {
      if (p.K < 1 || p.m <= p.K)
        throw infeasible_error("bia_miso: need m > K transmit antennas");
      int a = ceil_div(p.m, p.K);
      return {Rational(a - 1, a), Rational(p.m, a), ""};
    }
    case SchemeFamily::bia_mimo: {
      int sum_n = 0;
      for (int nk : p.n) sum_n += nk;
      if (p.n.empty() || p.m <= sum_n)
        throw infeasible_error("bia_mimo: need m > sum of receive antennas");
      int a = ceil_div(p.m, sum_n);
      return {Rational(a - 1, a), Rational(p.m, a), ""};
    }
    case SchemeFamily::tim_antidote: {
      int L = p.add_mode ? (p.K - p.D + p.U) : (p.K - p.D + p.U + 1);
      if (L < 1) throw infeasible_error("tim_antidote: empty block");
      return {Rational(p.U + 1, L), Rational(static_cast<std::int64_t>(p.K) * (p.U + 1), L), ""};
    }
    case SchemeFamily::tim_regular: {
      if (p.d < 1) throw infeasible_error("tim_regular: need d >= 1");
      Rational sdof = p.add_mode ? Rational(1, p.d + 1) : Rational(2, p.d + 1);
      return {sdof, Rational(2LL * p.K, p.d + 1), ""};
    }
  }
  throw config_error("scheme_point: bad family");
}

inline TradeoffPoint scheme_point(const SchemeParams& p) {
  TradeoffPoint pt = scheme_point_unlabeled(p);
  pt.label = to_string(p.family);
  return pt;
}

// Corner points from the achievability statements: sensing-only (1, 0) and the
// communication-only extreme for the same network.
inline TradeoffPoint sensing_only_point() {
  return {Rational(1), Rational(0), "sensing_only"};
}

inline TradeoffPoint comm_only_point(const SchemeParams& p) {
  const std::string label = "comm_only";
  switch (p.family) {
    case SchemeFamily::bia_ic:
      return {Rational(0), Rational(1), label};
    case SchemeFamily::bia_miso:
      return {Rational(0), Rational(std::min(p.m, p.K)), label};
    case SchemeFamily::bia_mimo: {
      int sum_n = 0;
      for (int nk : p.n) sum_n += nk;
      return {Rational(0), Rational(std::min(p.m, sum_n)), label};
    }
    case SchemeFamily::tim_antidote: {
      int L = p.add_mode ? (p.K - p.D + p.U) : (p.K - p.D + p.U + 1);
      return {Rational(0), Rational(static_cast<std::int64_t>(p.K) * (p.U + 1), L), label};
    }
    case SchemeFamily::tim_regular:
      return {Rational(0), Rational(2LL * p.K, p.d + 1), label};
  }
  throw config_error("comm_only_point: bad family");
}

// Pareto-dominant upper boundary of a point set: the concave upper hull in the
// (sdof, cdof) plane restricted to vertices that are not dominated by any
// other point. Input points need not be distinct or sorted.
inline std::vector<TradeoffPoint> pareto_hull(std::vector<TradeoffPoint> pts) {
  if (pts.empty()) return pts;
  std::sort(pts.begin(), pts.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.sdof != b.sdof) return a.sdof < b.sdof;
    return a.cdof < b.cdof;
  });
  // Keep, per sdof, only the highest cdof.
  std::vector<TradeoffPoint> uniq;
  for (auto& p : pts) {
    if (!uniq.empty() && uniq.back().sdof == p.sdof)
      uniq.back() = p;
    else
      uniq.push_back(p);
  }
  // Upper concave chain left-to-right. Cross product in exact arithmetic:
  // keep b if (b-a) x (c-a) > 0 (b strictly above chord a-c).
  auto above = [](const TradeoffPoint& a, const TradeoffPoint& b, const TradeoffPoint& c) {
    Rational cross = (b.sdof - a.sdof) * (c.cdof - a.cdof) -
                     (b.cdof - a.cdof) * (c.sdof - a.sdof);
    return cross < Rational(0);  // b lies strictly above segment a-c
  };
  std::vector<TradeoffPoint> hull;
  for (auto& p : uniq) {
    while (hull.size() >= 2 && !above(hull[hull.size() - 2], hull.back(), p))
      hull.pop_back();
    hull.push_back(p);
  }
  // Collinear interior points were popped, so the vertex list is minimal;
  // endpoints always survive (achievable corner points stay visible even when
  // a plateau makes the left endpoint weakly dominated).
  return hull;
}

// cdof of the chord between two points evaluated at a given sdof.
inline Rational chord_cdof(const TradeoffPoint& a, const TradeoffPoint& b,
                           const Rational& sdof) {
  if (a.sdof == b.sdof) throw config_error("chord_cdof: degenerate chord");
  // Linear interpolation: c = a.c + (s - a.s) * (b.c - a.c)/(b.s - a.s)
  return a.cdof + (sdof - a.sdof) * (b.cdof - a.cdof) / (b.sdof - a.sdof);
}

// Vertical gap between a scheme point and the time-sharing chord through two
// extreme points, at the scheme point's sdof. Positive = the point beats
// time sharing.
inline Rational compare_time_sharing(const TradeoffPoint& point, const TradeoffPoint& ext_a,
                                     const TradeoffPoint& ext_b) {
  return point.cdof - chord_cdof(ext_a, ext_b, point.sdof);
}

struct HullReport {
  std::vector<TradeoffPoint> vertices;
  std::vector<Rational> gaps;  // per interior vertex: cdof above the end-to-end chord
};

// Hull plus, for each interior vertex, its cdof advantage over the single
// chord connecting the two extreme hull vertices.
inline HullReport hull_report(const std::vector<TradeoffPoint>& pts) {
  HullReport rep;
  rep.vertices = pareto_hull(pts);
  if (rep.vertices.size() >= 3) {
    const auto& lo = rep.vertices.front();
    const auto& hi = rep.vertices.back();
    for (std::size_t i = 1; i + 1 < rep.vertices.size(); ++i)
      rep.gaps.push_back(rep.vertices[i].cdof - chord_cdof(lo, hi, rep.vertices[i].sdof));
  }
  return rep;
}

inline nlohmann::json hull_report_to_json(const HullReport& rep) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : rep.vertices)
    j["vertices"].push_back({v.sdof.num, v.sdof.den, v.cdof.num, v.cdof.den});
  j["gaps"] = nlohmann::json::array();
  for (const auto& g : rep.gaps) j["gaps"].push_back({g.num, g.den});
  return j;
}

}  // namespace isacim
