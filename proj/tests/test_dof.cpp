#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "isacim/common.hpp"
#include "isacim/dof.hpp"

using namespace isacim;

namespace {

SchemeParams ic(int K) {
  SchemeParams p;
  p.family = SchemeFamily::bia_ic;
  p.K = K;
  return p;
}

SchemeParams miso(int m, int K) {
  SchemeParams p;
  p.family = SchemeFamily::bia_miso;
  p.m = m;
  p.K = K;
  return p;
}

SchemeParams mimo(int m, std::vector<int> n) {
  SchemeParams p;
  p.family = SchemeFamily::bia_mimo;
  p.m = m;
  p.n = std::move(n);
  p.K = static_cast<int>(p.n.size());
  return p;
}

SchemeParams antidote(int K, int U, int D, bool add) {
  SchemeParams p;
  p.family = SchemeFamily::tim_antidote;
  p.K = K;
  p.U = U;
  p.D = D;
  p.add_mode = add;
  return p;
}

SchemeParams regular(int K, int d, bool add) {
  SchemeParams p;
  p.family = SchemeFamily::tim_regular;
  p.K = K;
  p.d = d;
  p.add_mode = add;
  return p;
}

}  // namespace

TEST_CASE("per-scheme trade-off points", "[dof]") {
  REQUIRE(scheme_point(ic(2)) == TradeoffPoint{Rational(1, 2), Rational(1), ""});
  REQUIRE(scheme_point(ic(3)) == TradeoffPoint{Rational(2, 3), Rational(1), ""});
  REQUIRE(scheme_point(ic(5)) == TradeoffPoint{Rational(4, 5), Rational(1), ""});

  // Broadcast rounds: a = ceil(m / total receive antennas).
  REQUIRE(scheme_point(miso(4, 3)) == TradeoffPoint{Rational(1, 2), Rational(2), ""});
  REQUIRE(scheme_point(miso(6, 3)) == TradeoffPoint{Rational(1, 2), Rational(3), ""});
  REQUIRE(scheme_point(mimo(5, {2, 2})) ==
          TradeoffPoint{Rational(1, 2), Rational(5, 2), ""});

  REQUIRE(scheme_point(antidote(5, 1, 2, false)) ==
          TradeoffPoint{Rational(2, 5), Rational(2), ""});
  REQUIRE(scheme_point(antidote(6, 2, 2, false)) ==
          TradeoffPoint{Rational(3, 7), Rational(18, 7), ""});
  REQUIRE(scheme_point(antidote(6, 1, 2, false)) ==
          TradeoffPoint{Rational(1, 3), Rational(2), ""});
  REQUIRE(scheme_point(antidote(5, 1, 1, true)) ==
          TradeoffPoint{Rational(2, 5), Rational(2), ""});

  REQUIRE(scheme_point(regular(5, 3, false)) ==
          TradeoffPoint{Rational(1, 2), Rational(5, 2), ""});
  REQUIRE(scheme_point(regular(5, 2, true)) ==
          TradeoffPoint{Rational(1, 3), Rational(10, 3), ""});
}

TEST_CASE("extreme points", "[dof]") {
  REQUIRE(sensing_only_point() == TradeoffPoint{Rational(1), Rational(0), ""});
  REQUIRE(comm_only_point(ic(3)) == TradeoffPoint{Rational(0), Rational(1), ""});
  REQUIRE(comm_only_point(miso(4, 3)) == TradeoffPoint{Rational(0), Rational(3), ""});
  REQUIRE(comm_only_point(miso(6, 3)) == TradeoffPoint{Rational(0), Rational(3), ""});
  REQUIRE(comm_only_point(mimo(5, {2, 2})) == TradeoffPoint{Rational(0), Rational(4), ""});
  REQUIRE(comm_only_point(antidote(5, 1, 2, false)) ==
          TradeoffPoint{Rational(0), Rational(2), ""});
  REQUIRE(comm_only_point(regular(5, 3, false)) ==
          TradeoffPoint{Rational(0), Rational(5, 2), ""});
}

TEST_CASE("points carry a scheme label that comparisons ignore", "[dof]") {
  TradeoffPoint p = scheme_point(ic(3));
  REQUIRE(p.label == "bia_ic");
  REQUIRE(scheme_point(antidote(5, 1, 2, false)).label == "tim_antidote");
  REQUIRE(sensing_only_point().label == "sensing_only");
  REQUIRE(comm_only_point(ic(3)).label == "comm_only");
  REQUIRE(p.str() == "(2/3, 1)");
}

TEST_CASE("hull for the 3-user fully connected network", "[dof]") {
  std::vector<TradeoffPoint> pts = {sensing_only_point(), scheme_point(ic(3)),
                                    comm_only_point(ic(3))};
  HullReport rep = hull_report(pts);
  REQUIRE(rep.vertices.size() == 3);
  REQUIRE(rep.vertices[0] == TradeoffPoint{Rational(0), Rational(1), ""});
  REQUIRE(rep.vertices[1] == TradeoffPoint{Rational(2, 3), Rational(1), ""});
  REQUIRE(rep.vertices[2] == TradeoffPoint{Rational(1), Rational(0), ""});
  REQUIRE(rep.gaps.size() == 1);
  REQUIRE(rep.gaps[0] == Rational(2, 3));
}

TEST_CASE("time-sharing comparison is exact", "[dof]") {
  TradeoffPoint p = scheme_point(ic(3));
  // Against the straight line between the two extreme points.
  REQUIRE(compare_time_sharing(p, comm_only_point(ic(3)), sensing_only_point()) ==
          Rational(2, 3));
  // Against sharing with a half-duplex point (0, K/2): the chord only reaches
  // a symbol rate of 1/2 where the scheme delivers 1.
  TradeoffPoint half{Rational(0), Rational(3, 2), ""};
  REQUIRE(chord_cdof(half, sensing_only_point(), Rational(2, 3)) == Rational(1, 2));
  REQUIRE(compare_time_sharing(p, half, sensing_only_point()) == Rational(1, 2));
}

TEST_CASE("hull keeps achievable corner points on plateaus", "[dof]") {
  // Weakly dominated left endpoint: same cdof as an interior point.
  std::vector<TradeoffPoint> pts = {{Rational(0), Rational(1), ""},
                                    {Rational(2, 3), Rational(1), ""},
                                    {Rational(1), Rational(0), ""}};
  auto hull = pareto_hull(pts);
  REQUIRE(hull.size() == 3);

  // Duplicate sdof: only the larger cdof survives.
  pts = {{Rational(1, 2), Rational(1), ""}, {Rational(1, 2), Rational(2), ""}};
  hull = pareto_hull(pts);
  REQUIRE(hull.size() == 1);
  REQUIRE(hull[0].cdof == Rational(2));

  // A point strictly below the chord is dropped.
  pts = {{Rational(0), Rational(2), ""},
         {Rational(1, 2), Rational(1, 2), ""},
         {Rational(1), Rational(0), ""}};
  hull = pareto_hull(pts);
  REQUIRE(hull.size() == 2);

  REQUIRE(pareto_hull({}).empty());
  REQUIRE_THROWS_AS(chord_cdof(pts[0], TradeoffPoint{Rational(0), Rational(5), ""},
                               Rational(1, 2)),
                    config_error);
}

TEST_CASE("hull report serializes rationals losslessly", "[dof]") {
  HullReport rep = hull_report(
      {sensing_only_point(), scheme_point(ic(3)), comm_only_point(ic(3))});
  nlohmann::json j = hull_report_to_json(rep);
  REQUIRE(j["vertices"].size() == 3);
  REQUIRE(j["vertices"][1][0] == 2);
  REQUIRE(j["vertices"][1][1] == 3);
  REQUIRE(j["vertices"][1][2] == 1);
  REQUIRE(j["vertices"][1][3] == 1);
  REQUIRE(j["gaps"][0][0] == 2);
  REQUIRE(j["gaps"][0][1] == 3);
}

TEST_CASE("family names round-trip", "[dof]") {
  for (SchemeFamily f : {SchemeFamily::bia_ic, SchemeFamily::bia_miso,
                         SchemeFamily::bia_mimo, SchemeFamily::tim_antidote,
                         SchemeFamily::tim_regular})
    REQUIRE(scheme_family_from_string(to_string(f)) == f);
  REQUIRE_THROWS_AS(scheme_family_from_string("nope"), config_error);
}
