#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "isacim/baselines.hpp"
#include "isacim/pilots.hpp"
#include "isacim/rng.hpp"

using namespace isacim;

namespace {

// Independent oracle for differentially detected 4-ary PSK over AWGN: the
// single-integral form of the symbol error probability,
//   P = sin(pi/M)/(2 pi) * INT_{-pi/2}^{pi/2}
//         exp(-g (1 - cos(pi/M) cos t)) / (1 - cos(pi/M) cos t) dt,
// evaluated with Simpson's rule.
double ddpsk4_ser_theory(double gamma) {
  const double c = std::cos(kPi / 4.0);
  auto f = [&](double t) {
    double den = 1.0 - c * std::cos(t);
    return std::exp(-gamma * den) / den;
  };
  const int n = 4000;
  const double a = -kPi / 2.0, b = kPi / 2.0;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
  return std::sin(kPi / 4.0) / (2.0 * kPi) * acc * h / 3.0;
}

// Slot-rate pilot schedule: columns of X cycled across T slots.
MatC cycle_pilots(const MatC& X, int T, double amp) {
  MatC Xs(X.rows(), T);
  for (int n = 0; n < T; ++n) Xs.col(n) = amp * X.col(n % X.cols());
  return Xs;
}

std::vector<cxd> chain_with_reference(const std::vector<int>& idx, double ref_phase) {
  std::vector<cxd> w;
  w.reserve(idx.size() + 1);
  w.push_back(std::polar(1.0, ref_phase));
  std::vector<cxd> data = dqpsk_modulate(idx, ref_phase);
  w.insert(w.end(), data.begin(), data.end());
  return w;
}

}  // namespace

TEST_CASE("differential modulation accumulates quarter turns", "[baselines]") {
  std::vector<cxd> s = dqpsk_modulate({1, 2}, 0.0);
  REQUIRE(s.size() == 2);
  REQUIRE(std::abs(s[0] - cxd(0.0, 1.0)) < 1e-15);
  REQUIRE(std::abs(s[1] - cxd(0.0, -1.0)) < 1e-15);
  std::vector<cxd> t = dqpsk_modulate({0, 3}, kPi / 2.0);
  REQUIRE(std::abs(t[0] - cxd(0.0, 1.0)) < 1e-15);
  REQUIRE(std::abs(t[1] - cxd(1.0, 0.0)) < 1e-14);
  REQUIRE_THROWS_AS(dqpsk_modulate({4}, 0.0), config_error);
}

TEST_CASE("detection ties resolve to the smaller index", "[baselines]") {
  // A phase step of pi/4 sits exactly between indices 0 and 1.
  std::vector<cxd> y = {cxd(1.0, 0.0), std::polar(1.0, kPi / 4.0)};
  REQUIRE(dqpsk_differential_detect(y) == std::vector<int>{0});
  std::vector<cxd> y2 = {cxd(1.0, 0.0), std::polar(1.0, 3.0 * kPi / 4.0)};
  REQUIRE(dqpsk_differential_detect(y2) == std::vector<int>{1});
  REQUIRE_THROWS_AS(dqpsk_differential_detect({cxd(1.0, 0.0)}), config_error);
}

TEST_CASE("detect inverts modulate", "[baselines]") {
  PhiloxStream rng(41, StreamPurpose::messages, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    double ref = rng.uniform_range(-kPi, kPi);
    std::vector<int> idx(200);
    for (auto& a : idx) a = static_cast<int>(rng.uniform() * 4.0);
    std::vector<cxd> w = chain_with_reference(idx, ref);
    REQUIRE(dqpsk_differential_detect(w) == idx);
  }
}

TEST_CASE("detector error rate matches the closed-form oracle", "[baselines]") {
  for (double gamma : {5.0, 10.0}) {
    const double sigma = std::sqrt(1.0 / gamma);
    const int n_sym = 200000;
    PhiloxStream mrng(42, StreamPurpose::messages, 0, 0);
    PhiloxStream nrng(42, StreamPurpose::noise, 0, 0);
    std::vector<int> idx(n_sym);
    for (auto& a : idx) a = static_cast<int>(mrng.uniform() * 4.0);
    std::vector<cxd> w = chain_with_reference(idx, 0.0);
    for (auto& s : w) s += sigma * nrng.cgauss();
    std::vector<int> det = dqpsk_differential_detect(w);
    long long errs = 0;
    for (int i = 0; i < n_sym; ++i)
      if (det[i] != idx[i]) ++errs;
    double ser = static_cast<double>(errs) / n_sym;
    double want = ddpsk4_ser_theory(gamma);
    CAPTURE(gamma, ser, want);
    REQUIRE(std::abs(ser - want) <= 0.08 * want);
  }
}

TEST_CASE("pilots-only estimator: clean pilots give the exact channel", "[baselines]") {
  MatC X = generate_pilots(1, 8);
  MatC Xs = cycle_pilots(X, 64, 1.0);
  MatC h(1, 1);
  h(0, 0) = cxd(0.8, -0.3);
  // Zero communication power, zero noise: the estimate is the channel itself.
  MatC y = h * Xs;
  MatC hh = tin_sensor_estimate(y, Xs);
  REQUIRE(cee(h, hh) < 1e-24);
}

TEST_CASE("pilots-only estimator floors on communication interference", "[baselines]") {
  const int T = 64;
  MatC X = generate_pilots(1, 8);
  MatC Xs = cycle_pilots(X, T, 1.0);
  MatC h(1, 1);
  h(0, 0) = cxd(0.8, -0.3);
  const cxd g(0.55, 0.4);

  PhiloxStream mrng(43, StreamPurpose::messages, 0, 0);
  std::vector<int> idx(T - 1);
  for (auto& a : idx) a = static_cast<int>(mrng.uniform() * 4.0);
  std::vector<cxd> w = chain_with_reference(idx, 0.0);

  PhiloxStream nrng(43, StreamPurpose::noise, 0, 0);
  std::vector<cxd> z(T);
  for (auto& v : z) v = nrng.cgauss();

  auto cee_at = [&](double comm_scale, double sigma) {
    MatC y(1, T);
    for (int n = 0; n < T; ++n)
      y(0, n) = (h * Xs.col(n))(0, 0) + comm_scale * g * w[n] + sigma * z[n];
    return cee(h, tin_sensor_estimate(y, Xs));
  };

  // Interference floor: between 30 and 35 dB the error barely moves.
  double c30 = cee_at(1.0, std::pow(10.0, -30.0 / 20.0));
  double c35 = cee_at(1.0, std::pow(10.0, -35.0 / 20.0));
  REQUIRE(std::abs(10.0 * std::log10(c30 / c35)) <= 3.0);

  // And the floor grows with the communication-to-sensing power ratio.
  double lo = cee_at(0.5, 1e-4);
  double mid = cee_at(1.0, 1e-4);
  double hi = cee_at(2.0, 1e-4);
  REQUIRE(lo < mid);
  REQUIRE(mid < hi);
}

TEST_CASE("cancellation estimator is exact under perfect detection", "[baselines]") {
  const int T = 64;
  MatC X = generate_pilots(1, 8);
  MatC Xs = cycle_pilots(X, T, 0.05);  // weak pilots keep detection clean
  MatC h(1, 1);
  h(0, 0) = cxd(-0.4, 0.9);
  const cxd g(1.0, 0.0);

  PhiloxStream mrng(44, StreamPurpose::messages, 0, 0);
  std::vector<int> idx(T - 1);
  for (auto& a : idx) a = static_cast<int>(mrng.uniform() * 4.0);
  std::vector<cxd> w = chain_with_reference(idx, 0.0);

  MatC y(1, T);
  for (int n = 0; n < T; ++n) y(0, n) = (h * Xs.col(n))(0, 0) + g * w[n];

  SicEstimate est = sic_sensor_estimate(y, Xs, 0.0);
  REQUIRE_FALSE(est.used_fallback);
  REQUIRE(est.detected == idx);
  REQUIRE(cee(h, est.h_hat) < 1e-18);
}

TEST_CASE("cancellation estimator handles symbols spanning several slots", "[baselines]") {
  const int span = 4, n_sym = 16, T = span * (n_sym + 1);
  MatC X = generate_pilots(2, 8);
  MatC Xs = cycle_pilots(X, T, 0.05);
  MatC h(1, 2);
  h << cxd(0.6, 0.1), cxd(-0.2, 0.7);
  const cxd g(1.0, 0.0);

  PhiloxStream mrng(45, StreamPurpose::messages, 0, 0);
  std::vector<int> idx(n_sym);
  for (auto& a : idx) a = static_cast<int>(mrng.uniform() * 4.0);
  std::vector<cxd> w_sym = chain_with_reference(idx, 0.0);

  MatC y(1, T);
  for (int n = 0; n < T; ++n)
    y(0, n) = (h * Xs.col(n))(0, 0) + g * w_sym[n / span];

  SicEstimate est = sic_sensor_estimate(y, Xs, 0.0, span);
  REQUIRE_FALSE(est.used_fallback);
  REQUIRE(est.detected == idx);
  REQUIRE(cee(h, est.h_hat) < 1e-18);

  REQUIRE_THROWS_AS(sic_sensor_estimate(y, Xs, 0.0, 0), config_error);
  REQUIRE_THROWS_AS(sic_sensor_estimate(y, Xs, 0.0, 5), config_error);
}

TEST_CASE("cancellation estimator falls back when the joint fit degenerates",
          "[baselines]") {
  // Constant pilots and an all-ones detected chain are colinear: the joint
  // matrix loses rank and the estimator reports the pilots-only fit.
  const int T = 16;
  MatC Xs = MatC::Constant(1, T, cxd(0.3, 0.0));
  MatC h(1, 1);
  h(0, 0) = cxd(0.7, 0.2);
  MatC y(1, T);
  for (int n = 0; n < T; ++n) y(0, n) = (h * Xs.col(n))(0, 0) + cxd(0.5, 0.0);

  SicEstimate est = sic_sensor_estimate(y, Xs, 0.0);
  REQUIRE(est.used_fallback);
  MatC tin = tin_sensor_estimate(y, Xs);
  REQUIRE((est.h_hat - tin).norm() == 0.0);

  std::vector<cxd> short_w(3, cxd(1.0, 0.0));
  REQUIRE_THROWS_AS(sic_with_known_symbols(y, Xs, short_w), config_error);
}

TEST_CASE("knowing the true symbols never hurts the joint fit", "[baselines]") {
  // Frozen-seed comparison on the scalar model: with perfect detection the
  // pipeline coincides with the known-symbol fit exactly, and detection
  // errors cost accuracy on average.
  const int T = 64;
  MatC X = generate_pilots(2, 8);
  MatC Xs = cycle_pilots(X, T, 0.4);
  const cxd g(0.9, 0.0);
  const double sigma = 0.18;

  int trials_with_errors = 0;
  int trials_perfect = 0;
  double mean_sic = 0.0, mean_genie = 0.0;
  const int n_trials = 40;
  for (int trial = 0; trial < n_trials; ++trial) {
    PhiloxStream hrng(46, StreamPurpose::channel_sensor, trial, 0);
    MatC h(1, 2);
    h(0, 0) = hrng.cgauss();
    h(0, 1) = hrng.cgauss();

    PhiloxStream mrng(46, StreamPurpose::messages, trial, 0);
    std::vector<int> idx(T - 1);
    for (auto& a : idx) a = static_cast<int>(mrng.uniform() * 4.0);
    std::vector<cxd> w = chain_with_reference(idx, 0.0);

    PhiloxStream nrng(46, StreamPurpose::noise, trial, 0);
    MatC y(1, T);
    for (int n = 0; n < T; ++n)
      y(0, n) = (h * Xs.col(n))(0, 0) + g * w[n] + sigma * nrng.cgauss();

    SicEstimate sic = sic_sensor_estimate(y, Xs, 0.0);
    SicEstimate genie = sic_with_known_symbols(y, Xs, w);
    double cee_sic = cee(h, sic.h_hat);
    double cee_genie = cee(h, genie.h_hat);
    mean_sic += cee_sic / n_trials;
    mean_genie += cee_genie / n_trials;
    if (sic.detected == idx) {
      ++trials_perfect;
      REQUIRE(std::abs(cee_sic - cee_genie) < 1e-18);
    } else {
      ++trials_with_errors;
    }
  }
  // The noise level is chosen so both branches are exercised.
  REQUIRE(trials_perfect > 0);
  REQUIRE(trials_with_errors > 0);
  REQUIRE(mean_sic >= mean_genie - 1e-18);
}

TEST_CASE("angle wrapping", "[baselines]") {
  REQUIRE(wrap_angle(0.0) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(wrap_angle(3.0 * kPi) == Catch::Approx(kPi).margin(1e-12));
  REQUIRE(wrap_angle(-kPi / 2.0) == Catch::Approx(-kPi / 2.0).margin(1e-15));
  REQUIRE(wrap_angle(2.0 * kPi + 0.3) == Catch::Approx(0.3).margin(1e-12));
}
