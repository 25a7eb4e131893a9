#pragma once

// Reference receivers the simulator compares against: differential QPSK
// modulation/detection, and two sensor-side channel estimators that operate
// on a composite pilot + communication observation. "Treat as noise" runs a
// least-squares fit against the pilots alone; the cancellation estimator
// detects the communication symbols first and fits pilots and detected
// symbols jointly.

#include <cmath>
#include <vector>

#include "isacim/common.hpp"
#include "isacim/pilots.hpp"

namespace isacim {

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double x) {
  double w = std::fmod(x + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

// s_n = s_{n-1} * exp(j*2*pi*a_n/4) with s_0 = exp(j*ref_phase). Returns the
// data-bearing symbols s_1..s_len; the caller transmits the reference symbol
// itself.
inline std::vector<cxd> dqpsk_modulate(const std::vector<int>& indices, double ref_phase) {
  std::vector<cxd> out;
  out.reserve(indices.size());
  cxd prev = std::polar(1.0, ref_phase);
  for (int a : indices) {
    if (a < 0 || a > 3) throw config_error("dqpsk_modulate: symbol index out of range");
    cxd s = prev * std::polar(1.0, kPi * 0.5 * static_cast<double>(a));
    out.push_back(s);
    prev = s;
  }
  return out;
}

// Nearest-index detection on phase differences of consecutive observations.
// Ties resolve to the smaller index.
inline std::vector<int> dqpsk_differential_detect(const std::vector<cxd>& y) {
  if (y.size() < 2) throw config_error("dqpsk_differential_detect: need at least two symbols");
  std::vector<int> out;
  out.reserve(y.size() - 1);
  for (std::size_t n = 1; n < y.size(); ++n) {
    double dphi = wrap_angle(std::arg(y[n]) - std::arg(y[n - 1]));
    int best = 0;
    double best_d = std::abs(wrap_angle(dphi));
    for (int k = 1; k < 4; ++k) {
      double d = std::abs(wrap_angle(dphi - kPi * 0.5 * static_cast<double>(k)));
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    out.push_back(best);
  }
  return out;
}

// --- sensor-side estimators ---------------------------------------------------
//
// Observation model per slot n: y(n) = h * x(n) + g * w(n) + z(n), with
// x(n) the known per-slot pilot column (X_slots column n), w(n) a unit-modulus
// communication symbol and g its unknown effective gain.

// Least squares against the pilots alone; the communication term stays in the
// residual and floors the estimate.
inline MatC tin_sensor_estimate(const MatC& y, const MatC& X_slots) {
  return ls_estimate(y, X_slots);
}

struct SicEstimate {
  MatC h_hat;                 // 1 x m'
  bool used_fallback = false; // joint matrix was rank deficient; pilots-only fit
  std::vector<int> detected;  // detected symbol indices (empty for the fallback-only path)
};

// Joint least squares over pilots plus a known (or hypothesized) unit-modulus
// communication chain w of length T. Returns the sensing block of the joint
// fit; falls back to the pilots-only fit when the stacked matrix is rank
// deficient.
inline SicEstimate sic_with_known_symbols(const MatC& y, const MatC& X_slots,
                                          const std::vector<cxd>& w) {
  if (static_cast<int>(w.size()) != X_slots.cols())
    throw config_error("sic estimator: symbol chain length disagrees with the block");
  MatC A(X_slots.rows() + 1, X_slots.cols());
  A.topRows(X_slots.rows()) = X_slots;
  for (std::size_t n = 0; n < w.size(); ++n) A(X_slots.rows(), n) = w[n];
  SicEstimate est;
  try {
    MatC joint = ls_estimate(y, A);
    est.h_hat = joint.leftCols(X_slots.rows());
  } catch (const numeric_error&) {
    est.used_fallback = true;
    est.h_hat = tin_sensor_estimate(y, X_slots);
  }
  return est;
}

// Full cancellation pipeline: differentially detect the communication chain
// from the composite observation, rebuild the symbol sequence from the
// reference phase, then fit jointly.
inline SicEstimate sic_sensor_estimate(const MatC& y, const MatC& X_slots, double ref_phase) {
  std::vector<cxd> yv(y.cols());
  for (int n = 0; n < y.cols(); ++n) yv[n] = y(0, n);
  std::vector<int> detected = dqpsk_differential_detect(yv);
  std::vector<cxd> w;
  w.reserve(yv.size());
  w.push_back(std::polar(1.0, ref_phase));
  std::vector<cxd> data = dqpsk_modulate(detected, ref_phase);
  w.insert(w.end(), data.begin(), data.end());
  SicEstimate est = sic_with_known_symbols(y, X_slots, w);
  est.detected = std::move(detected);
  return est;
}

// Same pipeline when each communication symbol spans `slots_per_symbol`
// consecutive slots: detection runs on per-symbol sums of the composite, and
// the rebuilt unit-modulus chain is expanded back to slot rate for the joint
// fit.
inline SicEstimate sic_sensor_estimate(const MatC& y, const MatC& X_slots, double ref_phase,
                                       int slots_per_symbol) {
  if (slots_per_symbol < 1)
    throw config_error("sic estimator: symbol span must be positive");
  if (slots_per_symbol == 1) return sic_sensor_estimate(y, X_slots, ref_phase);
  const int T = static_cast<int>(y.cols());
  if (T % slots_per_symbol != 0)
    throw config_error("sic estimator: block is not a whole number of symbols");
  const int n_sym = T / slots_per_symbol;
  std::vector<cxd> coll(n_sym, cxd(0.0, 0.0));
  for (int p = 0; p < n_sym; ++p)
    for (int u = 0; u < slots_per_symbol; ++u) coll[p] += y(0, p * slots_per_symbol + u);
  std::vector<int> detected = dqpsk_differential_detect(coll);
  std::vector<cxd> w_sym;
  w_sym.reserve(n_sym);
  w_sym.push_back(std::polar(1.0, ref_phase));
  std::vector<cxd> data = dqpsk_modulate(detected, ref_phase);
  w_sym.insert(w_sym.end(), data.begin(), data.end());
  std::vector<cxd> w(T);
  for (int n = 0; n < T; ++n) w[n] = w_sym[n / slots_per_symbol];
  SicEstimate est = sic_with_known_symbols(y, X_slots, w);
  est.detected = std::move(detected);
  return est;
}

}  // namespace isacim
