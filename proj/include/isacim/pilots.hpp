#pragma once

// Deterministic sensing waveforms and least-squares channel estimation.
//
// The sensing signal is a truncated unitary harmonic (DFT) basis: m' rows of
// the N-point orthonormal Fourier matrix, so the pilot Gram X X^H is exactly
// the identity. An optional water-filling precoder shapes the pilot power
// along the eigendirections of a channel correlation prior.

#include <fstream>
#include <string>

#include "isacim/common.hpp"

namespace isacim {

// First m' rows of the N-point unitary DFT matrix: X(r,c) = e^{-j2pi rc/N}/sqrt(N).
// Rows are orthonormal sequences of length N (X X^H = I_{m'}).
inline MatC generate_pilots(int m_prime, int N) {
  if (m_prime < 1) throw config_error("generate_pilots: need m' >= 1");
  if (N < m_prime) throw config_error("generate_pilots: need N >= m'");
  MatC X(m_prime, N);
  const double s = 1.0 / std::sqrt(static_cast<double>(N));
  for (int r = 0; r < m_prime; ++r)
    for (int c = 0; c < N; ++c) {
      double ang = -2.0 * kPi * static_cast<double>(r) * static_cast<double>(c) /
                   static_cast<double>(N);
      X(r, c) = s * cxd{std::cos(ang), std::sin(ang)};
    }
  return X;
}

struct WaterfillResult {
  MatC W;          // m' x m' precoder
  double mu0 = 0;  // water level
};

// Water-filling pilot precoder for a channel prior with eigendecomposition
// R_H = Q diag(lambda) Q^H:
//   W = sqrt(sigma^2/N) * Q * [(mu0 I - Lambda^{-1})^+]^{1/2},
// with mu0 chosen by bisection so the transmit power tr(W W^H) meets Ps.
inline WaterfillResult waterfill_precoder(const VecD& lambda, const MatC& Q, double sigma2,
                                          int N, double Ps) {
  const int m = static_cast<int>(lambda.size());
  if (m < 1) throw config_error("waterfill_precoder: empty spectrum");
  if (Q.rows() != m || Q.cols() != m)
    throw config_error("waterfill_precoder: Q must be m' x m'");
  if (!(sigma2 > 0.0) || N < 1 || !(Ps > 0.0))
    throw config_error("waterfill_precoder: bad noise/slot/power parameters");
  for (int i = 0; i < m; ++i)
    if (!(lambda[i] > 0.0))
      throw config_error("waterfill_precoder: eigenvalues must be positive");

  const double scale = sigma2 / static_cast<double>(N);
  auto power_at = [&](double mu) {
    double p = 0.0;
    for (int i = 0; i < m; ++i) p += std::max(mu - 1.0 / lambda[i], 0.0);
    return scale * p;
  };

  double lo = lambda.cwiseInverse().minCoeff();
  double hi = lo + static_cast<double>(N) * Ps * m / sigma2;
  // power_at(lo) = 0 and power_at(hi) >= Ps by construction; 200 bisections
  // drive the water level to machine precision.
  for (int it = 0; it < 200; ++it) {
    double mu_mid = 0.5 * (lo + hi);
    if (power_at(mu_mid) > Ps)
      hi = mu_mid;
    else
      lo = mu_mid;
  }
  double mu = 0.5 * (lo + hi);

  VecD diag(m);
  for (int i = 0; i < m; ++i)
    diag[i] = std::sqrt(scale * std::max(mu - 1.0 / lambda[i], 0.0));
  WaterfillResult r;
  r.W = Q * diag.asDiagonal();
  r.mu0 = mu;
  return r;
}

// Convenience overload for a prior that is already diagonal (Q = I).
inline WaterfillResult waterfill_precoder(const VecD& lambda, double sigma2, int N,
                                          double Ps) {
  const int m = static_cast<int>(lambda.size());
  return waterfill_precoder(lambda, MatC::Identity(m, m), sigma2, N, Ps);
}

// Least-squares estimate from Y = H X + Z:  H_hat = Y X^H (X X^H)^{-1}.
// A pilot Gram with condition number above 1e12 is reported as an error
// rather than silently inverted.
inline MatC ls_estimate(const MatC& Y, const MatC& X) {
  if (Y.cols() != X.cols()) throw config_error("ls_estimate: Y and X disagree on columns");
  MatC G = X * X.adjoint();
  Eigen::JacobiSVD<MatC> svd(G);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0 ||
      sv(0) / sv(sv.size() - 1) > 1e12)
    throw numeric_error("rank-deficient pilot matrix in LS estimate");
  // Solve G^T ?^T = (Y X^H)^T instead of forming the inverse.
  MatC YXh = Y * X.adjoint();
  return G.transpose().partialPivLu().solve(YXh.transpose()).transpose();
}

// Squared-Frobenius channel estimation error.
inline double cee(const MatC& H, const MatC& H_hat) {
  if (H.rows() != H_hat.rows() || H.cols() != H_hat.cols())
    throw config_error("cee: shape mismatch");
  return (H - H_hat).squaredNorm();
}

// Debug dump: one pilot row per line, entries as re,im pairs.
inline void dump_pilots_csv(const MatC& X, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("dump_pilots_csv: cannot open " + path);
  out.precision(17);
  for (int r = 0; r < X.rows(); ++r) {
    for (int c = 0; c < X.cols(); ++c) {
      if (c) out << ',';
      out << X(r, c).real() << ',' << X(r, c).imag();
    }
    out << '\n';
  }
}

}  // namespace isacim
