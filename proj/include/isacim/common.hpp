#pragma once

// Shared scalar types, error taxonomy and small numeric helpers used across the
// library. Everything is header-only; all symbols live in namespace isacim.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace isacim {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatD = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// --- error taxonomy -------------------------------------------------------
//
// config_error     -> bad user input (unknown key, unparsable value, bad CLI
//                     combination). CLI exit code 2.
// infeasible_error -> parameters describe a network the requested scheme cannot
//                     serve (e.g. single-antenna broadcast with m <= K). CLI
//                     exit code 3.
// numeric_error    -> runtime numerical failure (degenerate-draw budget
//                     exhausted, rank-deficient pilot Gram, ...). CLI exit 4.

struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct infeasible_error : std::runtime_error {
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// --- cyclic index arithmetic ----------------------------------------------
//
// One-based cyclic residue: maps any integer a onto {1, ..., b}, with multiples
// of b mapping to b itself (not 0). This is the index convention used by every
// cyclic coding-vector and topology formula in the library.
inline int cyclic_residue(long long a, int b) {
  if (b <= 0) throw config_error("cyclic_residue: modulus must be positive");
  long long r = a % b;          // C++ remainder: sign follows a
  if (r <= 0) r += b;           // shift into {1..b}; exact multiples land on b
  return static_cast<int>(r);
}

// --- dB helpers ------------------------------------------------------------

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Kahan–Babuska compensated accumulator. Used wherever per-trial statistics are
// folded in a fixed order so results do not depend on worker-thread count.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace isacim
