#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "macrospin/params.hpp"

namespace macrospin::qme {

// Flat layout of the mirror-symmetric sector of the density matrix: real
// coefficients p_{M,M+k} for k = 0..2J and M = -J..J-k, stored in blocks of
// ascending k with M ascending inside each block. The k = 0 (diagonal) block
// therefore occupies the first 2J+1 positions, which keeps the trace
// functional and the pivot vector contiguous.
struct ReducedLayout {
  int two_j = 0;

  ReducedLayout() = default;
  explicit ReducedLayout(int two_j_in);

  // (2J+1)(J+1) independent coefficients.
  int dim() const { return (two_j + 1) * (two_j + 2) / 2; }

  // Flat index of p_{M,M+k} with m = M + J in 0..2J-k.
  int index(int k, int m) const { return k * (two_j + 1) - k * (k - 1) / 2 + m; }

  bool valid(int k, int m) const { return k >= 0 && k <= two_j && m >= 0 && m <= two_j - k; }

  // Inverse of index(): returns (k, m).
  std::pair<int, int> decode(int idx) const;
};

// Generator of the reduced sector dynamics, d/dt p = W p.
struct SparseGenerator {
  Eigen::SparseMatrix<double> w;
  ModelParams params;
  ReducedLayout layout;

  int dim() const { return layout.dim(); }
};

// Assembles W from the closed equations of motion of the p_{M,M+k}. Each row
// couples at most the eight neighboring coefficients; ladder factors with an
// out-of-range index vanish identically and the corresponding entries are
// omitted. Throws std::length_error when the dimension exceeds the assembly
// cap (the generator would not fit the intended memory budget).
SparseGenerator build_reduced_generator(const ModelParams& p);

// Dense superoperator acting on the row-major vectorization of the full
// density matrix, for use as a small-spin oracle.
struct FullGenerator {
  Eigen::MatrixXcd l;
  ModelParams params;
  int two_j = 0;
};

// Builds the dense Lindblad superoperator from the operator expressions
// (coherent drive plus the two collective dissipators). Throws
// std::invalid_argument when 2J exceeds max_two_j (default spin 8).
FullGenerator build_full_generator(const ModelParams& p, int max_two_j = 16);

// Row-major vectorization used by FullGenerator: entry (i, j) of rho sits at
// flat position i*n + j.
Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& vec_rho);

enum class Precision { automatic, machine, extended };
std::string to_string(Precision prec);

// Steady state of the reduced sector.
struct ReducedState {
  Eigen::VectorXd p;
  ReducedLayout layout;
  // Infinity norm of W p, measured at the precision that produced p.
  double residual = 0.0;
  double diagonal_sum = 0.0;
  Precision used = Precision::machine;
};

struct SteadyStateOptions {
  double g = 1.0;                     // weighting factor of the pivot row
  std::optional<int> e_index;         // k = 0 pivot position; default: middle
  Precision precision = Precision::automatic;
  double residual_tol = 1e-10;        // acceptance bound on |W p|_inf / gamma
};

// Solves (W + g e 1^T) p = g e, where 1 is the indicator of the k = 0 block
// and e the unit vector at the pivot; the unique solution is the null vector
// of W normalized to unit diagonal sum, independent of g and the pivot
// position. With automatic precision the solve runs in machine precision
// first and is redone in extended precision (50 significant digits,
// including the matrix assembly) when the residual bound fails; with machine
// precision a residual failure throws a std::runtime_error advising extended
// precision.
ReducedState steady_state(const SparseGenerator& w, const SteadyStateOptions& opts = {});

// m_z = sum_M M p_{M,M} / J of a normalized reduced state.
double magnetization_z(const ReducedState& state);

// Reconstruction of the full density matrix from the mirror-symmetric
// coefficients (upper coherences p for even k, i p for odd k; lower ones by
// Hermiticity), and its inverse restriction.
Eigen::MatrixXcd reduced_to_density(const ReducedState& state);
ReducedState density_to_reduced(const Eigen::MatrixXcd& rho);

struct GapOptions {
  Precision precision = Precision::automatic;
  double g = 1.0;                     // pivot weight used for the deflated solves
  std::optional<int> e_index;
  int dense_dimension_limit = 600;    // full eigendecomposition below this
  int krylov_dim = 48;
  double residual_tol = 0.01;         // relative residual bound on the gap pair
};

struct GapResult {
  double lambda = 0.0;                      // the gap, -Re of the slowest mode
  std::complex<double> eigenvalue;          // the slowest nonzero eigenvalue
  double residual = 0.0;                    // |W v - eig v| / |v| for the pair
  Precision used = Precision::machine;
  std::string method;                       // "dense" or "shift-invert"
};

// Spectral gap of the reduced generator: -Re of the nonzero eigenvalue with
// the largest real part. Small problems use a dense eigendecomposition with
// the stationary mode identified by its overlap with the steady state
// (cosine >= 0.999); larger ones use shift-invert Arnoldi iteration on
// (W + g e 1^T)^{-1}, in which the stationary mode is replaced by a spurious
// mode at g that is recognized and excluded by its nonzero diagonal sum.
// With automatic precision a failed relative-residual check reruns the
// shift-invert path in extended precision (matrix assembly included, since
// machine rounding of the entries alone perturbs eigenvalues by far more
// than the smallest gaps). Throws std::runtime_error with a suggested shift
// when no candidate passes the residual check at the requested precision.
GapResult liouvillian_gap(const SparseGenerator& w, const GapOptions& opts = {});

// Finite-size barrier estimator (1/4) ln(lambda_small / lambda_big) from the
// gaps at spins J-4 and J. Throws std::invalid_argument on non-positive
// input.
double gap_estimator(double lambda_small_j, double lambda_big_j);

// Least-squares line fit of ln(lambda) against J.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Fits ln(lambda[i]) = slope * spin_j[i] + intercept. Requires equal-length
// inputs with at least three points and positive lambdas; throws
// std::invalid_argument otherwise.
SlopeFit fit_log_gap_slope(const std::vector<double>& spin_j, const std::vector<double>& lambda);

}  // namespace macrospin::qme
