#include "macrospin/qme.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace macrospin::qme {
namespace {

using Extended = boost::multiprecision::cpp_bin_float_50;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Squared ladder factor C_M^2 = J(J+1) - M(M+1), taken with 2M as an exact
// integer so that boundary values (M = J, M = -J-1) cancel to exactly zero
// and out-of-range couplings drop out of the assembly.
template <typename Scalar>
Scalar ladder_sq(int two_j, int two_m) {
  const long long num = static_cast<long long>(two_j) * (two_j + 2) -
                        static_cast<long long>(two_m) * (two_m + 2);
  if (num <= 0) return Scalar(0);
  return Scalar(num) / 4;
}

template <typename Scalar>
Scalar ladder(int two_j, int two_m) {
  using std::sqrt;
  return sqrt(ladder_sq<Scalar>(two_j, two_m));
}

// Triplets of W for d/dt p = W p. Every arithmetic step runs in Scalar so
// that extended-precision builds are accurate to the working precision, not
// merely to double.
template <typename Scalar>
std::vector<Eigen::Triplet<Scalar>> generator_triplets(const ModelParams& mp) {
  const int tj = mp.two_j();
  const ReducedLayout lay(tj);
  const Scalar j = Scalar(tj) / 2;
  const Scalar omega(mp.omega);
  const Scalar pump = Scalar(mp.gamma) / j;
  const Scalar nonlin = Scalar(mp.big_gamma) / (j * j * j);

  auto c = [&](int two_m) { return ladder<Scalar>(tj, two_m); };
  auto c2 = [&](int two_m) { return ladder_sq<Scalar>(tj, two_m); };

  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(lay.dim()) * 8);
  auto add = [&](int row, int k, int m, Scalar value) {
    if (value == 0) return;
    trip.emplace_back(row, lay.index(k, m), value);
  };

  for (int k = 0; k <= tj; ++k) {
    for (int m = 0; m + k <= tj; ++m) {
      const int row = lay.index(k, m);
      const int tm = 2 * m - tj;    // 2M
      const int tmk = tm + 2 * k;   // 2(M+k)
      if (k == 0) {
        add(row, 1, m - 1, omega * c(tm - 2));
        add(row, 1, m, -omega * c(tm));
        add(row, 0, m - 1, pump * c2(-tm));
        add(row, 0, m, -pump * c2(tm));
        const Scalar m_up = Scalar(tm + 2) / 2;   // M + 1
        const Scalar m_val = Scalar(tm) / 2;      // M
        add(row, 0, m + 1, nonlin * m_up * m_up * c2(tm));
        add(row, 0, m, -nonlin * m_val * m_val * c2(-tm));
      } else {
        const Scalar drive = (k % 2 == 0 ? omega : -omega) / 2;
        add(row, k + 1, m - 1, drive * c(tm - 2));
        add(row, k - 1, m + 1, drive * c(tm));
        add(row, k - 1, m, -drive * c(tmk - 2));
        add(row, k + 1, m, -drive * c(tmk));
        add(row, k, m - 1, pump * c(-tm) * c(-tmk));
        add(row, k, m, -pump * (c2(tm) + c2(tmk)) / 2);
        const Scalar m_up = Scalar(tm + 2) / 2;    // M + 1
        const Scalar mk_up = Scalar(tmk + 2) / 2;  // M + k + 1
        add(row, k, m + 1, nonlin * m_up * mk_up * c(tm) * c(tmk));
        const Scalar m_val = Scalar(tm) / 2;
        const Scalar mk_val = Scalar(tmk) / 2;
        add(row, k, m,
            -nonlin * (m_val * m_val * c2(-tm) + mk_val * mk_val * c2(-tmk)) / 2);
      }
    }
  }
  return trip;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar> assemble_generator(const ModelParams& mp) {
  const int dim = ReducedLayout(mp.two_j()).dim();
  auto trip = generator_triplets<Scalar>(mp);
  Eigen::SparseMatrix<Scalar> w(dim, dim);
  w.setFromTriplets(trip.begin(), trip.end());
  w.makeCompressed();
  return w;
}

// W + g e 1^T, where 1 indicates the k = 0 block; the rank-one update only
// touches one row because the diagonal block is contiguous in the layout.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> assemble_pivoted(const ModelParams& mp, double g, int e_offset) {
  const int tj = mp.two_j();
  const int dim = ReducedLayout(tj).dim();
  auto trip = generator_triplets<Scalar>(mp);
  for (int col = 0; col <= tj; ++col) {
    trip.emplace_back(e_offset, col, Scalar(g));
  }
  Eigen::SparseMatrix<Scalar> b(dim, dim);
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  return b;
}

int resolve_pivot(const ReducedLayout& lay, const std::optional<int>& e_index) {
  const int offset = e_index.value_or(lay.two_j / 2);
  if (offset < 0 || offset > lay.two_j) {
    throw std::invalid_argument("pivot position must lie in the diagonal block (0..2J)");
  }
  return offset;
}

template <typename Scalar>
struct SteadySolve {
  Vector<Scalar> p;
  Scalar residual;
};

template <typename Scalar>
SteadySolve<Scalar> solve_steady(const ModelParams& mp, double g, int e_offset) {
  const Eigen::SparseMatrix<Scalar> b = assemble_pivoted<Scalar>(mp, g, e_offset);
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
  lu.compute(b);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("steady-state solve failed: pivoted generator is singular");
  }
  Vector<Scalar> rhs = Vector<Scalar>::Zero(b.rows());
  rhs[e_offset] = Scalar(g);
  SteadySolve<Scalar> out;
  out.p = lu.solve(rhs);
  const Eigen::SparseMatrix<Scalar> w = assemble_generator<Scalar>(mp);
  out.residual = (w * out.p).cwiseAbs().maxCoeff();
  return out;
}

// Shift-invert Arnoldi iteration for the eigenvalue of W closest to zero
// after deflating the stationary mode, i.e. the dominant eigenvalue of
// (W + g e 1^T)^{-1}. The stationary direction turns into a spurious mode at
// g whose Ritz vectors keep a nonzero diagonal sum, which is how they are
// recognized and skipped; genuine decay modes are traceless.
struct ArnoldiOutcome {
  bool ok = false;
  std::complex<double> eigenvalue{0.0, 0.0};
  double residual = std::numeric_limits<double>::infinity();
  double best_rejected_residual = std::numeric_limits<double>::infinity();
};

template <typename Scalar>
ArnoldiOutcome shift_invert_gap(const ModelParams& mp, const GapOptions& opts) {
  const int tj = mp.two_j();
  const ReducedLayout lay(tj);
  const int dim = lay.dim();
  const int e_offset = resolve_pivot(lay, opts.e_index);
  const int m = std::max(2, std::min(opts.krylov_dim, dim - 1));

  const Eigen::SparseMatrix<Scalar> w = assemble_generator<Scalar>(mp);
  const Eigen::SparseMatrix<Scalar> b = assemble_pivoted<Scalar>(mp, opts.g, e_offset);
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
  lu.compute(b);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("shift-invert factorization failed: pivoted generator is singular");
  }

  // Deterministic generic start vector.
  std::mt19937 rng(0x5d1f37u);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector<Scalar> v0(dim);
  for (int i = 0; i < dim; ++i) v0[i] = Scalar(dist(rng));
  v0 /= v0.norm();

  std::vector<Vector<Scalar>> basis;
  basis.reserve(static_cast<std::size_t>(m) + 1);
  basis.push_back(v0);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);

  int steps = m;
  for (int jcol = 0; jcol < m; ++jcol) {
    Vector<Scalar> next = lu.solve(basis[static_cast<std::size_t>(jcol)]);
    // Modified Gram-Schmidt with one refinement pass keeps the basis
    // orthonormal even when the dominant direction exceeds the rest by many
    // orders of magnitude.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= jcol; ++i) {
        const Scalar coef = basis[static_cast<std::size_t>(i)].dot(next);
        next -= coef * basis[static_cast<std::size_t>(i)];
        h(i, jcol) += static_cast<double>(coef);
      }
    }
    const Scalar beta = next.norm();
    h(jcol + 1, jcol) = static_cast<double>(beta);
    if (static_cast<double>(beta) < 1e-140) {
      steps = jcol + 1;  // exact invariant subspace reached
      break;
    }
    basis.push_back(next / beta);
  }

  const Eigen::MatrixXd hm = h.topLeftCorner(steps, steps);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(hm);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("shift-invert projection eigensolve failed");
  }

  ArnoldiOutcome out;
  double best_re = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < steps; ++idx) {
    const std::complex<double> theta = es.eigenvalues()[idx];
    if (std::abs(theta) < 1e-250) continue;
    const std::complex<double> lambda = 1.0 / theta;

    Eigen::VectorXd zr = es.eigenvectors().col(idx).real();
    Eigen::VectorXd zi = es.eigenvectors().col(idx).imag();
    Vector<Scalar> x = Vector<Scalar>::Zero(dim);
    Vector<Scalar> y = Vector<Scalar>::Zero(dim);
    for (int kvec = 0; kvec < steps; ++kvec) {
      if (zr[kvec] != 0.0) x += Scalar(zr[kvec]) * basis[static_cast<std::size_t>(kvec)];
      if (zi[kvec] != 0.0) y += Scalar(zi[kvec]) * basis[static_cast<std::size_t>(kvec)];
    }
    using std::sqrt;
    const Scalar vnorm = sqrt(x.squaredNorm() + y.squaredNorm());
    if (vnorm == 0) continue;

    // Diagonal sum of the Ritz vector flags the deflation ghost.
    Scalar tr_re(0), tr_im(0);
    for (int i = 0; i <= tj; ++i) {
      tr_re += x[i];
      tr_im += y[i];
    }
    const double trace_frac =
        static_cast<double>(sqrt(tr_re * tr_re + tr_im * tr_im) / vnorm);
    if (trace_frac > 1e-6) continue;

    const Scalar a(lambda.real());
    const Scalar bb(lambda.imag());
    const Vector<Scalar> rx = w * x - (a * x - bb * y);
    const Vector<Scalar> ry = w * y - (a * y + bb * x);
    const double resid =
        static_cast<double>(sqrt(rx.squaredNorm() + ry.squaredNorm()) / vnorm);

    if (resid <= opts.residual_tol * std::abs(lambda)) {
      if (lambda.real() > best_re) {
        best_re = lambda.real();
        out.ok = true;
        out.eigenvalue = lambda;
        out.residual = resid;
      }
    } else {
      out.best_rejected_residual = std::min(out.best_rejected_residual, resid);
    }
  }
  return out;
}

struct DenseOutcome {
  bool ok = false;
  std::complex<double> eigenvalue{0.0, 0.0};
  double residual = std::numeric_limits<double>::infinity();
};

DenseOutcome dense_gap(const SparseGenerator& w, const GapOptions& opts) {
  const Eigen::MatrixXd wd(w.w);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(wd);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("dense eigendecomposition of the generator failed");
  }

  SteadyStateOptions sopts;
  sopts.g = opts.g;
  sopts.e_index = opts.e_index;
  const ReducedState steady = steady_state(w, sopts);
  const Eigen::VectorXcd pc = steady.p.cast<std::complex<double>>();
  const double pnorm = steady.p.norm();

  // The stationary mode is identified by overlap with the steady state
  // rather than by magnitude alone, so rounding of a nearly defective
  // spectrum cannot promote it to a fake small gap.
  int zero_idx = -1;
  double best_cos = -1.0;
  const int dim = static_cast<int>(wd.rows());
  for (int i = 0; i < dim; ++i) {
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    const double cosine = std::abs(v.dot(pc)) / (v.norm() * pnorm);
    if (cosine > best_cos) {
      best_cos = cosine;
      zero_idx = i;
    }
  }
  if (best_cos < 0.999) {
    throw std::runtime_error(
        "stationary mode could not be identified in the dense spectrum (steady-state overlap "
        "below 0.999)");
  }

  DenseOutcome out;
  double best_re = -std::numeric_limits<double>::infinity();
  int pick = -1;
  for (int i = 0; i < dim; ++i) {
    if (i == zero_idx) continue;
    const double re = es.eigenvalues()[i].real();
    if (re > best_re) {
      best_re = re;
      pick = i;
    }
  }
  if (pick < 0) return out;

  const std::complex<double> lambda = es.eigenvalues()[pick];
  const Eigen::VectorXcd v = es.eigenvectors().col(pick);
  const double resid = (wd * v - lambda * v).norm() / v.norm();
  out.eigenvalue = lambda;
  out.residual = resid;
  out.ok = resid <= opts.residual_tol * std::abs(lambda);
  return out;
}

GapResult finish_gap(std::complex<double> eigenvalue, double residual, Precision used,
                     const char* method) {
  GapResult res;
  res.eigenvalue = eigenvalue;
  res.lambda = -eigenvalue.real();
  res.residual = residual;
  res.used = used;
  res.method = method;
  return res;
}

[[noreturn]] void throw_gap_failure(const ModelParams& mp, double best_residual) {
  std::ostringstream msg;
  msg << "gap eigensolve did not converge (best relative residual " << best_residual
      << "); try a small negative shift of the generator, e.g. " << -1e-3 * mp.gamma
      << ", or extended precision";
  throw std::runtime_error(msg.str());
}

}  // namespace

ReducedLayout::ReducedLayout(int two_j_in) : two_j(two_j_in) {
  if (two_j < 1) {
    throw std::invalid_argument("reduced layout requires 2J >= 1");
  }
}

std::pair<int, int> ReducedLayout::decode(int idx) const {
  if (idx < 0 || idx >= dim()) {
    throw std::out_of_range("flat index outside the reduced sector");
  }
  int k = 0;
  int remaining = idx;
  while (remaining > two_j - k) {
    remaining -= two_j - k + 1;
    ++k;
  }
  return {k, remaining};
}

SparseGenerator build_reduced_generator(const ModelParams& p) {
  p.validate();
  const int tj = p.two_j();
  if (tj > 2048) {
    throw std::length_error("reduced generator for 2J > 2048 exceeds the memory budget");
  }
  SparseGenerator out;
  out.w = assemble_generator<double>(p);
  out.params = p;
  out.layout = ReducedLayout(tj);
  return out;
}

FullGenerator build_full_generator(const ModelParams& p, int max_two_j) {
  p.validate();
  const int tj = p.two_j();
  if (tj > max_two_j) {
    throw std::invalid_argument("full superoperator requested above the dense-spin cap");
  }
  const int n = tj + 1;
  const double j = 0.5 * tj;

  Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd jz = Eigen::MatrixXcd::Zero(n, n);
  for (int m = 0; m < n; ++m) {
    if (m + 1 < n) jp(m + 1, m) = ladder<double>(tj, 2 * m - tj);
    jz(m, m) = 0.5 * (2 * m - tj);
  }
  const Eigen::MatrixXcd jm = jp.adjoint();
  const Eigen::MatrixXcd jx = 0.5 * (jp + jm);

  auto kron = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index jcol = 0; jcol < a.cols(); ++jcol) {
        out.block(i * b.rows(), jcol * b.cols(), b.rows(), b.cols()) = a(i, jcol) * b;
      }
    }
    return out;
  };
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

  // Row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho).
  auto dissipator = [&](const Eigen::MatrixXcd& a) -> Eigen::MatrixXcd {
    const Eigen::MatrixXcd ada = a.adjoint() * a;
    return kron(a, a.conjugate()) -
           0.5 * (kron(ada, id) + kron(id, ada.transpose()));
  };

  const std::complex<double> im(0.0, 1.0);
  FullGenerator out;
  out.l = -im * p.omega * (kron(jx, id) - kron(id, jx.transpose())) +
          (p.gamma / j) * dissipator(jp) +
          (p.big_gamma / (j * j * j)) * dissipator(jm * jz);
  out.params = p;
  out.two_j = tj;
  return out;
}

Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& rho) {
  const Eigen::Index n = rho.rows();
  Eigen::VectorXcd out(n * rho.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.segment(i * rho.cols(), rho.cols()) = rho.row(i).transpose();
  }
  return out;
}

Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& vec_rho) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(double(vec_rho.size()))));
  if (n * n != vec_rho.size()) {
    throw std::invalid_argument("vectorized density matrix length is not a perfect square");
  }
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = vec_rho.segment(i * n, n).transpose();
  }
  return out;
}

std::string to_string(Precision prec) {
  switch (prec) {
    case Precision::automatic: return "automatic";
    case Precision::machine: return "machine";
    case Precision::extended: return "extended";
  }
  return "unknown";
}

ReducedState steady_state(const SparseGenerator& w, const SteadyStateOptions& opts) {
  const ReducedLayout& lay = w.layout;
  const int e_offset = resolve_pivot(lay, opts.e_index);
  if (opts.g == 0.0) {
    throw std::invalid_argument("pivot weight g must be nonzero");
  }
  const double tol = opts.residual_tol * w.params.gamma;

  ReducedState out;
  out.layout = lay;

  if (opts.precision != Precision::extended) {
    const SteadySolve<double> sol = solve_steady<double>(w.params, opts.g, e_offset);
    if (sol.residual <= tol) {
      out.p = sol.p;
      out.residual = sol.residual;
      out.diagonal_sum = sol.p.head(lay.two_j + 1).sum();
      out.used = Precision::machine;
      return out;
    }
    if (opts.precision == Precision::machine) {
      std::ostringstream msg;
      msg << "steady-state residual " << sol.residual
          << " exceeds tolerance at machine precision; rerun with extended precision";
      throw std::runtime_error(msg.str());
    }
  }

  const SteadySolve<Extended> sol = solve_steady<Extended>(w.params, opts.g, e_offset);
  const double resid = static_cast<double>(sol.residual);
  if (resid > tol) {
    std::ostringstream msg;
    msg << "steady-state residual " << resid << " exceeds tolerance even at extended precision";
    throw std::runtime_error(msg.str());
  }
  out.p = sol.p.unaryExpr([](const Extended& v) { return static_cast<double>(v); });
  out.residual = resid;
  out.diagonal_sum = out.p.head(lay.two_j + 1).sum();
  out.used = Precision::extended;
  return out;
}

double magnetization_z(const ReducedState& state) {
  const int tj = state.layout.two_j;
  double acc = 0.0;
  for (int m = 0; m <= tj; ++m) {
    acc += (2 * m - tj) * state.p[state.layout.index(0, m)];
  }
  return acc / tj;
}

Eigen::MatrixXcd reduced_to_density(const ReducedState& state) {
  const int tj = state.layout.two_j;
  const int n = tj + 1;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  const std::complex<double> im(0.0, 1.0);
  for (int k = 0; k <= tj; ++k) {
    for (int m = 0; m + k <= tj; ++m) {
      const double val = state.p[state.layout.index(k, m)];
      const std::complex<double> upper = (k % 2 == 0) ? std::complex<double>(val) : im * val;
      rho(m, m + k) = upper;
      if (k > 0) rho(m + k, m) = std::conj(upper);
    }
  }
  return rho;
}

ReducedState density_to_reduced(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 2) {
    throw std::invalid_argument("density matrix must be square with at least two levels");
  }
  const int tj = static_cast<int>(rho.rows()) - 1;
  ReducedState out;
  out.layout = ReducedLayout(tj);
  out.p = Eigen::VectorXd::Zero(out.layout.dim());
  for (int k = 0; k <= tj; ++k) {
    for (int m = 0; m + k <= tj; ++m) {
      const std::complex<double> upper = rho(m, m + k);
      out.p[out.layout.index(k, m)] = (k % 2 == 0) ? upper.real() : upper.imag();
    }
  }
  out.diagonal_sum = rho.real().trace();
  out.used = Precision::machine;
  return out;
}

GapResult liouvillian_gap(const SparseGenerator& w, const GapOptions& opts) {
  const int dim = w.dim();

  if (opts.precision == Precision::extended) {
    const ArnoldiOutcome ext = shift_invert_gap<Extended>(w.params, opts);
    if (!ext.ok) throw_gap_failure(w.params, ext.best_rejected_residual);
    return finish_gap(ext.eigenvalue, ext.residual, Precision::extended, "shift-invert");
  }

  double best_rejected = std::numeric_limits<double>::infinity();
  if (dim <= opts.dense_dimension_limit) {
    const DenseOutcome dense = dense_gap(w, opts);
    if (dense.ok) {
      return finish_gap(dense.eigenvalue, dense.residual, Precision::machine, "dense");
    }
    best_rejected = dense.residual;
  } else {
    const ArnoldiOutcome dbl = shift_invert_gap<double>(w.params, opts);
    if (dbl.ok) {
      return finish_gap(dbl.eigenvalue, dbl.residual, Precision::machine, "shift-invert");
    }
    best_rejected = dbl.best_rejected_residual;
  }

  if (opts.precision == Precision::machine) throw_gap_failure(w.params, best_rejected);

  const ArnoldiOutcome ext = shift_invert_gap<Extended>(w.params, opts);
  if (!ext.ok) throw_gap_failure(w.params, ext.best_rejected_residual);
  return finish_gap(ext.eigenvalue, ext.residual, Precision::extended, "shift-invert");
}

double gap_estimator(double lambda_small_j, double lambda_big_j) {
  if (!(lambda_small_j > 0.0) || !(lambda_big_j > 0.0)) {
    throw std::invalid_argument("gap estimator requires positive gaps");
  }
  return 0.25 * std::log(lambda_small_j / lambda_big_j);
}

SlopeFit fit_log_gap_slope(const std::vector<double>& spin_j, const std::vector<double>& lambda) {
  const std::size_t n = spin_j.size();
  if (n != lambda.size()) {
    throw std::invalid_argument("slope fit requires spin and gap lists of equal length");
  }
  if (n < 3) {
    throw std::invalid_argument("slope fit requires at least three points");
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda[i] > 0.0)) {
      throw std::invalid_argument("slope fit requires positive gaps");
    }
    y[i] = std::log(lambda[i]);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += spin_j[i];
    ybar += y[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (spin_j[i] - xbar) * (spin_j[i] - xbar);
    sxy += (spin_j[i] - xbar) * (y[i] - ybar);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("slope fit requires at least two distinct spin values");
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * spin_j[i]);
    ss += r * r;
  }
  fit.slope_stderr = (n > 2) ? std::sqrt(ss / (static_cast<double>(n) - 2.0) / sxx) : 0.0;
  return fit;
}

}  // namespace macrospin::qme
