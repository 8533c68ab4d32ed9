#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "macrospin/mf.hpp"
#include "macrospin/qme.hpp"

namespace {

using namespace macrospin;

ModelParams make_params(double omega, double big_gamma, double spin_j) {
  ModelParams p;
  p.omega = omega;
  p.gamma = 1.0;
  p.big_gamma = big_gamma;
  p.spin_j = spin_j;
  return p;
}

// Random Hermitian matrix with the mirror symmetry of the reduced sector:
// real on even diagonals, imaginary on odd ones.
Eigen::MatrixXcd random_symmetric_sector_state(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double x = dist(rng);
      const std::complex<double> val =
          ((j - i) % 2 == 0) ? std::complex<double>(x, 0.0) : std::complex<double>(0.0, x);
      rho(i, j) = val;
      rho(j, i) = std::conj(val);
    }
  }
  return rho;
}

Eigen::MatrixXcd random_hermitian(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = std::complex<double>(dist(rng), dist(rng));
    }
  }
  return 0.5 * (a + Eigen::MatrixXcd(a.adjoint()));
}

// Trace functional of the reduced sector: sums the diagonal block.
Eigen::RowVectorXd trace_row(const qme::ReducedLayout& lay) {
  Eigen::RowVectorXd ones = Eigen::RowVectorXd::Zero(lay.dim());
  for (int m = 0; m <= lay.two_j; ++m) ones[lay.index(0, m)] = 1.0;
  return ones;
}

// Gap of the dense superoperator: -max Re over eigenvalues away from zero.
double full_spectrum_gap(const qme::FullGenerator& full) {
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(full.l);
  REQUIRE(es.info() == Eigen::Success);
  double best = -1e300;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i]) < 1e-8) continue;
    best = std::max(best, es.eigenvalues()[i].real());
  }
  return -best;
}

}  // namespace

TEST_SUITE("qme") {

TEST_CASE("layout dimensions and index map") {
  const qme::ReducedLayout lay1(2);  // spin 1
  CHECK(lay1.dim() == 6);
  const qme::ReducedLayout lay32(3);  // spin 3/2
  CHECK(lay32.dim() == 10);
  const qme::ReducedLayout lay4(8);  // spin 4
  CHECK(lay4.dim() == 45);

  // The map enumerates blocks of ascending k contiguously and is invertible.
  int expect = 0;
  for (int k = 0; k <= 8; ++k) {
    for (int m = 0; m + k <= 8; ++m) {
      CHECK(lay4.index(k, m) == expect);
      CHECK(lay4.valid(k, m));
      const auto [kk, mm] = lay4.decode(expect);
      CHECK(kk == k);
      CHECK(mm == m);
      ++expect;
    }
  }
  CHECK(expect == lay4.dim());
  CHECK_FALSE(lay4.valid(0, 9));
  CHECK_FALSE(lay4.valid(9, 0));
  CHECK_FALSE(lay4.valid(1, 8));
  CHECK_THROWS_AS((void)lay4.decode(45), std::out_of_range);
  CHECK_THROWS_AS(qme::ReducedLayout(0), std::invalid_argument);
}

TEST_CASE("columns of the generator sum to zero on the trace functional") {
  const std::vector<ModelParams> cases = {
      make_params(0.25, 9.0, 4.0),  make_params(0.0, 0.0, 1.0),   make_params(0.7, 2.3, 1.5),
      make_params(0.25, 3.0, 32.0), make_params(1.2, 11.0, 10.5),
  };
  for (const auto& p : cases) {
    CAPTURE(p.spin_j);
    const auto w = qme::build_reduced_generator(p);
    const double worst = (trace_row(w.layout) * w.w).cwiseAbs().maxCoeff();
    CHECK(worst <= 1e-13);
  }
}

TEST_CASE("reduced generator action matches the dense superoperator") {
  for (const double spin : {2.0, 1.5}) {
    CAPTURE(spin);
    const auto p = make_params(0.25, 9.0, spin);
    const auto w = qme::build_reduced_generator(p);
    const auto full = qme::build_full_generator(p);
    const int n = p.two_j() + 1;
    for (unsigned seed : {7u, 19u, 23u}) {
      const Eigen::MatrixXcd rho = random_symmetric_sector_state(n, seed);
      const auto reduced = qme::density_to_reduced(rho);
      const Eigen::VectorXd lhs = w.w * reduced.p;
      const Eigen::MatrixXcd drho = qme::unvectorize(full.l * qme::vectorize(rho));
      const auto rhs = qme::density_to_reduced(drho);
      CHECK((lhs - rhs.p).cwiseAbs().maxCoeff() <= 1e-12);
      // The image keeps the symmetry: even diagonals stay real, odd ones
      // imaginary, so the reduced coefficients capture all of it.
      CHECK((qme::reduced_to_density(rhs) - drho).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }
}

TEST_CASE("dense superoperator preserves trace and hermiticity") {
  const auto p = make_params(0.6, 5.0, 2.0);
  const auto full = qme::build_full_generator(p);
  for (unsigned seed : {3u, 11u}) {
    const Eigen::MatrixXcd rho = random_hermitian(5, seed);
    const Eigen::MatrixXcd drho = qme::unvectorize(full.l * qme::vectorize(rho));
    CHECK(std::abs(drho.trace()) <= 1e-13);
    CHECK((drho - Eigen::MatrixXcd(drho.adjoint())).cwiseAbs().maxCoeff() <= 1e-13);
  }
  CHECK_THROWS_AS(qme::build_full_generator(make_params(0.5, 1.0, 9.0)), std::invalid_argument);
  CHECK(qme::build_full_generator(make_params(0.5, 1.0, 9.0), 18).l.rows() == 19 * 19);
}

TEST_CASE("mirror reconstruction roundtrip") {
  const qme::ReducedLayout lay(5);
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  qme::ReducedState state;
  state.layout = lay;
  state.p = Eigen::VectorXd::NullaryExpr(lay.dim(), [&](Eigen::Index) { return dist(rng); });

  const Eigen::MatrixXcd rho = qme::reduced_to_density(state);
  CHECK((rho - Eigen::MatrixXcd(rho.adjoint())).cwiseAbs().maxCoeff() == 0.0);
  const auto back = qme::density_to_reduced(rho);
  CHECK((back.p - state.p).cwiseAbs().maxCoeff() == 0.0);

  // Restriction of a generic Hermitian matrix keeps the even-diagonal real
  // parts and odd-diagonal imaginary parts.
  const Eigen::MatrixXcd gen = random_hermitian(6, 5u);
  const Eigen::MatrixXcd sym = qme::reduced_to_density(qme::density_to_reduced(gen));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const std::complex<double> expect = ((j - i) % 2 == 0)
                                              ? std::complex<double>(gen(i, j).real(), 0.0)
                                              : std::complex<double>(0.0, gen(i, j).imag());
      CHECK(std::abs(sym(i, j) - expect) <= 1e-15);
    }
  }
}

TEST_CASE("pump-only steady state is the fully polarized level") {
  const auto p = make_params(0.0, 0.0, 1.0);
  const auto w = qme::build_reduced_generator(p);
  const auto ss = qme::steady_state(w);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(6);
  expect[w.layout.index(0, 2)] = 1.0;  // all population in the M = +J level
  CHECK((ss.p - expect).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(qme::magnetization_z(ss) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ss.diagonal_sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("steady state solves the balance equations at large spin") {
  const auto p = make_params(0.25, 3.0, 32.0);
  const auto w = qme::build_reduced_generator(p);
  const auto ss = qme::steady_state(w);
  CHECK(ss.residual <= 1e-10 * p.gamma);
  CHECK(std::abs(ss.diagonal_sum - 1.0) <= 1e-10);

  // Magnetization sits near the upper stable mean-field branch.
  const auto fps = mf::find_axis_fixed_points(p);
  double upper_mz = 2.0;
  for (const auto& fp : fps) {
    if (fp.label == mf::FpLabel::u) upper_mz = fp.mz();
  }
  REQUIRE(upper_mz != 2.0);
  CHECK(std::abs(qme::magnetization_z(ss) - upper_mz) <= 0.05);
}

TEST_CASE("steady state matches the null vector of the dense superoperator") {
  const auto p = make_params(0.25, 9.0, 2.0);
  const auto w = qme::build_reduced_generator(p);
  const auto ss = qme::steady_state(w);
  const Eigen::MatrixXcd rho = qme::reduced_to_density(ss);

  const auto full = qme::build_full_generator(p);
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(full.l);
  REQUIRE(es.info() == Eigen::Success);
  Eigen::Index zero_idx = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[zero_idx])) zero_idx = i;
  }
  REQUIRE(std::abs(es.eigenvalues()[zero_idx]) <= 1e-12);
  Eigen::MatrixXcd null_rho = qme::unvectorize(es.eigenvectors().col(zero_idx));
  null_rho /= null_rho.trace();
  CHECK((rho - null_rho).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("steady state independent of pivot weighting") {
  for (const auto& p : {make_params(0.25, 9.0, 8.0), make_params(0.8, 4.0, 5.0)}) {
    CAPTURE(p.spin_j);
    const auto w = qme::build_reduced_generator(p);
    qme::SteadyStateOptions middle;  // defaults: g = 1, middle pivot
    qme::SteadyStateOptions top;
    top.g = 10.0;
    top.e_index = p.two_j();  // M = +J entry of the diagonal block
    const auto a = qme::steady_state(w, middle);
    const auto b = qme::steady_state(w, top);
    CHECK((a.p - b.p).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("steady state is a valid density matrix") {
  const std::vector<ModelParams> cases = {
      make_params(0.25, 9.0, 6.0),
      make_params(0.5, 2.0, 4.5),
      make_params(1.1, 0.7, 3.0),
      make_params(0.05, 14.0, 5.0),
  };
  for (const auto& p : cases) {
    CAPTURE(p.spin_j);
    CAPTURE(p.big_gamma);
    const auto w = qme::build_reduced_generator(p);
    const auto ss = qme::steady_state(w);
    CHECK(std::abs(ss.diagonal_sum - 1.0) <= 1e-10);
    const Eigen::MatrixXcd rho = qme::reduced_to_density(ss);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    REQUIRE(es.info() == Eigen::Success);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("magnetization of simple distributions") {
  const qme::ReducedLayout lay(4);  // spin 2
  qme::ReducedState state;
  state.layout = lay;
  state.p = Eigen::VectorXd::Zero(lay.dim());
  state.p[lay.index(0, 4)] = 1.0;
  CHECK(qme::magnetization_z(state) == 1.0);
  state.p.setZero();
  state.p[lay.index(0, 0)] = 1.0;
  CHECK(qme::magnetization_z(state) == -1.0);
  state.p.setZero();
  for (int m = 0; m <= 4; ++m) state.p[lay.index(0, m)] = 0.2;
  CHECK(qme::magnetization_z(state) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("relaxation gap of the pump-only spin") {
  const auto w = qme::build_reduced_generator(make_params(0.0, 0.0, 1.0));
  // Spectrum of the reduced generator is {0, -1, -1, -2, -2, -2} in units of
  // the pump rate: the diagonal block relaxes at 2 gamma but the slowest
  // coherences decay at 1 gamma, which sets the gap.
  const auto gap = qme::liouvillian_gap(w);
  CHECK(gap.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gap.method == "dense");
  CHECK(std::abs(gap.eigenvalue.imag()) <= 1e-12);
}

TEST_CASE("reduced gap matches the dense superoperator gap") {
  for (const auto& p : {make_params(0.25, 9.0, 2.0), make_params(0.7, 4.0, 2.0)}) {
    CAPTURE(p.big_gamma);
    const auto w = qme::build_reduced_generator(p);
    const auto gap = qme::liouvillian_gap(w);
    const double dense = full_spectrum_gap(qme::build_full_generator(p));
    CHECK(std::abs(gap.lambda - dense) <= 1e-10);
  }
}

TEST_CASE("dense and shift-invert gap paths agree") {
  const auto p = make_params(0.25, 7.0, 17.0);  // dimension 630
  const auto w = qme::build_reduced_generator(p);
  const auto arnoldi = qme::liouvillian_gap(w);
  CHECK(arnoldi.method == "shift-invert");
  qme::GapOptions force_dense;
  force_dense.dense_dimension_limit = 700;
  const auto dense = qme::liouvillian_gap(w, force_dense);
  CHECK(dense.method == "dense");
  CHECK(std::abs(arnoldi.lambda - dense.lambda) <= 1e-8 * dense.lambda);
}

TEST_CASE("machine and extended gap paths agree") {
  const auto p = make_params(0.25, 9.0, 24.0);
  const auto w = qme::build_reduced_generator(p);
  const auto fast = qme::liouvillian_gap(w);
  CHECK(fast.used == qme::Precision::machine);
  qme::GapOptions opts;
  opts.precision = qme::Precision::extended;
  const auto slow = qme::liouvillian_gap(w, opts);
  CHECK(slow.used == qme::Precision::extended);
  CHECK(std::abs(fast.lambda - slow.lambda) <= 1e-6 * slow.lambda);
  CHECK(slow.residual <= 0.01 * slow.lambda);
}

TEST_CASE("gap scaling is exponential in spin") {
  std::vector<double> js, gaps;
  for (int j = 16; j <= 32; j += 4) {
    const auto w = qme::build_reduced_generator(make_params(0.25, 7.0, j));
    const auto gap = qme::liouvillian_gap(w);
    CHECK(gap.used == qme::Precision::machine);
    CHECK(gap.lambda > 0.0);
    if (!gaps.empty()) CHECK(gap.lambda < gaps.back());
    js.push_back(j);
    gaps.push_back(gap.lambda);
  }
  const auto fit = qme::fit_log_gap_slope(js, gaps);
  CHECK(fit.slope == doctest::Approx(-0.558178).epsilon(1e-3));
  CHECK(fit.slope_stderr <= 5e-4);
}

TEST_CASE("extended precision resolves gaps beyond machine range") {
  const auto p = make_params(0.25, 9.0, 40.0);
  const auto w = qme::build_reduced_generator(p);
  const auto gap = qme::liouvillian_gap(w);
  // Machine precision cannot certify this eigenvalue, so the automatic path
  // escalates on its own.
  CHECK(gap.used == qme::Precision::extended);
  CHECK(gap.lambda == doctest::Approx(7.185893e-13).epsilon(1e-5));
  CHECK(gap.residual <= 0.01 * gap.lambda);

  qme::GapOptions machine_only;
  machine_only.precision = qme::Precision::machine;
  CHECK_THROWS_AS(qme::liouvillian_gap(w, machine_only), std::runtime_error);
}

TEST_CASE("finite-size barrier estimator") {
  CHECK(qme::gap_estimator(1.0, 1.0) == 0.0);
  CHECK(qme::gap_estimator(std::exp(4.0), 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(qme::gap_estimator(1e-12, 1e-14) == doctest::Approx(std::log(100.0) / 4.0));
  CHECK_THROWS_AS(qme::gap_estimator(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(qme::gap_estimator(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("log-gap slope fit") {
  // Exact exponential data is fit with zero residual.
  std::vector<double> js = {16, 20, 24, 28, 32};
  std::vector<double> gaps;
  for (double j : js) gaps.push_back(std::exp(-0.7 * j + 2.0));
  const auto fit = qme::fit_log_gap_slope(js, gaps);
  CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.slope_stderr <= 1e-12);

  CHECK_THROWS_AS(qme::fit_log_gap_slope({1.0, 2.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(qme::fit_log_gap_slope({1.0, 2.0, 3.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(qme::fit_log_gap_slope({1.0, 2.0, 3.0}, {1.0, 0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(qme::fit_log_gap_slope({2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("option validation and resource guards") {
  ModelParams huge = make_params(0.25, 9.0, 1025.0);
  CHECK_THROWS_AS(qme::build_reduced_generator(huge), std::length_error);

  const auto w = qme::build_reduced_generator(make_params(0.25, 9.0, 2.0));
  qme::SteadyStateOptions bad_pivot;
  bad_pivot.e_index = 5;  // diagonal block of spin 2 holds entries 0..4
  CHECK_THROWS_AS(qme::steady_state(w, bad_pivot), std::invalid_argument);
  qme::SteadyStateOptions zero_g;
  zero_g.g = 0.0;
  CHECK_THROWS_AS(qme::steady_state(w, zero_g), std::invalid_argument);
}

TEST_CASE("machine and extended steady states agree") {
  const auto p = make_params(0.25, 9.0, 8.0);
  const auto w = qme::build_reduced_generator(p);
  qme::SteadyStateOptions machine;
  machine.precision = qme::Precision::machine;
  qme::SteadyStateOptions extended;
  extended.precision = qme::Precision::extended;
  const auto a = qme::steady_state(w, machine);
  const auto b = qme::steady_state(w, extended);
  CHECK(a.used == qme::Precision::machine);
  CHECK(b.used == qme::Precision::extended);
  CHECK((a.p - b.p).cwiseAbs().maxCoeff() <= 1e-12);
}

}  // TEST_SUITE("qme")
