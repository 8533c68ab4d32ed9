#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "macrospin/mf.hpp"

using namespace macrospin;
using namespace macrospin::mf;

namespace {

ModelParams reference_params(double omega = 0.25, double big_gamma = 9.0) {
  ModelParams p;
  p.omega = omega;
  p.gamma = 1.0;
  p.big_gamma = big_gamma;
  p.spin_j = 1.0;  // irrelevant for mean-field operations, but must be valid
  return p;
}

Magnetization random_unit(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double x = n(rng);
  double y = n(rng);
  double z = n(rng);
  const double r = std::sqrt(x * x + y * y + z * z);
  return {x / r, y / r, z / r};
}

const FixedPoint& fp_by_label(const std::vector<FixedPoint>& fps, FpLabel label) {
  for (const auto& fp : fps) {
    if (fp.label == label) {
      return fp;
    }
  }
  throw std::runtime_error("label not found: " + to_string(label));
}

}  // namespace

TEST_SUITE("mf") {

TEST_CASE("south pole is a fixed point without drive") {
  ModelParams p = reference_params(0.0, 2.0);
  const Magnetization rhs = mf_rhs_cartesian({0.0, 0.0, -1.0}, p);
  CHECK(rhs.mx == 0.0);
  CHECK(rhs.my == 0.0);
  CHECK(rhs.mz == 0.0);
}

TEST_CASE("drive tilts the south pole along my") {
  ModelParams p = reference_params(0.25, 9.0);
  const Magnetization rhs = mf_rhs_cartesian({0.0, 0.0, -1.0}, p);
  CHECK(rhs.mx == 0.0);
  CHECK(rhs.my == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(rhs.mz == 0.0);
}

TEST_CASE("cartesian flow is tangent to the sphere") {
  std::mt19937 rng(12345);
  ModelParams p = reference_params();
  for (int i = 0; i < 200; ++i) {
    const Magnetization m = random_unit(rng);
    const Magnetization d = mf_rhs_cartesian(m, p);
    CHECK(std::abs(m.mx * d.mx + m.my * d.my + m.mz * d.mz) <= 1e-14);
  }
  // Same identity across a parameter sweep.
  for (double omega : {0.0, 0.1, 0.5, 2.0}) {
    for (double big_gamma : {0.0, 1.0, 9.0, 20.0}) {
      ModelParams q = reference_params(omega, big_gamma);
      for (int i = 0; i < 20; ++i) {
        const Magnetization m = random_unit(rng);
        const Magnetization d = mf_rhs_cartesian(m, q);
        CHECK(std::abs(m.mx * d.mx + m.my * d.my + m.mz * d.mz) <= 1e-13);
      }
    }
  }
}

TEST_CASE("the v=0 axis is exactly invariant") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  ModelParams p = reference_params();
  for (int i = 0; i < 100; ++i) {
    const StereoPoint rhs = mf_rhs_stereo({0.0, u(rng)}, p);
    CHECK(rhs.v == 0.0);
  }
}

TEST_CASE("origin is stationary without drive") {
  ModelParams p = reference_params(0.0, 2.0);
  const StereoPoint rhs = mf_rhs_stereo({0.0, 0.0}, p);
  CHECK(rhs.v == 0.0);
  CHECK(rhs.w == 0.0);
}

TEST_CASE("stereographic rhs matches the chain-rule image of the cartesian rhs") {
  std::mt19937 rng(99);
  ModelParams p = reference_params();
  int used = 0;
  while (used < 200) {
    const Magnetization m = random_unit(rng);
    if (m.mz >= 0.99) {
      continue;
    }
    ++used;
    const StereoPoint x = to_stereo(m);
    const StereoPoint got = mf_rhs_stereo(x, p);
    const Magnetization d = mf_rhs_cartesian(m, p);
    const double den = 1.0 - m.mz;
    const double dv = d.mx / den + m.mx * d.mz / (den * den);
    const double dw = d.my / den + m.my * d.mz / (den * den);
    const double scale = std::max({1.0, std::abs(dv), std::abs(dw)});
    CHECK(std::abs(got.v - dv) <= 1e-12 * scale);
    CHECK(std::abs(got.w - dw) <= 1e-12 * scale);
  }
}

TEST_CASE("jacobian matches central finite differences") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  const double h = 1e-5;
  for (double omega : {0.0, 0.25, 0.5}) {
    for (double big_gamma : {2.0, 9.0}) {
      ModelParams p = reference_params(omega, big_gamma);
      for (int i = 0; i < 40; ++i) {
        const StereoPoint x{coord(rng), coord(rng)};
        const Eigen::Matrix2d j = mf_jacobian(x, p);
        const StereoPoint fvp = mf_rhs_stereo({x.v + h, x.w}, p);
        const StereoPoint fvm = mf_rhs_stereo({x.v - h, x.w}, p);
        const StereoPoint fwp = mf_rhs_stereo({x.v, x.w + h}, p);
        const StereoPoint fwm = mf_rhs_stereo({x.v, x.w - h}, p);
        Eigen::Matrix2d fd;
        fd(0, 0) = (fvp.v - fvm.v) / (2.0 * h);
        fd(0, 1) = (fvp.w - fvm.w) / (2.0 * h);
        fd(1, 0) = (fwp.v - fwm.v) / (2.0 * h);
        fd(1, 1) = (fwp.w - fwm.w) / (2.0 * h);
        const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        CHECK((j - fd).cwiseAbs().maxCoeff() <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("on-axis jacobian closed form at the origin") {
  ModelParams p = reference_params(0.0, 2.0);
  const Eigen::Matrix2d j = mf_jacobian({0.0, 0.0}, p);
  CHECK(j(1, 1) == doctest::Approx(-1.0).epsilon(1e-14));  // gamma - big_gamma
  CHECK(j(0, 1) == 0.0);
  CHECK(j(1, 0) == 0.0);
}

TEST_CASE("fixed points at the reference parameters") {
  const auto fps = find_axis_fixed_points(reference_params());
  REQUIRE(fps.size() == 6);

  // Sorted ascending in w.
  for (std::size_t i = 1; i < fps.size(); ++i) {
    CHECK(fps[i - 1].location.w < fps[i].location.w);
  }

  const struct {
    FpLabel label;
    double w;
    FpKind kind;
  } expected[] = {
      {FpLabel::u, -1.34287912, FpKind::stable},  {FpLabel::r1, -0.74466866, FpKind::source},
      {FpLabel::l, 0.01564605, FpKind::stable},   {FpLabel::s1, 0.67372064, FpKind::saddle},
      {FpLabel::s2, 1.48429473, FpKind::saddle},  {FpLabel::r2, 63.91388636, FpKind::source},
  };
  for (const auto& e : expected) {
    const FixedPoint& fp = fp_by_label(fps, e.label);
    CHECK(fp.location.v == 0.0);
    CHECK(fp.location.w == doctest::Approx(e.w).epsilon(1e-6));
    CHECK(fp.kind == e.kind);
  }

  // The lower branch sits near the south pole, the upper branch has mz > 0.
  CHECK(fp_by_label(fps, FpLabel::l).mz() < -0.99);
  CHECK(fp_by_label(fps, FpLabel::u).mz() > 0.0);
}

TEST_CASE("classification is consistent with eigenvalue signs") {
  for (double big_gamma : {0.5, 2.0, 5.0, 9.0, 12.0}) {
    const auto fps = find_axis_fixed_points(reference_params(0.25, big_gamma));
    for (const auto& fp : fps) {
      const int n_pos = (fp.jacobian_eigenvalues[0].real() > 0.0 ? 1 : 0) +
                        (fp.jacobian_eigenvalues[1].real() > 0.0 ? 1 : 0);
      const FpKind expect = n_pos == 0 ? FpKind::stable : (n_pos == 1 ? FpKind::saddle : FpKind::source);
      CHECK(fp.kind == expect);
    }
  }
}

TEST_CASE("weak dissipation leaves a single stable fixed point") {
  const auto fps = find_axis_fixed_points(reference_params(0.25, 1.0));
  const auto n_stable =
      std::count_if(fps.begin(), fps.end(), [](const FixedPoint& fp) { return fp.kind == FpKind::stable; });
  CHECK(n_stable == 1);
  const FixedPoint& u = fp_by_label(fps, FpLabel::u);
  CHECK(u.kind == FpKind::stable);
  CHECK(u.mz() > 0.0);
}

TEST_CASE("no drive keeps a stable fixed point at the origin") {
  const auto fps = find_axis_fixed_points(reference_params(0.0, 2.0));
  REQUIRE(fps.size() == 5);
  const auto it = std::min_element(fps.begin(), fps.end(), [](const FixedPoint& a, const FixedPoint& b) {
    return std::abs(a.location.w) < std::abs(b.location.w);
  });
  CHECK(std::abs(it->location.w) <= 1e-12);
  CHECK(it->kind == FpKind::stable);
}

TEST_CASE("root count matches an independent sign-change scan") {
  for (double omega : {0.125, 0.25, 0.5}) {
    for (double big_gamma : {0.5, 2.0, 5.0, 9.0, 12.0}) {
      ModelParams p = reference_params(omega, big_gamma);
      const auto fps = find_axis_fixed_points(p);
      for (const auto& fp : fps) {
        CHECK(std::abs(mf_rhs_stereo(fp.location, p).w) <= 1e-10);
      }
      const auto coeffs = axis_fixed_point_polynomial(p);
      const auto poly = [&coeffs](double w) {
        double acc = 0.0;
        for (int k = 6; k >= 0; --k) {
          acc = acc * w + coeffs[static_cast<std::size_t>(k)];
        }
        return acc;
      };
      // Cauchy root bound for the scan interval.
      double bound = 0.0;
      for (int k = 0; k < 6; ++k) {
        bound = std::max(bound, std::abs(coeffs[static_cast<std::size_t>(k)] / coeffs[6]));
      }
      bound += 1.0;
      const int n = 400000;
      int crossings = 0;
      double prev = poly(-bound);
      for (int i = 1; i <= n; ++i) {
        const double w = -bound + 2.0 * bound * i / n;
        const double cur = poly(w);
        if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
          ++crossings;
        }
        if (cur != 0.0) {
          prev = cur;
        }
      }
      CHECK(static_cast<std::size_t>(crossings) == fps.size());
    }
  }
}

TEST_CASE("bistability onset near 1.94 for omega 0.25") {
  const double onset = bistability_onset(0.25, reference_params(), 1.0, 3.0);
  CHECK(std::abs(onset - 1.94) <= 0.02);
  CHECK(onset == doctest::Approx(1.93451).epsilon(2e-3));
}

TEST_CASE("bistability onset exists for omega 0.5") {
  const double onset = bistability_onset(0.5, reference_params(), 1.0, 5.0);
  CHECK(onset == doctest::Approx(2.64687).epsilon(2e-3));
  const auto below = find_axis_fixed_points(reference_params(0.5, onset - 0.05));
  const auto above = find_axis_fixed_points(reference_params(0.5, onset + 0.05));
  const auto n_stable = [](const std::vector<FixedPoint>& fps) {
    return std::count_if(fps.begin(), fps.end(), [](const FixedPoint& fp) { return fp.kind == FpKind::stable; });
  };
  CHECK(n_stable(below) == 1);
  CHECK(n_stable(above) == 2);
}

TEST_CASE("onset bracket with equal stable counts is rejected") {
  CHECK_THROWS_AS(bistability_onset(0.25, reference_params(), 3.0, 5.0), std::invalid_argument);
}

TEST_CASE("relaxation from past r1 reaches the lower branch") {
  ModelParams p = reference_params();
  const auto fps = find_axis_fixed_points(p);
  const FixedPoint& r1 = fp_by_label(fps, FpLabel::r1);
  const auto traj = integrate_mf({0.0, r1.location.w - 1e-4}, p);
  REQUIRE(traj.outcome == MfTrajectory::Outcome::converged);
  CHECK(traj.basin == FpLabel::u);
  const auto traj2 = integrate_mf({0.0, r1.location.w + 1e-4}, p);
  REQUIRE(traj2.outcome == MfTrajectory::Outcome::converged);
  CHECK(traj2.basin == FpLabel::l);
}

TEST_CASE("relaxation from s1 reaches the upper branch through s2") {
  ModelParams p = reference_params();
  const auto fps = find_axis_fixed_points(p);
  const FixedPoint& s1 = fp_by_label(fps, FpLabel::s1);
  const FixedPoint& s2 = fp_by_label(fps, FpLabel::s2);
  // s1 is unstable along the axis; displace along +w, toward s2.
  const auto traj = integrate_mf({0.0, s1.location.w + 1e-4}, p);
  REQUIRE(traj.outcome == MfTrajectory::Outcome::converged);
  CHECK(traj.basin == FpLabel::u);
  double min_dist_s2 = 1e300;
  for (const auto& x : traj.x) {
    min_dist_s2 = std::min(min_dist_s2, std::hypot(x.v - s2.location.v, x.w - s2.location.w));
  }
  CHECK(min_dist_s2 <= 1e-3);
}

TEST_CASE("a point next to a stable fixed point is captured immediately") {
  ModelParams p = reference_params();
  const auto fps = find_axis_fixed_points(p);
  const FixedPoint& u = fp_by_label(fps, FpLabel::u);
  const auto traj = integrate_mf({0.0, u.location.w + 1e-8}, p);
  REQUIRE(traj.outcome == MfTrajectory::Outcome::converged);
  CHECK(traj.basin == FpLabel::u);
  CHECK(traj.t.size() == 1);
}

TEST_CASE("far-out initial conditions escape") {
  ModelParams p = reference_params();
  MfIntegrateOptions opts;
  opts.escape_bound = 1e4;
  const auto traj = integrate_mf({0.0, 9e3}, p, opts);
  CHECK(traj.outcome == MfTrajectory::Outcome::escaped);
}

TEST_CASE("stereographic round trip") {
  std::mt19937 rng(5);
  int used = 0;
  while (used < 100) {
    const Magnetization m = random_unit(rng);
    if (m.mz >= 0.99) {
      continue;
    }
    ++used;
    const Magnetization back = to_magnetization(to_stereo(m));
    CHECK(back.mx == doctest::Approx(m.mx).epsilon(1e-13));
    CHECK(back.my == doctest::Approx(m.my).epsilon(1e-13));
    CHECK(back.mz == doctest::Approx(m.mz).epsilon(1e-13));
  }
  CHECK_THROWS_AS(to_stereo({0.0, 0.0, 1.0}), std::domain_error);
}

}  // TEST_SUITE
