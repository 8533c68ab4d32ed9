#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "macrospin/params.hpp"

namespace macrospin::mf {

// Dimensionless magnetization on the unit sphere.
struct Magnetization {
  double mx = 0.0;
  double my = 0.0;
  double mz = 0.0;
};

// Stereographic image of the sphere, projected from the north pole:
// v = mx / (1 - mz), w = my / (1 - mz). The north pole itself (mz = +1)
// is the point at infinity and has no finite image.
struct StereoPoint {
  double v = 0.0;
  double w = 0.0;
};

enum class FpKind { stable, saddle, source };

// Tags for the on-axis fixed points in the bistable regime: the two stable
// branches (lower "l" with mz near -1, upper "u"), the two saddles s1 < s2
// and the two sources r1 < r2, each ordered by ascending w.
enum class FpLabel { l, u, s1, s2, r1, r2 };

std::string to_string(FpKind kind);
std::string to_string(FpLabel label);

struct FixedPoint {
  StereoPoint location;
  std::array<std::complex<double>, 2> jacobian_eigenvalues{};
  FpKind kind = FpKind::stable;
  std::optional<FpLabel> label;

  // Magnetization mz of the fixed point, (v^2+w^2-1)/(v^2+w^2+1).
  double mz() const;
};

// Conversions between the sphere and the stereographic plane.
// to_stereo throws std::domain_error when m is too close to the north pole
// (1 - mz below pole_tol), which maps to the point at infinity.
StereoPoint to_stereo(const Magnetization& m, double pole_tol = 1e-12);
Magnetization to_magnetization(const StereoPoint& x);

// Time derivative of the magnetization under the mean-field equations.
Magnetization mf_rhs_cartesian(const Magnetization& m, const ModelParams& p);

// Time derivative (dv/dt, dw/dt) in stereographic coordinates.
StereoPoint mf_rhs_stereo(const StereoPoint& x, const ModelParams& p);

// Jacobian of the stereographic flow in row convention:
//   [[d(dv/dt)/dv, d(dw/dt)/dv],
//    [d(dv/dt)/dw, d(dw/dt)/dw]]
// evaluated from closed-form derivatives. Its eigenvalues coincide with the
// eigenvalues of the column-convention Jacobian (the transpose).
Eigen::Matrix2d mf_jacobian(const StereoPoint& x, const ModelParams& p);

// Coefficients (ascending in w) of the degree-6 polynomial whose real roots
// are the on-axis fixed points: dw/dt(0, w) multiplied by (w^2+1)^2.
std::array<double, 7> axis_fixed_point_polynomial(const ModelParams& p);

// All fixed points on the invariant v = 0 axis, classified and sorted by
// ascending w, with branch labels assigned. Throws std::runtime_error when a
// polished root fails the residual bound.
std::vector<FixedPoint> find_axis_fixed_points(const ModelParams& p);

// Nonlinear-dissipation strength at which the number of stable fixed points
// changes (the saddle-node bifurcation bounding the bistable window), located
// by bisection on [big_gamma_lo, big_gamma_hi] to absolute tolerance tol.
// Throws std::invalid_argument when both bracket ends have the same number of
// stable fixed points.
double bistability_onset(double omega, const ModelParams& p_template, double big_gamma_lo,
                         double big_gamma_hi, double tol = 1e-3);

struct MfIntegrateOptions {
  double t_max = 1e4;
  double tol = 1e-10;            // adaptive step error tolerance (abs and rel)
  double capture_radius = 1e-6;  // distance at which a stable fixed point captures
  double escape_bound = 1e6;     // coordinate magnitude treated as escape to infinity
  double reseed_v = 1e-4;        // transverse kick applied when stalled exactly on the axis
  double dt_initial = 1e-3;
};

struct MfTrajectory {
  enum class Outcome { converged, undecided, escaped };

  std::vector<double> t;
  std::vector<StereoPoint> x;
  Outcome outcome = Outcome::undecided;
  // Set when converged: which stable fixed point captured the trajectory.
  std::optional<std::size_t> fp_index;
  std::optional<FpLabel> basin;
};

// Integrates the mean-field flow from x0 until a stable fixed point captures
// the state, the coordinates exceed the escape bound, or t_max elapses.
// A trajectory that sits exactly on the invariant v = 0 axis can stall at a
// saddle that is attracting along the axis but unstable transversally; such a
// stall is detected and resolved with a small transverse displacement, which
// by the v -> -v mirror symmetry does not change the reached basin.
MfTrajectory integrate_mf(const StereoPoint& x0, const ModelParams& p,
                          const MfIntegrateOptions& opts = {});

}  // namespace macrospin::mf
