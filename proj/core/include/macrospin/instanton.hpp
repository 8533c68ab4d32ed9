#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "macrospin/mf.hpp"
#include "macrospin/params.hpp"

namespace macrospin::inst {

// Quasiprobability representation whose auxiliary Hamiltonian is used.
enum class Rep { H, P };
std::string to_string(Rep rep);

enum class BranchSign { plus, minus };
std::string to_string(BranchSign sign);

// Coefficients of the cubic C(w, pi) = c0 + c1 pi + c2 pi^2 + c3 pi^3 that
// factors the on-axis auxiliary Hamiltonian as H(w, pi) = pi * C(w, pi).
// c0 is representation independent and equals the on-axis mean-field drift.
struct CubicCoeffs {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

CubicCoeffs cubic_coeffs(Rep rep, double w, const ModelParams& p);

// Closed-form w-derivatives of the four coefficients.
CubicCoeffs cubic_coeffs_dw(Rep rep, double w, const ModelParams& p);

// On-axis auxiliary Hamiltonian pi * C(w, pi).
double hamiltonian_on_axis(Rep rep, double w, double pi_w, const ModelParams& p);

// C and its two partial derivatives at (w, pi).
struct CubicLevel {
  double c = 0.0;
  double dc_dw = 0.0;
  double dc_dpi = 0.0;
};
CubicLevel cubic_level(Rep rep, double w, double pi_w, const ModelParams& p);

struct TraceOptions {
  double tau = 1.0;         // strength of the level-set restoring term
  double ds = 1e-3;         // arclength spacing of stored samples
  double s_max = 50.0;      // initial arclength budget
  double s_max_cap = 400.0; // budget doublings stop at this cap
  double rtol = 1e-10;
  double atol = 1e-13;
};

// A trajectory that leaves the fixed-point region or exhausts the arclength
// budget without returning to pi_w = 0.
struct OpenTrajectoryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstantonTrajectory {
  Rep rep = Rep::H;
  BranchSign branch = BranchSign::plus;
  // Arclength-sampled curve; the last sample is the located pi_w = 0 return.
  std::vector<double> s;
  std::vector<double> w;
  std::vector<double> pi_w;
  // Flow velocity dw/ds at each sample, stored so a sample-based quadrature
  // can use the analytic integrand instead of differencing w.
  std::vector<double> dw_ds;
  // Accumulated integral of pi_w dw/ds up to each sample. The integral is
  // carried as a state component of the tracing ODE, so these values share
  // the integrator's error control.
  std::vector<double> action_profile;
  double total_action = 0.0;
  // The unstable on-axis fixed point reached by the trajectory.
  mf::FixedPoint terminal_fp;
  // Largest |C(w, pi_w)| seen along the samples (zero-energy manifold check).
  double max_abs_level = 0.0;
};

// Traces one instanton branch from a stable on-axis fixed point by arclength
// continuation on the zero level set of C, with a tau-weighted restoring
// term, and locates the first return of pi_w to zero by bisection on the
// dense interpolant. Throws OpenTrajectoryError for branches that never
// return and std::runtime_error when the return point matches no unstable
// fixed point.
InstantonTrajectory trace_instanton(Rep rep, const mf::FixedPoint& start, BranchSign sign,
                                    const ModelParams& p, const TraceOptions& opts = {});

// Standalone composite quadrature of pi_w dw/ds over the stored samples;
// overwrites action_profile and total_action with the recomputed values and
// returns the total. trace_instanton already fills both fields from the
// integrator, which stays accurate across folds of the level curve where
// dw/ds reverses between samples; this routine is an independent
// sample-based cross-check.
double action_of(InstantonTrajectory& traj);

// One direction's activation barrier, computed in both representations.
struct BarrierValue {
  double h = 0.0;                    // Husimi-representation action
  double p = 0.0;                    // P-representation action
  std::optional<mf::FpLabel> via;    // terminal fixed point of the minimal branch
};

struct BarrierTable {
  BarrierValue lu;  // lower -> upper
  BarrierValue ul;  // upper -> lower
  double a_min() const { return lu.h < ul.h ? lu.h : ul.h; }
};

// Traces all branches from both stable fixed points in both representations,
// assigns each terminal fixed point's reachable basins by mean-field
// relaxation, and keeps the minimal action per direction. Throws when the
// parameters are not bistable or a relaxation outcome is undecided.
BarrierTable activation_barriers(const ModelParams& p, const TraceOptions& opts = {});

// Nonlinear-dissipation strength where the two activation barriers cross
// (the first-order transition point), bracketed by a coarse scan and refined
// by bisection to absolute tolerance tol.
double transition_point(double omega, const ModelParams& p_template, double big_gamma_lo,
                        double big_gamma_hi, double tol = 1e-3, const TraceOptions& opts = {});

// Semiclassical-Wigner reduced drift and diffusion on the v = pi_v = 0 axis.
struct SwReduced {
  double h_w = 0.0;
  double d_ww = 0.0;
};
SwReduced sw_reduced(double w, const ModelParams& p);

// Action -int h_w / D_ww dw between two on-axis fixed points of the drift.
// Throws when an endpoint is not a fixed point.
double sw_action(double w_i, double w_star, const ModelParams& p);

struct SwBarrierTable {
  double a_lu = 0.0;
  double a_ul = 0.0;
  std::optional<mf::FpLabel> via_lu;
  std::optional<mf::FpLabel> via_ul;
  double a_min() const { return a_lu < a_ul ? a_lu : a_ul; }
};

// Semiclassical-Wigner activation barriers: actions to the adjacent unstable
// fixed points, with basins assigned by the same mean-field relaxation.
SwBarrierTable sw_activation_barriers(const ModelParams& p);

// Crossing point of the two semiclassical-Wigner barriers.
double sw_transition_point(double omega, const ModelParams& p_template, double big_gamma_lo,
                           double big_gamma_hi, double tol = 1e-3);

// Full two-dimensional semiclassical-Wigner Hamiltonian
//   pi_v h_v + pi_w h_w + pi_v^2 D_vv + pi_w^2 D_ww + pi_v pi_w (D_vw + D_wv)
// with its gradient in (v, w, pi_v, pi_w), evaluated with forward-mode dual
// numbers (machine-precision derivatives of the closed forms).
struct SwFieldValue {
  double value = 0.0;
  std::array<double, 4> gradient{};  // d/dv, d/dw, d/dpi_v, d/dpi_w
};
SwFieldValue sw_full_field(const mf::StereoPoint& x, double pi_v, double pi_w,
                           const ModelParams& p);

}  // namespace macrospin::inst
