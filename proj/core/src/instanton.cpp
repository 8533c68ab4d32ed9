#include "macrospin/instanton.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace macrospin::inst {

std::string to_string(Rep rep) { return rep == Rep::H ? "H" : "P"; }

std::string to_string(BranchSign sign) { return sign == BranchSign::plus ? "+" : "-"; }

CubicCoeffs cubic_coeffs(Rep rep, double w, const ModelParams& p) {
  const double w2 = w * w;
  const double u = w2 + 1.0;
  CubicCoeffs c;
  c.c0 = 0.5 * p.omega * u + p.gamma * w - p.big_gamma * w * (w2 - 1.0) * (w2 - 1.0) / (u * u);
  if (rep == Rep::H) {
    c.c1 = (p.gamma * w2 * u * u + p.big_gamma * (5.0 * w2 * w2 - 6.0 * w2 + 1.0)) / (4.0 * u);
    c.c2 = 0.25 * p.big_gamma * (w - 2.0 * w2 * w);
    c.c3 = p.big_gamma * w2 * u / 16.0;
  } else {
    c.c1 = (p.gamma * u * u + p.big_gamma * (w2 * w2 - 6.0 * w2 + 5.0) * w2) / (4.0 * u);
    c.c2 = 0.25 * p.big_gamma * w2 * w * (w2 - 2.0);
    c.c3 = p.big_gamma * w2 * w2 * u / 16.0;
  }
  return c;
}

CubicCoeffs cubic_coeffs_dw(Rep rep, double w, const ModelParams& p) {
  const double w2 = w * w;
  const double u = w2 + 1.0;
  const double a = (w2 - 1.0) * (w2 - 1.0) / (u * u);
  CubicCoeffs d;
  d.c0 = p.omega * w + p.gamma - p.big_gamma * (a + 8.0 * w2 * (w2 - 1.0) / (u * u * u));
  if (rep == Rep::H) {
    d.c1 = 0.5 * p.gamma * w * (2.0 * w2 + 1.0) +
           0.5 * p.big_gamma * w * (5.0 * w2 * w2 + 10.0 * w2 - 7.0) / (u * u);
    d.c2 = 0.25 * p.big_gamma * (1.0 - 6.0 * w2);
    d.c3 = p.big_gamma * w * (2.0 * w2 + 1.0) / 8.0;
  } else {
    d.c1 = 0.5 * p.gamma * w +
           0.5 * p.big_gamma * w * (2.0 * w2 * w2 * w2 - 3.0 * w2 * w2 - 12.0 * w2 + 5.0) / (u * u);
    d.c2 = 0.25 * p.big_gamma * (5.0 * w2 * w2 - 6.0 * w2);
    d.c3 = p.big_gamma * w2 * w * (3.0 * w2 + 2.0) / 8.0;
  }
  return d;
}

double hamiltonian_on_axis(Rep rep, double w, double pi_w, const ModelParams& p) {
  const CubicCoeffs c = cubic_coeffs(rep, w, p);
  return pi_w * (c.c0 + pi_w * (c.c1 + pi_w * (c.c2 + pi_w * c.c3)));
}

CubicLevel cubic_level(Rep rep, double w, double pi_w, const ModelParams& p) {
  const CubicCoeffs c = cubic_coeffs(rep, w, p);
  const CubicCoeffs d = cubic_coeffs_dw(rep, w, p);
  CubicLevel out;
  out.c = c.c0 + pi_w * (c.c1 + pi_w * (c.c2 + pi_w * c.c3));
  out.dc_dw = d.c0 + pi_w * (d.c1 + pi_w * (d.c2 + pi_w * d.c3));
  out.dc_dpi = c.c1 + pi_w * (2.0 * c.c2 + 3.0 * c.c3 * pi_w);
  return out;
}

namespace {

// Window of w values a closed instanton branch can visit: the fixed-point
// span padded by the span of the near-region fixed points. A trajectory
// outside it runs away (the continuation flow becomes stiff at large |w|,
// scaling like w^4, so open branches must be cut off early).
struct EscapeWindow {
  double lo;
  double hi;
};

EscapeWindow escape_window(const std::vector<mf::FixedPoint>& fps) {
  double all_min = std::numeric_limits<double>::infinity();
  double all_max = -all_min;
  double inner_min = all_min;
  double inner_max = -all_min;
  for (const auto& fp : fps) {
    const double w = fp.location.w;
    all_min = std::min(all_min, w);
    all_max = std::max(all_max, w);
    if (fp.kind != mf::FpKind::source || std::abs(w) < 10.0) {
      inner_min = std::min(inner_min, w);
      inner_max = std::max(inner_max, w);
    }
  }
  const double margin = 2.0 + (inner_max - inner_min);
  return {all_min - margin, all_max + margin};
}

}  // namespace

InstantonTrajectory trace_instanton(Rep rep, const mf::FixedPoint& start, BranchSign sign,
                                    const ModelParams& p, const TraceOptions& opts) {
  namespace odeint = boost::numeric::odeint;
  // State is (w, pi_w, S): the running action rides along as a third
  // component so its error is controlled by the same adaptive stepper.
  // Sample-based quadrature cannot do this; the level curve has folds where
  // dw/ds flips sign within a tiny fraction of the sample spacing.
  using State = std::array<double, 3>;

  if (start.kind != mf::FpKind::stable || start.location.v != 0.0) {
    throw std::invalid_argument("trace_instanton requires a stable on-axis fixed point");
  }
  const double w_start = start.location.w;
  {
    const CubicLevel lvl = cubic_level(rep, w_start, 0.0, p);
    if (std::hypot(lvl.dc_dw, lvl.dc_dpi) < 1e-12) {
      throw std::invalid_argument("level-set gradient vanishes at the starting fixed point");
    }
  }

  const auto fps = mf::find_axis_fixed_points(p);
  const EscapeWindow window = escape_window(fps);
  const double sgn = sign == BranchSign::plus ? 1.0 : -1.0;

  const auto system = [&](const State& y, State& dyds, double) {
    const CubicLevel lvl = cubic_level(rep, y[0], y[1], p);
    const double n = std::hypot(lvl.dc_dw, lvl.dc_dpi);
    dyds[0] = (sgn * lvl.dc_dpi - opts.tau * lvl.c * lvl.dc_dw) / n;
    dyds[1] = (-sgn * lvl.dc_dw - opts.tau * lvl.c * lvl.dc_dpi) / n;
    dyds[2] = y[1] * dyds[0];
  };

  InstantonTrajectory traj;
  traj.rep = rep;
  traj.branch = sign;

  const auto push_sample = [&](double s, const State& y) {
    State dyds;
    system(y, dyds, s);
    traj.s.push_back(s);
    traj.w.push_back(y[0]);
    traj.pi_w.push_back(y[1]);
    traj.dw_ds.push_back(dyds[0]);
    traj.action_profile.push_back(y[2]);
    traj.max_abs_level = std::max(traj.max_abs_level, std::abs(cubic_level(rep, y[0], y[1], p).c));
  };

  auto stepper = odeint::make_dense_output(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>());
  State y0{w_start, 0.0, 0.0};
  stepper.initialize(y0, 0.0, opts.ds);
  push_sample(0.0, y0);

  const double event_window_start = 10.0 * opts.ds;
  double s_budget = opts.s_max;
  double next_sample = opts.ds;
  double event_s = -1.0;
  State event_y{};
  bool found = false;

  while (!found) {
    if (stepper.current_time() >= s_budget) {
      if (2.0 * s_budget <= opts.s_max_cap) {
        s_budget *= 2.0;
      } else {
        throw OpenTrajectoryError("instanton branch did not return to pi_w = 0 within arclength " +
                                  std::to_string(s_budget));
      }
    }
    const auto interval = stepper.do_step(system);
    const double t0 = interval.first;
    const double t1 = interval.second;
    const State y_end = stepper.current_state();

    if (t1 > event_window_start) {
      const double a = std::max(t0, event_window_start);
      State ya;
      stepper.calc_state(a, ya);
      const double pa = ya[1];
      const double pb = y_end[1];
      if (pa == 0.0) {
        event_s = a;
        event_y = ya;
        found = true;
      } else if ((pa > 0.0) != (pb > 0.0)) {
        double sa = a;
        double sb = t1;
        State ym;
        for (int it = 0; it < 200 && sb - sa > 1e-12; ++it) {
          const double sm = 0.5 * (sa + sb);
          stepper.calc_state(sm, ym);
          if (ym[1] == 0.0) {
            sa = sb = sm;
            break;
          }
          ((ym[1] > 0.0) == (pa > 0.0) ? sa : sb) = sm;
        }
        event_s = 0.5 * (sa + sb);
        stepper.calc_state(event_s, event_y);
        found = true;
      }
    }
    if (!found && (y_end[0] < window.lo || y_end[0] > window.hi)) {
      throw OpenTrajectoryError("instanton branch left the fixed-point region at w = " +
                                std::to_string(y_end[0]));
    }
    const double limit = found ? event_s : t1;
    State ys;
    while (next_sample < limit) {
      stepper.calc_state(next_sample, ys);
      push_sample(next_sample, ys);
      next_sample += opts.ds;
    }
  }
  push_sample(event_s, event_y);

  // Match the return point to an unstable fixed point.
  const double w_end = event_y[0];
  const mf::FixedPoint* match = nullptr;
  for (const auto& fp : fps) {
    if (fp.kind != mf::FpKind::stable && std::abs(fp.location.w - w_end) <= 1e-6) {
      match = &fp;
      break;
    }
  }
  if (match == nullptr) {
    throw std::runtime_error("instanton branch returned to pi_w = 0 at w = " + std::to_string(w_end) +
                             ", which matches no unstable fixed point");
  }
  traj.terminal_fp = *match;
  traj.total_action = event_y[2];
  return traj;
}

double action_of(InstantonTrajectory& traj) {
  const std::size_t n = traj.s.size();
  traj.action_profile.assign(n, 0.0);
  if (n < 2) {
    traj.total_action = 0.0;
    return 0.0;
  }
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    f[k] = traj.pi_w[k] * traj.dw_ds[k];
  }
  for (std::size_t k = 1; k < n; ++k) {
    const double h1 = traj.s[k] - traj.s[k - 1];
    // Trapezoid for the leading interval of a pair; replaced by the
    // three-point rule once the pair completes.
    traj.action_profile[k] = traj.action_profile[k - 1] + 0.5 * h1 * (f[k - 1] + f[k]);
    const double h0 = k >= 2 ? traj.s[k - 1] - traj.s[k - 2] : 0.0;
    // A final interval much shorter than the grid spacing would make the
    // three-point weights ill-conditioned; the trapezoid value then stands.
    if (k % 2 == 0 && h0 > 1e-12 && h1 > 1e-12) {
      // Three-point Newton-Cotes rule valid for unequal spacing.
      const double hs = h0 + h1;
      const double q0 = hs * (2.0 * h0 - h1) / (6.0 * h0);
      const double q1 = hs * hs * hs / (6.0 * h0 * h1);
      const double q2 = hs * (2.0 * h1 - h0) / (6.0 * h1);
      traj.action_profile[k] = traj.action_profile[k - 2] + q0 * f[k - 2] + q1 * f[k - 1] + q2 * f[k];
    }
  }
  traj.total_action = traj.action_profile.back();
  return traj.total_action;
}

namespace {

// Reachable stable-branch labels when relaxing from just past an unstable
// fixed point, displaced along its unstable directions (both axis signs when
// the fixed point repels along the axis, a transverse kick when it repels off
// the axis).
std::set<mf::FpLabel> terminal_basins(const mf::FixedPoint& fp, const ModelParams& p) {
  constexpr double kDisp = 1e-4;
  std::set<mf::FpLabel> out;
  const auto relax = [&](const mf::StereoPoint& seed) {
    const auto res = mf::integrate_mf(seed, p);
    if (res.outcome != mf::MfTrajectory::Outcome::converged || !res.basin) {
      throw std::runtime_error("mean-field relaxation from an unstable fixed point was undecided");
    }
    out.insert(*res.basin);
  };
  const double lambda_v = fp.jacobian_eigenvalues[0].real();
  const double lambda_w = fp.jacobian_eigenvalues[1].real();
  if (lambda_w > 0.0) {
    relax({0.0, fp.location.w + kDisp});
    relax({0.0, fp.location.w - kDisp});
  }
  if (lambda_v > 0.0) {
    relax({kDisp, fp.location.w});
  }
  return out;
}

struct LabeledStable {
  mf::FixedPoint l;
  mf::FixedPoint u;
};

LabeledStable stable_pair(const std::vector<mf::FixedPoint>& fps) {
  const mf::FixedPoint* l = nullptr;
  const mf::FixedPoint* u = nullptr;
  for (const auto& fp : fps) {
    if (fp.label == mf::FpLabel::l) l = &fp;
    if (fp.label == mf::FpLabel::u) u = &fp;
  }
  if (l == nullptr || u == nullptr) {
    throw std::invalid_argument("parameters are not bistable (need both stable branches)");
  }
  return {*l, *u};
}

// Generic barrier-crossing locator: coarse scan in steps of 0.25 to bracket
// the sign change of diff, then bisection.
template <typename DiffFn>
double locate_crossing(DiffFn&& diff, double lo, double hi, double tol) {
  constexpr double kScanStep = 0.25;
  double a = lo;
  double fa = diff(a);
  double b = a;
  double fb = fa;
  bool bracketed = false;
  while (b < hi) {
    a = b;
    fa = fb;
    b = std::min(b + kScanStep, hi);
    fb = diff(b);
    if ((fa > 0.0) != (fb > 0.0)) {
      bracketed = true;
      break;
    }
  }
  if (!bracketed) {
    throw std::invalid_argument("barrier difference does not change sign inside the bracket");
  }
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    const double fm = diff(mid);
    if ((fm > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

struct OneRepBarriers {
  double lu = 0.0;
  double ul = 0.0;
  std::optional<mf::FpLabel> via_lu;
  std::optional<mf::FpLabel> via_ul;
};

OneRepBarriers barriers_one_rep(Rep rep, const ModelParams& p, const TraceOptions& opts,
                                std::map<int, std::set<mf::FpLabel>>& basin_cache) {
  const auto fps = mf::find_axis_fixed_points(p);
  const LabeledStable st = stable_pair(fps);

  const auto basins_of = [&](const mf::FixedPoint& terminal) -> const std::set<mf::FpLabel>& {
    // Key by the w position quantized well below the fixed-point separation.
    const int key = static_cast<int>(std::llround(terminal.location.w * 1e6));
    auto it = basin_cache.find(key);
    if (it == basin_cache.end()) {
      it = basin_cache.emplace(key, terminal_basins(terminal, p)).first;
    }
    return it->second;
  };

  OneRepBarriers out;
  bool have_lu = false;
  bool have_ul = false;
  for (const auto& [from_label, from_fp] : {std::pair{mf::FpLabel::l, st.l}, std::pair{mf::FpLabel::u, st.u}}) {
    for (const BranchSign sign : {BranchSign::plus, BranchSign::minus}) {
      InstantonTrajectory traj;
      try {
        traj = trace_instanton(rep, from_fp, sign, p, opts);
      } catch (const OpenTrajectoryError&) {
        continue;  // runaway branch, contributes no barrier
      }
      const mf::FpLabel to_label = from_label == mf::FpLabel::l ? mf::FpLabel::u : mf::FpLabel::l;
      if (basins_of(traj.terminal_fp).count(to_label) == 0) {
        continue;  // relaxation returns to the originating basin only
      }
      const double action = traj.total_action;
      if (from_label == mf::FpLabel::l) {
        if (!have_lu || action < out.lu) {
          out.lu = action;
          out.via_lu = traj.terminal_fp.label;
          have_lu = true;
        }
      } else {
        if (!have_ul || action < out.ul) {
          out.ul = action;
          out.via_ul = traj.terminal_fp.label;
          have_ul = true;
        }
      }
    }
  }
  if (!have_lu || !have_ul) {
    throw std::runtime_error("no instanton branch connects the stable branches in direction " +
                             std::string(!have_lu ? "l->u" : "u->l"));
  }
  return out;
}

}  // namespace

BarrierTable activation_barriers(const ModelParams& p, const TraceOptions& opts) {
  std::map<int, std::set<mf::FpLabel>> basin_cache;
  const OneRepBarriers h = barriers_one_rep(Rep::H, p, opts, basin_cache);
  const OneRepBarriers pr = barriers_one_rep(Rep::P, p, opts, basin_cache);
  BarrierTable table;
  table.lu.h = h.lu;
  table.lu.p = pr.lu;
  table.lu.via = h.via_lu;
  table.ul.h = h.ul;
  table.ul.p = pr.ul;
  table.ul.via = h.via_ul;
  return table;
}

double transition_point(double omega, const ModelParams& p_template, double big_gamma_lo,
                        double big_gamma_hi, double tol, const TraceOptions& opts) {
  ModelParams p = p_template;
  p.omega = omega;
  const auto diff = [&](double big_gamma) {
    p.big_gamma = big_gamma;
    std::map<int, std::set<mf::FpLabel>> basin_cache;
    const OneRepBarriers h = barriers_one_rep(Rep::H, p, opts, basin_cache);
    return h.lu - h.ul;
  };
  return locate_crossing(diff, big_gamma_lo, big_gamma_hi, tol);
}

SwReduced sw_reduced(double w, const ModelParams& p) {
  const double w2 = w * w;
  const double u = w2 + 1.0;
  SwReduced out;
  out.h_w = 0.5 * p.omega * u + p.gamma * w - p.big_gamma * w * (w2 - 1.0) * (w2 - 1.0) / (u * u);
  out.d_ww = 0.125 * p.gamma * u * u + 0.125 * p.big_gamma * (w2 - 1.0) * (w2 - 1.0);
  return out;
}

double sw_action(double w_i, double w_star, const ModelParams& p) {
  if (std::abs(sw_reduced(w_i, p).h_w) > 1e-8 * p.gamma ||
      std::abs(sw_reduced(w_star, p).h_w) > 1e-8 * p.gamma) {
    throw std::invalid_argument("sw_action endpoints must be fixed points of the drift");
  }
  if (w_i == w_star) {
    return 0.0;
  }
  const auto integrand = [&](double w) {
    const SwReduced s = sw_reduced(w, p);
    return s.h_w / s.d_ww;
  };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, w_i, w_star, 12, 1e-12);
  return -integral;
}

SwBarrierTable sw_activation_barriers(const ModelParams& p) {
  const auto fps = mf::find_axis_fixed_points(p);
  const LabeledStable st = stable_pair(fps);
  std::map<int, std::set<mf::FpLabel>> basin_cache;
  const auto basins_of = [&](const mf::FixedPoint& terminal) -> const std::set<mf::FpLabel>& {
    const int key = static_cast<int>(std::llround(terminal.location.w * 1e6));
    auto it = basin_cache.find(key);
    if (it == basin_cache.end()) {
      it = basin_cache.emplace(key, terminal_basins(terminal, p)).first;
    }
    return it->second;
  };

  SwBarrierTable out;
  bool have_lu = false;
  bool have_ul = false;
  for (const auto& [from_label, from_fp] : {std::pair{mf::FpLabel::l, st.l}, std::pair{mf::FpLabel::u, st.u}}) {
    // Adjacent unstable fixed points along the axis in both directions.
    std::ptrdiff_t idx = -1;
    for (std::size_t i = 0; i < fps.size(); ++i) {
      if (fps[i].location.w == from_fp.location.w) {
        idx = static_cast<std::ptrdiff_t>(i);
      }
    }
    for (const std::ptrdiff_t j : {idx - 1, idx + 1}) {
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(fps.size())) {
        continue;
      }
      const mf::FixedPoint& terminal = fps[static_cast<std::size_t>(j)];
      if (terminal.kind == mf::FpKind::stable) {
        continue;
      }
      const double action = sw_action(from_fp.location.w, terminal.location.w, p);
      const mf::FpLabel to_label = from_label == mf::FpLabel::l ? mf::FpLabel::u : mf::FpLabel::l;
      if (basins_of(terminal).count(to_label) == 0) {
        continue;
      }
      if (from_label == mf::FpLabel::l) {
        if (!have_lu || action < out.a_lu) {
          out.a_lu = action;
          out.via_lu = terminal.label;
          have_lu = true;
        }
      } else {
        if (!have_ul || action < out.a_ul) {
          out.a_ul = action;
          out.via_ul = terminal.label;
          have_ul = true;
        }
      }
    }
  }
  if (!have_lu || !have_ul) {
    throw std::runtime_error("no semiclassical-Wigner path connects the stable branches");
  }
  return out;
}

double sw_transition_point(double omega, const ModelParams& p_template, double big_gamma_lo,
                           double big_gamma_hi, double tol) {
  ModelParams p = p_template;
  p.omega = omega;
  const auto diff = [&](double big_gamma) {
    p.big_gamma = big_gamma;
    const SwBarrierTable t = sw_activation_barriers(p);
    return t.a_lu - t.a_ul;
  };
  return locate_crossing(diff, big_gamma_lo, big_gamma_hi, tol);
}

namespace {

// Forward-mode dual number carrying the value and four directional
// derivatives, used to differentiate the closed-form Wigner Hamiltonian.
struct Dual4 {
  double v = 0.0;
  std::array<double, 4> d{};
};

Dual4 operator+(const Dual4& a, const Dual4& b) {
  Dual4 r{a.v + b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual4 operator-(const Dual4& a, const Dual4& b) {
  Dual4 r{a.v - b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual4 operator*(const Dual4& a, const Dual4& b) {
  Dual4 r{a.v * b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual4 operator/(const Dual4& a, const Dual4& b) {
  Dual4 r{a.v / b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
  return r;
}
Dual4 operator*(double c, const Dual4& a) {
  Dual4 r{c * a.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = c * a.d[i];
  return r;
}
Dual4 operator+(double c, const Dual4& a) { return Dual4{c + a.v, a.d}; }
Dual4 operator+(const Dual4& a, double c) { return Dual4{a.v + c, a.d}; }
Dual4 operator-(const Dual4& a, double c) { return Dual4{a.v - c, a.d}; }

}  // namespace

SwFieldValue sw_full_field(const mf::StereoPoint& x, double pi_v, double pi_w,
                           const ModelParams& p) {
  const auto eval = [&p](Dual4 v, Dual4 w, Dual4 pv, Dual4 pw) {
    const Dual4 v2 = v * v;
    const Dual4 w2 = w * w;
    const Dual4 r2 = v2 + w2;
    const Dual4 u = 1.0 + r2;
    const Dual4 u2 = u * u;
    const Dual4 one{1.0, {}};
    const Dual4 rm1 = r2 - one;
    const Dual4 afac = (rm1 * rm1) / u2;

    const Dual4 h_v = p.omega * (v * w) + p.gamma * v - p.big_gamma * (v * afac);
    const Dual4 h_w = 0.5 * p.omega * (one - v2 + w2) + p.gamma * w - p.big_gamma * (w * afac);

    const Dual4 wm1 = w - 1.0;
    const Dual4 wp1 = w + 1.0;
    const Dual4 vm1 = v - 1.0;
    const Dual4 vp1 = v + 1.0;
    const Dual4 w4 = w2 * w2;
    const Dual4 v4 = v2 * v2;
    const Dual4 w6 = w4 * w2;
    const Dual4 v6 = v4 * v2;
    const Dual4 w8 = w4 * w4;
    const Dual4 v8 = v4 * v4;

    const Dual4 dvv_gamma = (v2 + wm1 * wm1) * (v2 + wp1 * wp1);
    const Dual4 w2m3 = w2 - 3.0;
    const Dual4 poly_vv = v8 + 4.0 * (v6 * w2) + 2.0 * (v4 * (3.0 * w4 - 6.0 * w2 - one)) +
                          4.0 * (v2 * w2 * (w2m3 * w2m3)) +
                          (w4 - 6.0 * w2 + one) * (w4 - 6.0 * w2 + one);
    const Dual4 d_vv = 0.125 * (p.gamma * dvv_gamma + p.big_gamma * (poly_vv / u2));

    const Dual4 dww_gamma = (vm1 * vm1 + w2) * (vp1 * vp1 + w2);
    const Dual4 v2m3 = v2 - 3.0;
    const Dual4 poly_ww = 4.0 * (v2 * w6) + 4.0 * (v2 * (v2m3 * v2m3) * w2) +
                          2.0 * ((3.0 * v4 - 6.0 * v2 - one) * w4) +
                          (v4 - 6.0 * v2 + one) * (v4 - 6.0 * v2 + one) + w8;
    const Dual4 d_ww = 0.125 * (p.gamma * dww_gamma + p.big_gamma * (poly_ww / u2));

    const Dual4 d_vw =
        0.5 * (v * w * (p.gamma * one + p.big_gamma * ((r2 - 3.0) * (3.0 * r2 - 1.0) / u2)));

    return pv * h_v + pw * h_w + pv * pv * d_vv + pw * pw * d_ww + 2.0 * (pv * pw * d_vw);
  };

  Dual4 v{x.v, {1.0, 0.0, 0.0, 0.0}};
  Dual4 w{x.w, {0.0, 1.0, 0.0, 0.0}};
  Dual4 pv{pi_v, {0.0, 0.0, 1.0, 0.0}};
  Dual4 pw{pi_w, {0.0, 0.0, 0.0, 1.0}};
  const Dual4 h = eval(v, w, pv, pw);
  SwFieldValue out;
  out.value = h.v;
  out.gradient = h.d;
  return out;
}

}  // namespace macrospin::inst
