#include "macrospin/mf.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <stdexcept>

namespace macrospin::mf {

namespace {

// Shared factor (r2 - 1)^2 / (r2 + 1)^2 of the nonlinear dissipation terms,
// with r2 = v^2 + w^2, and its partial derivatives.
struct DissipationFactor {
  double value;
  double dv;
  double dw;
};

DissipationFactor dissipation_factor(double v, double w) {
  const double r2 = v * v + w * w;
  const double den = r2 + 1.0;
  const double ratio = (r2 - 1.0) / den;
  const double value = ratio * ratio;
  // d/d(r2) of value is 4 (r2 - 1) / (r2 + 1)^3.
  const double dr2 = 4.0 * (r2 - 1.0) / (den * den * den);
  return {value, 2.0 * v * dr2, 2.0 * w * dr2};
}

}  // namespace

std::string to_string(FpKind kind) {
  switch (kind) {
    case FpKind::stable: return "stable";
    case FpKind::saddle: return "saddle";
    case FpKind::source: return "source";
  }
  return "?";
}

std::string to_string(FpLabel label) {
  switch (label) {
    case FpLabel::l: return "l";
    case FpLabel::u: return "u";
    case FpLabel::s1: return "s1";
    case FpLabel::s2: return "s2";
    case FpLabel::r1: return "r1";
    case FpLabel::r2: return "r2";
  }
  return "?";
}

double FixedPoint::mz() const {
  const double r2 = location.v * location.v + location.w * location.w;
  return (r2 - 1.0) / (r2 + 1.0);
}

StereoPoint to_stereo(const Magnetization& m, double pole_tol) {
  const double denom = 1.0 - m.mz;
  if (denom <= pole_tol) {
    throw std::domain_error("stereographic projection undefined at the north pole (mz too close to +1)");
  }
  return {m.mx / denom, m.my / denom};
}

Magnetization to_magnetization(const StereoPoint& x) {
  const double r2 = x.v * x.v + x.w * x.w;
  const double den = r2 + 1.0;
  return {2.0 * x.v / den, 2.0 * x.w / den, (r2 - 1.0) / den};
}

Magnetization mf_rhs_cartesian(const Magnetization& m, const ModelParams& p) {
  const double f = p.big_gamma * m.mz * m.mz - p.gamma;
  return {
      f * m.mx * m.mz,
      -p.omega * m.mz + f * m.my * m.mz,
      p.omega * m.my - f * (m.mx * m.mx + m.my * m.my),
  };
}

StereoPoint mf_rhs_stereo(const StereoPoint& x, const ModelParams& p) {
  const auto a = dissipation_factor(x.v, x.w);
  return {
      p.omega * x.v * x.w + p.gamma * x.v - p.big_gamma * x.v * a.value,
      0.5 * p.omega * (1.0 - x.v * x.v + x.w * x.w) + p.gamma * x.w - p.big_gamma * x.w * a.value,
  };
}

Eigen::Matrix2d mf_jacobian(const StereoPoint& x, const ModelParams& p) {
  const auto a = dissipation_factor(x.v, x.w);
  Eigen::Matrix2d j;
  // Row convention: first row holds derivatives with respect to v.
  j(0, 0) = p.omega * x.w + p.gamma - p.big_gamma * (a.value + x.v * a.dv);
  j(0, 1) = -p.omega * x.v - p.big_gamma * x.w * a.dv;
  j(1, 0) = p.omega * x.v - p.big_gamma * x.v * a.dw;
  j(1, 1) = p.omega * x.w + p.gamma - p.big_gamma * (a.value + x.w * a.dw);
  return j;
}

std::array<double, 7> axis_fixed_point_polynomial(const ModelParams& p) {
  const double om2 = 0.5 * p.omega;
  const double gm = p.gamma - p.big_gamma;
  const double gp = p.gamma + p.big_gamma;
  // dw/dt(0, w) * (w^2+1)^2 expanded in powers of w.
  return {om2, gm, 3.0 * om2, 2.0 * gp, 3.0 * om2, gm, om2};
}

namespace {

std::complex<double> polyval(const std::vector<double>& coeffs, std::complex<double> z) {
  std::complex<double> acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = acc * z + *it;
  }
  return acc;
}

// All roots of the real polynomial with ascending coefficients, via the
// companion matrix followed by Newton polishing.
std::vector<std::complex<double>> poly_roots(std::vector<double> coeffs) {
  // Trim exactly-zero leading coefficients (no drive lowers the degree).
  while (coeffs.size() > 1 && coeffs.back() == 0.0) {
    coeffs.pop_back();
  }
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg < 1) {
    return {};
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) {
    companion(i, i - 1) = 1.0;
  }
  for (int i = 0; i < deg; ++i) {
    companion(i, deg - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs.back();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);

  std::vector<double> deriv(static_cast<std::size_t>(deg));
  for (int i = 1; i <= deg; ++i) {
    deriv[static_cast<std::size_t>(i - 1)] = i * coeffs[static_cast<std::size_t>(i)];
  }

  std::vector<std::complex<double>> roots;
  roots.reserve(static_cast<std::size_t>(deg));
  for (int i = 0; i < deg; ++i) {
    std::complex<double> z = es.eigenvalues()(i);
    for (int it = 0; it < 50; ++it) {
      const std::complex<double> f = polyval(coeffs, z);
      const std::complex<double> fp = polyval(deriv, z);
      if (std::abs(fp) == 0.0) {
        break;
      }
      const std::complex<double> step = f / fp;
      z -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) {
        break;
      }
    }
    roots.push_back(z);
  }
  return roots;
}

}  // namespace

std::vector<FixedPoint> find_axis_fixed_points(const ModelParams& p) {
  p.validate();
  const auto arr = axis_fixed_point_polynomial(p);
  const auto roots = poly_roots(std::vector<double>(arr.begin(), arr.end()));

  constexpr double kImagTol = 1e-9;
  std::vector<double> ws;
  for (const auto& z : roots) {
    if (std::abs(z.imag()) <= kImagTol * std::max(1.0, std::abs(z.real()))) {
      ws.push_back(z.real());
    }
  }
  std::sort(ws.begin(), ws.end());
  // Collapse numerically coincident roots (a saddle-node double root is one
  // fixed point).
  std::vector<double> unique_ws;
  for (double w : ws) {
    if (unique_ws.empty() || std::abs(w - unique_ws.back()) > 1e-7 * std::max(1.0, std::abs(w))) {
      unique_ws.push_back(w);
    }
  }

  std::vector<FixedPoint> fps;
  for (double w : unique_ws) {
    const double residual = std::abs(mf_rhs_stereo({0.0, w}, p).w);
    if (residual > 1e-10 * p.gamma) {
      throw std::runtime_error("axis fixed point failed to converge: w = " + std::to_string(w) +
                               ", |dw/dt| = " + std::to_string(residual));
    }
    FixedPoint fp;
    fp.location = {0.0, w};
    const Eigen::Matrix2d j = mf_jacobian(fp.location, p);
    // On the axis the Jacobian is diagonal; store the transverse eigenvalue
    // first, the along-axis one second.
    fp.jacobian_eigenvalues = {std::complex<double>(j(0, 0)), std::complex<double>(j(1, 1))};
    const int n_pos = (j(0, 0) > 0.0 ? 1 : 0) + (j(1, 1) > 0.0 ? 1 : 0);
    fp.kind = n_pos == 0 ? FpKind::stable : (n_pos == 1 ? FpKind::saddle : FpKind::source);
    fps.push_back(fp);
  }

  // Assign branch labels: stable points by depth of mz, saddles and sources
  // by ascending w.
  std::vector<std::size_t> stable, saddles, sources;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    switch (fps[i].kind) {
      case FpKind::stable: stable.push_back(i); break;
      case FpKind::saddle: saddles.push_back(i); break;
      case FpKind::source: sources.push_back(i); break;
    }
  }
  if (stable.size() == 2) {
    const std::size_t a = stable[0];
    const std::size_t b = stable[1];
    const bool a_is_lower = fps[a].mz() < fps[b].mz();
    fps[a_is_lower ? a : b].label = FpLabel::l;
    fps[a_is_lower ? b : a].label = FpLabel::u;
  } else if (stable.size() == 1) {
    fps[stable[0]].label = fps[stable[0]].mz() >= 0.0 ? FpLabel::u : FpLabel::l;
  }
  if (!saddles.empty()) {
    fps[saddles[0]].label = FpLabel::s1;
  }
  if (saddles.size() >= 2) {
    fps[saddles[1]].label = FpLabel::s2;
  }
  if (!sources.empty()) {
    fps[sources[0]].label = FpLabel::r1;
  }
  if (sources.size() >= 2) {
    fps[sources[1]].label = FpLabel::r2;
  }
  return fps;
}

double bistability_onset(double omega, const ModelParams& p_template, double big_gamma_lo,
                         double big_gamma_hi, double tol) {
  ModelParams p = p_template;
  p.omega = omega;
  const auto count_stable = [&p](double big_gamma) {
    p.big_gamma = big_gamma;
    const auto fps = find_axis_fixed_points(p);
    return static_cast<int>(
        std::count_if(fps.begin(), fps.end(), [](const FixedPoint& fp) { return fp.kind == FpKind::stable; }));
  };
  int lo_count = count_stable(big_gamma_lo);
  const int hi_count = count_stable(big_gamma_hi);
  if (lo_count == hi_count) {
    throw std::invalid_argument("bistability_onset bracket endpoints have the same number of stable fixed points (" +
                                std::to_string(lo_count) + ")");
  }
  double lo = big_gamma_lo;
  double hi = big_gamma_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (count_stable(mid) == lo_count) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MfTrajectory integrate_mf(const StereoPoint& x0, const ModelParams& p, const MfIntegrateOptions& opts) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;

  const auto fps = find_axis_fixed_points(p);

  const auto system = [&p](const State& y, State& dydt, double) {
    const StereoPoint rhs = mf_rhs_stereo({y[0], y[1]}, p);
    dydt[0] = rhs.v;
    dydt[1] = rhs.w;
  };

  MfTrajectory out;
  State y{x0.v, x0.w};
  double t = 0.0;
  double dt = opts.dt_initial;
  out.t.push_back(t);
  out.x.push_back({y[0], y[1]});

  const auto classify = [&](const State& s) -> std::optional<MfTrajectory::Outcome> {
    if (std::abs(s[0]) > opts.escape_bound || std::abs(s[1]) > opts.escape_bound) {
      return MfTrajectory::Outcome::escaped;
    }
    for (std::size_t i = 0; i < fps.size(); ++i) {
      if (fps[i].kind != FpKind::stable) {
        continue;
      }
      if (std::hypot(s[0] - fps[i].location.v, s[1] - fps[i].location.w) <= opts.capture_radius) {
        out.fp_index = i;
        out.basin = fps[i].label;
        return MfTrajectory::Outcome::converged;
      }
    }
    return std::nullopt;
  };

  if (auto res = classify(y)) {
    out.outcome = *res;
    return out;
  }

  auto stepper = odeint::make_controlled(opts.tol, opts.tol, odeint::runge_kutta_dopri5<State>());
  while (t < opts.t_max) {
    State y_trial = y;
    double t_trial = t;
    double dt_trial = std::min(dt, opts.t_max - t);
    if (odeint::fail == stepper.try_step(system, y_trial, t_trial, dt_trial)) {
      dt = dt_trial;
      continue;
    }
    y = y_trial;
    t = t_trial;
    dt = dt_trial;
    out.t.push_back(t);
    out.x.push_back({y[0], y[1]});
    if (auto res = classify(y)) {
      out.outcome = *res;
      return out;
    }
    // Stall resolution: sitting exactly on the invariant axis next to a
    // non-stable fixed point (attracting along the axis, repelling off it).
    if (y[0] == 0.0) {
      for (const auto& fp : fps) {
        if (fp.kind != FpKind::stable &&
            std::abs(y[1] - fp.location.w) <= std::max(opts.capture_radius, 1e-6)) {
          y[0] = opts.reseed_v;
          break;
        }
      }
    }
  }
  out.outcome = MfTrajectory::Outcome::undecided;
  return out;
}

}  // namespace macrospin::mf
