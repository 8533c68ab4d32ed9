#include "macrospin/symham.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

namespace macrospin::symham {

namespace {

constexpr std::size_t kMaxRegisters = 256;

// The only irreducible denominator appearing in the derivation.
const Poly& u_poly() {
  static const Poly u = [] {
    Poly p = Poly::constant(1);
    p += Poly::variable(kV, 2);
    p += Poly::variable(kW, 2);
    return p;
  }();
  return u;
}

int min_exponent(const Poly& p, Var v) {
  int m = std::numeric_limits<int>::max();
  for (const auto& [mono, coeff] : p.terms()) {
    m = std::min(m, static_cast<int>(mono.e[v]));
  }
  return m;
}

// Divides every monomial by v^count; requires min_exponent(p, v) >= count.
Poly shifted_down(const Poly& p, Var v, int count) {
  Poly out;
  for (const auto& [mono, coeff] : p.terms()) {
    Monomial m = mono;
    m.e[v] = static_cast<std::uint8_t>(m.e[v] - count);
    out.set_term(m, coeff);
  }
  return out;
}

}  // namespace

const char* var_name(Var v) {
  switch (v) {
    case kV:
      return "v";
    case kW:
      return "w";
    case kPiV:
      return "pi_v";
    case kPiW:
      return "pi_w";
    case kSpin:
      return "J";
    case kOmega:
      return "Omega";
    case kGamma:
      return "gamma";
    case kBigGamma:
      return "Gamma";
  }
  return "?";
}

int Monomial::total_degree() const {
  int d = 0;
  for (auto x : e) {
    d += x;
  }
  return d;
}

bool MonomialOrder::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.total_degree();
  const int db = b.total_degree();
  if (da != db) {
    return da > db;
  }
  return a.e > b.e;
}

Poly Poly::constant(const Rational& c) {
  Poly p;
  if (c != 0) {
    p.terms_.emplace(Monomial{}, c);
  }
  return p;
}

Poly Poly::constant(long c) { return constant(Rational(c)); }

Poly Poly::variable(Var v, int power) {
  if (power < 0 || power > 255) {
    throw std::invalid_argument("variable power must be between 0 and 255");
  }
  if (power == 0) {
    return constant(1);
  }
  Poly p;
  Monomial m;
  m.e[v] = static_cast<std::uint8_t>(power);
  p.terms_.emplace(m, Rational(1));
  return p;
}

Poly& Poly::operator+=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_.emplace(m, c);
    } else {
      it->second += c;
      if (it->second == 0) {
        terms_.erase(it);
      }
    }
  }
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  for (const auto& [m, c] : o.terms_) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_.emplace(m, -c);
    } else {
      it->second -= c;
      if (it->second == 0) {
        terms_.erase(it);
      }
    }
  }
  return *this;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  Poly r = *this;
  r -= o;
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly out;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m;
      for (int i = 0; i < kNumVars; ++i) {
        const int s = static_cast<int>(ma.e[i]) + static_cast<int>(mb.e[i]);
        if (s > 255) {
          throw std::overflow_error("monomial exponent overflow in polynomial product");
        }
        m.e[i] = static_cast<std::uint8_t>(s);
      }
      auto it = out.terms_.find(m);
      if (it == out.terms_.end()) {
        out.terms_.emplace(m, ca * cb);
      } else {
        it->second += ca * cb;
        if (it->second == 0) {
          out.terms_.erase(it);
        }
      }
    }
  }
  return out;
}

Poly Poly::operator-() const {
  Poly out = *this;
  for (auto& [m, c] : out.terms_) {
    c = -c;
  }
  return out;
}

Poly Poly::scaled(const Rational& c) const {
  if (c == 0) {
    return {};
  }
  Poly out = *this;
  for (auto& [m, coeff] : out.terms_) {
    coeff *= c;
  }
  return out;
}

int Poly::degree_in(Var v) const {
  if (terms_.empty()) {
    return -1;
  }
  int d = 0;
  for (const auto& [m, c] : terms_) {
    d = std::max(d, static_cast<int>(m.e[v]));
  }
  return d;
}

int Poly::total_degree() const {
  if (terms_.empty()) {
    return -1;
  }
  // The order is graded, so the first term carries the maximal total degree.
  return terms_.begin()->first.total_degree();
}

Poly Poly::coefficient_of(Var v, int power) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    if (static_cast<int>(m.e[v]) != power) {
      continue;
    }
    Monomial q = m;
    q.e[v] = 0;
    out.terms_.emplace(q, c);
  }
  return out;
}

Poly Poly::substituted_zero(Var v) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    if (m.e[v] == 0) {
      out.terms_.emplace(m, c);
    }
  }
  return out;
}

Poly Poly::negated_var(Var v) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    out.terms_.emplace(m, (m.e[v] % 2 == 1) ? Rational(-c) : c);
  }
  return out;
}

Poly Poly::derivative(Var v) const {
  Poly out;
  for (const auto& [m, c] : terms_) {
    if (m.e[v] == 0) {
      continue;
    }
    Monomial q = m;
    q.e[v] = static_cast<std::uint8_t>(m.e[v] - 1);
    out.terms_.emplace(q, c * static_cast<int>(m.e[v]));
  }
  return out;
}

std::optional<Poly> Poly::divide_exact(const Poly& num, const Poly& den) {
  if (den.is_zero()) {
    throw std::invalid_argument("polynomial division by zero");
  }
  const Monomial den_lead = den.terms_.begin()->first;
  const Rational den_coeff = den.terms_.begin()->second;
  Poly rem = num;
  Poly quot;
  while (!rem.is_zero()) {
    const Monomial rem_lead = rem.terms_.begin()->first;
    const Rational rem_coeff = rem.terms_.begin()->second;
    // If the divisor leading monomial does not divide the remainder leading
    // monomial, the division cannot be exact: the leading monomial of any
    // multiple of den is the product of den_lead with another monomial.
    Monomial q;
    for (int i = 0; i < kNumVars; ++i) {
      if (rem_lead.e[i] < den_lead.e[i]) {
        return std::nullopt;
      }
      q.e[i] = static_cast<std::uint8_t>(rem_lead.e[i] - den_lead.e[i]);
    }
    Poly qterm;
    qterm.terms_.emplace(q, rem_coeff / den_coeff);
    quot += qterm;
    rem -= qterm * den;
  }
  return quot;
}

double Poly::evaluate(const std::array<double, kNumVars>& x) const {
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c.convert_to<double>();
    for (int i = 0; i < kNumVars; ++i) {
      for (int k = 0; k < m.e[i]; ++k) {
        t *= x[i];
      }
    }
    acc += t;
  }
  return acc;
}

std::string Poly::to_string() const {
  if (terms_.empty()) {
    return "0";
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    Rational a = c;
    if (first) {
      if (a < 0) {
        os << "-";
        a = -a;
      }
    } else {
      os << (a < 0 ? " - " : " + ");
      if (a < 0) {
        a = -a;
      }
    }
    std::string factors;
    for (int i = 0; i < kNumVars; ++i) {
      if (m.e[i] == 0) {
        continue;
      }
      if (!factors.empty()) {
        factors += "*";
      }
      factors += var_name(static_cast<Var>(i));
      if (m.e[i] > 1) {
        factors += "^" + std::to_string(static_cast<int>(m.e[i]));
      }
    }
    if (factors.empty()) {
      os << a;
    } else if (a == 1) {
      os << factors;
    } else {
      os << a << "*" << factors;
    }
    first = false;
  }
  return os.str();
}

void Poly::set_term(const Monomial& m, const Rational& c) {
  if (c == 0) {
    terms_.erase(m);
  } else {
    terms_[m] = c;
  }
}

SymExpr SymExpr::from_poly(Poly p) { return SymExpr{std::move(p), 0, 0}; }

SymExpr SymExpr::constant(const Rational& c) { return from_poly(Poly::constant(c)); }

SymExpr SymExpr::variable(Var v) { return from_poly(Poly::variable(v)); }

SymExpr SymExpr::fraction(Poly numerator, int u_pow, int j_pow) {
  if (u_pow < 0 || j_pow < 0) {
    throw std::invalid_argument("denominator powers must be nonnegative");
  }
  if (numerator.is_zero()) {
    return SymExpr{};
  }
  if (j_pow > 0) {
    const int k = std::min(min_exponent(numerator, kSpin), j_pow);
    if (k > 0) {
      numerator = shifted_down(numerator, kSpin, k);
      j_pow -= k;
    }
  }
  while (u_pow > 0) {
    auto q = Poly::divide_exact(numerator, u_poly());
    if (!q) {
      break;
    }
    numerator = std::move(*q);
    --u_pow;
  }
  return SymExpr{std::move(numerator), u_pow, j_pow};
}

SymExpr SymExpr::operator+(const SymExpr& o) const {
  if (is_zero()) {
    return o;
  }
  if (o.is_zero()) {
    return *this;
  }
  const int common_u = std::max(u_pow, o.u_pow);
  const int common_j = std::max(j_pow, o.j_pow);
  auto lifted = [&](const SymExpr& e) {
    Poly p = e.num;
    for (int i = e.u_pow; i < common_u; ++i) {
      p = p * u_poly();
    }
    if (common_j > e.j_pow) {
      p = p * Poly::variable(kSpin, common_j - e.j_pow);
    }
    return p;
  };
  return fraction(lifted(*this) + lifted(o), common_u, common_j);
}

SymExpr SymExpr::operator-(const SymExpr& o) const { return *this + (-o); }

SymExpr SymExpr::operator*(const SymExpr& o) const {
  if (is_zero() || o.is_zero()) {
    return SymExpr{};
  }
  return fraction(num * o.num, u_pow + o.u_pow, j_pow + o.j_pow);
}

SymExpr SymExpr::operator-() const { return SymExpr{-num, u_pow, j_pow}; }

SymExpr SymExpr::scaled(const Rational& c) const {
  if (c == 0) {
    return SymExpr{};
  }
  return SymExpr{num.scaled(c), u_pow, j_pow};
}

SymExpr SymExpr::over_j(int count) const {
  if (count < 0) {
    throw std::invalid_argument("spin power must be nonnegative");
  }
  if (is_zero()) {
    return SymExpr{};
  }
  return fraction(num, u_pow, j_pow + count);
}

bool SymExpr::operator==(const SymExpr& o) const {
  return u_pow == o.u_pow && j_pow == o.j_pow && num == o.num;
}

SymExpr SymExpr::derivative(Var v) const {
  if (v == kSpin) {
    throw std::invalid_argument("derivative in the spin variable is not supported");
  }
  if (is_zero()) {
    return SymExpr{};
  }
  if (u_pow == 0 || (v != kV && v != kW)) {
    return fraction(num.derivative(v), u_pow, j_pow);
  }
  // Quotient rule with d(u)/dv = 2 v and d(u)/dw = 2 w.
  const Poly du = Poly::variable(v).scaled(2);
  Poly n = num.derivative(v) * u_poly() - (num * du).scaled(u_pow);
  return fraction(std::move(n), u_pow + 1, j_pow);
}

SymExpr SymExpr::negated_var(Var v) const {
  SymExpr out{num.negated_var(v), u_pow, j_pow};
  // The denominator is even in v and w; an explicit spin denominator of odd
  // power contributes one extra sign flip.
  if (v == kSpin && j_pow % 2 == 1) {
    out.num = -out.num;
  }
  return out;
}

SymExpr SymExpr::spin_limit() const {
  if (is_zero()) {
    return SymExpr{};
  }
  const int d = num.degree_in(kSpin);
  if (d > j_pow) {
    throw std::logic_error(
        "divergent large-spin limit: the numerator grows faster in the spin "
        "than the explicit spin denominator");
  }
  if (d < j_pow) {
    return SymExpr{};
  }
  return fraction(num.coefficient_of(kSpin, d), u_pow, 0);
}

double SymExpr::evaluate(const std::array<double, kNumVars>& x) const {
  const double u = 1.0 + x[kV] * x[kV] + x[kW] * x[kW];
  double den = 1.0;
  for (int i = 0; i < u_pow; ++i) {
    den *= u;
  }
  for (int i = 0; i < j_pow; ++i) {
    den *= x[kSpin];
  }
  return num.evaluate(x) / den;
}

std::string SymExpr::to_string() const {
  if (u_pow == 0 && j_pow == 0) {
    return num.to_string();
  }
  std::string s = "(" + num.to_string() + ")";
  if (u_pow == 1) {
    s += " / (1+v^2+w^2)";
  } else if (u_pow > 1) {
    s += " / (1+v^2+w^2)^" + std::to_string(u_pow);
  }
  if (j_pow == 1) {
    s += " / J";
  } else if (j_pow > 1) {
    s += " / J^" + std::to_string(j_pow);
  }
  return s;
}

ComplexExpr ComplexExpr::operator+(const ComplexExpr& o) const { return {re + o.re, im + o.im}; }

ComplexExpr ComplexExpr::operator-(const ComplexExpr& o) const { return {re - o.re, im - o.im}; }

ComplexExpr ComplexExpr::operator*(const ComplexExpr& o) const {
  return {re * o.re - im * o.im, re * o.im + im * o.re};
}

ComplexExpr ComplexExpr::conjugate() const { return {re, -im}; }

ComplexExpr ComplexExpr::scaled(const Rational& c) const { return {re.scaled(c), im.scaled(c)}; }

ComplexExpr ComplexExpr::over_j(int count) const { return {re.over_j(count), im.over_j(count)}; }

namespace {

// Left action on the coherent-state kernel with the momentum substitution
// already applied: derivatives become -J pi (Husimi) or +J pi (Glauber).
ComplexExpr left_symbol(SpinOp which, Rep rep) {
  const Rational half(1, 2);
  const int sign = rep == Rep::H ? -1 : 1;
  const SymExpr dv =
      SymExpr::from_poly((Poly::variable(kSpin) * Poly::variable(kPiV)).scaled(sign));
  const SymExpr dw =
      SymExpr::from_poly((Poly::variable(kSpin) * Poly::variable(kPiW)).scaled(sign));
  const ComplexExpr dz{dv, dw};

  const Poly v = Poly::variable(kV);
  const Poly w = Poly::variable(kW);
  const Poly j = Poly::variable(kSpin);

  switch (which) {
    case SpinOp::plus: {
      const ComplexExpr shift{SymExpr::fraction((j * v).scaled(4), 1, 0),
                              SymExpr::fraction((j * w).scaled(4), 1, 0)};
      return (dz + shift).scaled(half);
    }
    case SpinOp::minus: {
      const ComplexExpr zbar{SymExpr::from_poly(v), SymExpr::from_poly(-w)};
      const ComplexExpr zbar_sq = zbar * zbar;
      const ComplexExpr shift{SymExpr::fraction((j * v).scaled(4), 1, 0),
                              SymExpr::fraction((j * w).scaled(-4), 1, 0)};
      return (shift - zbar_sq * dz).scaled(half);
    }
    case SpinOp::z: {
      const ComplexExpr zbar{SymExpr::from_poly(v), SymExpr::from_poly(-w)};
      Poly axis_num = (j * (v * v + w * w - Poly::constant(1))).scaled(2);
      const ComplexExpr shift{SymExpr::fraction(std::move(axis_num), 1, 0), SymExpr{}};
      return (zbar * dz + shift).scaled(half);
    }
  }
  throw std::logic_error("unknown spin operator");
}

ComplexExpr i_times(const ComplexExpr& z) { return {-z.im, z.re}; }

ComplexExpr times_var(const ComplexExpr& z, Var v) {
  const SymExpr s = SymExpr::variable(v);
  return {z.re * s, z.im * s};
}

}  // namespace

ComplexExpr spin_operator_symbol(SpinOp which, Side side, Rep rep) {
  if (side == Side::left) {
    return left_symbol(which, rep);
  }
  // Right action of an operator is the conjugated left action of its adjoint.
  const SpinOp adjoint = which == SpinOp::plus    ? SpinOp::minus
                         : which == SpinOp::minus ? SpinOp::plus
                                                  : SpinOp::z;
  return left_symbol(adjoint, rep).conjugate();
}

CompiledEvaluator::CompiledEvaluator(const SymExpr& expr) {
  if (expr.j_pow != 0 || expr.num.degree_in(kSpin) > 0) {
    throw std::invalid_argument("the spin variable must be eliminated before compilation");
  }
  u_pow_ = expr.u_pow;

  std::array<int, kNumVars> max_power{};
  for (const auto& [m, c] : expr.num.terms()) {
    for (int i = 0; i < kNumVars; ++i) {
      max_power[i] = std::max(max_power[i], static_cast<int>(m.e[i]));
    }
  }
  std::size_t next = 0;
  for (int i = 0; i < kNumVars; ++i) {
    if (max_power[i] == 0) {
      continue;
    }
    power_plan_.emplace_back(static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(max_power[i]));
    reg_of_power_[i].assign(static_cast<std::size_t>(max_power[i]) + 1, std::uint16_t{0});
    for (int k = 1; k <= max_power[i]; ++k) {
      reg_of_power_[i][static_cast<std::size_t>(k)] = static_cast<std::uint16_t>(next++);
    }
  }
  n_regs_ = next;
  if (n_regs_ > kMaxRegisters) {
    throw std::length_error("expression too large to compile");
  }

  tape_.reserve(expr.num.term_count());
  for (const auto& [m, c] : expr.num.terms()) {
    MonoInstr ins{};
    ins.coeff = c.convert_to<double>();
    ins.n_factors = 0;
    for (int i = 0; i < kNumVars; ++i) {
      if (m.e[i] == 0) {
        continue;
      }
      ins.factors[ins.n_factors++] = reg_of_power_[i][m.e[i]];
    }
    tape_.push_back(ins);
  }
}

double CompiledEvaluator::operator()(const std::array<double, 4>& x,
                                     const ModelParams& p) const {
  double regs[kMaxRegisters];
  for (const auto& [var, max_power] : power_plan_) {
    double base = 0.0;
    switch (var) {
      case kV:
        base = x[0];
        break;
      case kW:
        base = x[1];
        break;
      case kPiV:
        base = x[2];
        break;
      case kPiW:
        base = x[3];
        break;
      case kOmega:
        base = p.omega;
        break;
      case kGamma:
        base = p.gamma;
        break;
      default:
        base = p.big_gamma;
        break;
    }
    const auto& regs_of = reg_of_power_[var];
    double acc = 1.0;
    for (int k = 1; k <= max_power; ++k) {
      acc *= base;
      regs[regs_of[static_cast<std::size_t>(k)]] = acc;
    }
  }
  double sum = 0.0;
  for (const auto& ins : tape_) {
    double t = ins.coeff;
    for (int i = 0; i < ins.n_factors; ++i) {
      t *= regs[ins.factors[i]];
    }
    sum += t;
  }
  if (u_pow_ > 0) {
    const double u = 1.0 + x[0] * x[0] + x[1] * x[1];
    double den = u;
    for (int i = 1; i < u_pow_; ++i) {
      den *= u;
    }
    sum /= den;
  }
  return sum;
}

SymExpr SymbolicHamiltonian::pi_coefficient(int a, int b) const {
  if (a < 0 || b < 0) {
    throw std::invalid_argument("momentum powers must be nonnegative");
  }
  Poly c = value.num.coefficient_of(kPiV, a).coefficient_of(kPiW, b);
  return SymExpr::fraction(std::move(c), value.u_pow, value.j_pow);
}

int SymbolicHamiltonian::momentum_degree() const {
  int d = 0;
  for (const auto& [m, c] : value.num.terms()) {
    d = std::max(d, static_cast<int>(m.e[kPiV]) + static_cast<int>(m.e[kPiW]));
  }
  return d;
}

SymbolicHamiltonian derive_hamiltonian(Rep rep) {
  const ComplexExpr jp = spin_operator_symbol(SpinOp::plus, Side::left, rep);
  const ComplexExpr jm = spin_operator_symbol(SpinOp::minus, Side::left, rep);
  const ComplexExpr jz = spin_operator_symbol(SpinOp::z, Side::left, rep);
  const Rational half(1, 2);
  const Rational minus_half(-1, 2);

  // Coherent drive. The backward-equation generator carries +i times the
  // commutator image, the forward generator carries -i.
  const ComplexExpr lx = (jp + jm).scaled(half);
  ComplexExpr drive = i_times(lx - lx.conjugate());
  if (rep == Rep::P) {
    drive = drive.scaled(-1);
  }
  drive = times_var(drive, kOmega);

  // Linear dissipator with jump operator J+ and rate gamma over J. The
  // backward form sandwiches between the adjoint pair (left J-, right J+),
  // the forward form between (left J+, right J-). Either right factor is the
  // conjugate of the matching left image.
  const ComplexExpr pump_sandwich =
      rep == Rep::H ? jm * jm.conjugate() : jp * jp.conjugate();
  const ComplexExpr pump_normal = jm * jp;
  const ComplexExpr pump =
      pump_sandwich + (pump_normal + pump_normal.conjugate()).scaled(minus_half);

  // Nonlinear dissipator with jump operator J- Jz and rate Gamma over J^3.
  // After the momentum substitution the symbols commute, so operator products
  // reduce to products of the individual images.
  const ComplexExpr adj_jump = jz * jp;
  const ComplexExpr fwd_jump = jm * jz;
  const ComplexExpr nl_sandwich =
      rep == Rep::H ? adj_jump * adj_jump.conjugate() : fwd_jump * fwd_jump.conjugate();
  const ComplexExpr nl_normal = jz * jp * jm * jz;
  const ComplexExpr nl =
      nl_sandwich + (nl_normal + nl_normal.conjugate()).scaled(minus_half);

  ComplexExpr total =
      drive + times_var(pump, kGamma).over_j(1) + times_var(nl, kBigGamma).over_j(3);
  total = total.over_j(1);

  const SymExpr imag = total.im.spin_limit();
  if (!imag.is_zero()) {
    throw std::logic_error(
        "imaginary residue survived the large-spin limit; the left/right "
        "symbol bookkeeping is inconsistent");
  }

  SymbolicHamiltonian out;
  out.rep = rep;
  out.value = total.re.spin_limit();
  out.gradient = {out.value.derivative(kV), out.value.derivative(kW),
                  out.value.derivative(kPiV), out.value.derivative(kPiW)};
  out.compiled_value = CompiledEvaluator(out.value);
  for (int i = 0; i < 4; ++i) {
    out.compiled_gradient[static_cast<std::size_t>(i)] =
        CompiledEvaluator(out.gradient[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::array<double, 4> hamilton_flow(const SymbolicHamiltonian& ham,
                                    const std::array<double, 4>& q, const ModelParams& p) {
  const double dv = ham.compiled_gradient[0](q, p);
  const double dw = ham.compiled_gradient[1](q, p);
  const double dpv = ham.compiled_gradient[2](q, p);
  const double dpw = ham.compiled_gradient[3](q, p);
  return {dpv, dpw, -dv, -dw};
}

double hamiltonian_value(const SymbolicHamiltonian& ham, const std::array<double, 4>& q,
                         const ModelParams& p) {
  return ham.compiled_value(q, p);
}

KMatrixResult k_matrix(const SymbolicHamiltonian& ham, const mf::FixedPoint& fp,
                       const ModelParams& p) {
  if (std::abs(fp.location.v) > 1e-9) {
    throw std::invalid_argument("stability analysis expects a fixed point on the axis v = 0");
  }
  std::array<double, kNumVars> at{};
  at[kV] = fp.location.v;
  at[kW] = fp.location.w;
  at[kSpin] = 1.0;
  at[kOmega] = p.omega;
  at[kGamma] = p.gamma;
  at[kBigGamma] = p.big_gamma;

  // Column-convention blocks of the linearized flow at (x*, 0). The momentum
  // rows of the position derivatives vanish because the Hamiltonian is zero
  // on the whole momentum-free plane.
  Eigen::Matrix2d flow_jac;
  Eigen::Matrix2d diffusion;
  for (int i = 0; i < 2; ++i) {
    const SymExpr& velocity = ham.gradient[static_cast<std::size_t>(2 + i)];
    for (int j = 0; j < 2; ++j) {
      flow_jac(i, j) = velocity.derivative(static_cast<Var>(kV + j)).evaluate(at);
      diffusion(i, j) = 0.5 * velocity.derivative(static_cast<Var>(kPiV + j)).evaluate(at);
    }
  }

  KMatrixResult out;
  out.k.setZero();
  out.k.block<2, 2>(0, 0) = flow_jac;
  out.k.block<2, 2>(0, 2) = 2.0 * diffusion;
  out.k.block<2, 2>(2, 2) = -flow_jac.transpose();

  Eigen::EigenSolver<Eigen::Matrix4d> solver(out.k);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigensolver failed on the saddle linearization");
  }
  std::array<int, 4> order{0, 1, 2, 3};
  const auto& raw = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (raw[a].real() != raw[b].real()) {
      return raw[a].real() < raw[b].real();
    }
    return raw[a].imag() < raw[b].imag();
  });
  Eigen::Matrix4cd right;
  for (int c = 0; c < 4; ++c) {
    out.eigenvalues[static_cast<std::size_t>(c)] = raw[order[static_cast<std::size_t>(c)]];
    right.col(c) = solver.eigenvectors().col(order[static_cast<std::size_t>(c)]);
  }
  out.right_eigenvectors = right;

  Eigen::FullPivLU<Eigen::Matrix4cd> lu(right);
  if (!lu.isInvertible()) {
    throw std::runtime_error("saddle linearization is not diagonalizable");
  }
  Eigen::Matrix4cd left = lu.inverse().transpose();
  for (int c = 0; c < 4; ++c) {
    left.col(c).normalize();
  }
  out.left_eigenvectors = left;

  for (int c = 0; c < 4; ++c) {
    out.stable[static_cast<std::size_t>(c)] =
        out.eigenvalues[static_cast<std::size_t>(c)].real() < 0.0;
    const double pi_norm = std::hypot(std::abs(right(2, c)), std::abs(right(3, c)));
    out.pi_components_vanish[static_cast<std::size_t>(c)] =
        pi_norm <= 1e-9 * right.col(c).norm();
  }
  return out;
}

}  // namespace macrospin::symham
