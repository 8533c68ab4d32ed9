#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "macrospin/instanton.hpp"
#include "macrospin/mf.hpp"
#include "macrospin/params.hpp"

namespace macrospin::symham {

using Rational = boost::multiprecision::cpp_rational;

// The symbolic engine works over eight commuting variables: the stereographic
// coordinates, their conjugate momenta, the spin magnitude (eliminated by the
// large-spin limit), and the three rates.
enum Var : int {
  kV = 0,
  kW = 1,
  kPiV = 2,
  kPiW = 3,
  kSpin = 4,
  kOmega = 5,
  kGamma = 6,
  kBigGamma = 7,
};
inline constexpr int kNumVars = 8;

const char* var_name(Var v);

// Exponent vector of one monomial, ordered graded-lexicographically (total
// degree first, then the Var order above) so polynomials have a unique
// canonical form.
struct Monomial {
  std::array<std::uint8_t, kNumVars> e{};

  int total_degree() const;
  bool operator==(const Monomial& o) const { return e == o.e; }
};

// Grlex "greater" comparator: higher total degree first, ties broken
// lexicographically on the exponents.
struct MonomialOrder {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

// Sparse multivariate polynomial with exact rational coefficients. The
// canonical form (sorted monomials, no zero coefficients) makes equality a
// structural comparison.
class Poly {
 public:
  Poly() = default;

  static Poly constant(const Rational& c);
  static Poly constant(long c);
  static Poly variable(Var v, int power = 1);

  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator-() const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly scaled(const Rational& c) const;

  bool operator==(const Poly& o) const { return terms_ == o.terms_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  int degree_in(Var v) const;
  int total_degree() const;

  // Coefficient of v^power as a polynomial in the remaining variables.
  Poly coefficient_of(Var v, int power) const;

  // Sets one variable to zero (drops every monomial containing it).
  Poly substituted_zero(Var v) const;

  // Flips the sign of one variable.
  Poly negated_var(Var v) const;

  Poly derivative(Var v) const;

  // Exact division; nullopt when the divisor does not divide evenly.
  static std::optional<Poly> divide_exact(const Poly& num, const Poly& den);

  double evaluate(const std::array<double, kNumVars>& x) const;

  std::string to_string() const;

  const std::map<Monomial, Rational, MonomialOrder>& terms() const { return terms_; }
  void set_term(const Monomial& m, const Rational& c);  // erases on zero

 private:
  std::map<Monomial, Rational, MonomialOrder> terms_;
};

// The only irreducible denominator the derivation meets is
// u = 1 + v^2 + w^2 (and explicit powers of the spin J from the rates), so a
// rational function is stored as num / (u^u_pow J^j_pow) and kept canonical
// by exact division: num is never divisible by u, and j_pow > 0 only when
// num is not divisible by J.
struct SymExpr {
  Poly num;
  int u_pow = 0;
  int j_pow = 0;

  static SymExpr from_poly(Poly p);
  static SymExpr constant(const Rational& c);
  static SymExpr variable(Var v);
  // num / u^u_pow / J^j_pow, normalized.
  static SymExpr fraction(Poly numerator, int u_pow, int j_pow);

  bool is_zero() const { return num.is_zero(); }

  SymExpr operator+(const SymExpr& o) const;
  SymExpr operator-(const SymExpr& o) const;
  SymExpr operator*(const SymExpr& o) const;
  SymExpr operator-() const;
  SymExpr scaled(const Rational& c) const;

  // Multiplies by J^-count (count >= 0), e.g. for the rates gamma/J and
  // Gamma/J^3 and for the final 1/J of the large-spin limit.
  SymExpr over_j(int count) const;

  bool operator==(const SymExpr& o) const;
  bool operator!=(const SymExpr& o) const { return !(*this == o); }

  // d/dv of num/u^p by the quotient rule; v may be any variable except the
  // spin (the denominator depends on v and w only through u).
  SymExpr derivative(Var v) const;

  // Sign flip v -> -v (u is even in v and w, so only num changes).
  SymExpr negated_var(Var v) const;

  // Large-spin limit of this expression: with D the J-degree of num, returns
  // coefficient_of(J, D) / u^u_pow when D == j_pow, zero when D < j_pow, and
  // throws std::logic_error (divergent limit) when D > j_pow.
  SymExpr spin_limit() const;

  double evaluate(const std::array<double, kNumVars>& x) const;

  std::string to_string() const;
};

// Complex expression as an explicit (real, imaginary) pair, which keeps the
// polynomial core rational and turns the reality check of the derived
// Hamiltonian into an exact zero test.
struct ComplexExpr {
  SymExpr re;
  SymExpr im;

  ComplexExpr operator+(const ComplexExpr& o) const;
  ComplexExpr operator-(const ComplexExpr& o) const;
  ComplexExpr operator*(const ComplexExpr& o) const;
  ComplexExpr conjugate() const;
  ComplexExpr scaled(const Rational& c) const;
  ComplexExpr over_j(int count) const;
};

using Rep = inst::Rep;

enum class Side { left, right };
enum class SpinOp { plus, minus, z };

// Symbolic image of a collective spin operator acting on the coherent-state
// kernel from the left or the right, after the momentum substitution
// d/dx -> -J pi (Husimi convention) or +J pi (Glauber convention). The right
// action of an operator A is the complex conjugate of the left image of its
// adjoint.
ComplexExpr spin_operator_symbol(SpinOp which, Side side, Rep rep);

// Arithmetic tape compiled from a SymExpr: precomputed variable powers, one
// fused multiply-accumulate per monomial, one division by the u power. The
// spin variable must be eliminated before compilation.
class CompiledEvaluator {
 public:
  CompiledEvaluator() = default;
  explicit CompiledEvaluator(const SymExpr& expr);

  // x = (v, w, pi_v, pi_w); rates from p. Safe for concurrent use.
  double operator()(const std::array<double, 4>& x, const ModelParams& p) const;

 private:
  struct MonoInstr {
    double coeff;
    std::array<std::uint16_t, 10> factors;  // power-register indices
    std::uint8_t n_factors;
  };
  std::vector<std::pair<std::uint8_t, std::uint8_t>> power_plan_;  // (var, max power)
  std::vector<std::uint16_t> reg_of_power_[kNumVars];
  std::vector<MonoInstr> tape_;
  int u_pow_ = 0;
  std::size_t n_regs_ = 0;
};

// Fully derived auxiliary Hamiltonian of one representation, with the exact
// expression (rates kept symbolic) and compiled evaluators for the value and
// the four first partial derivatives.
struct SymbolicHamiltonian {
  Rep rep = Rep::H;
  SymExpr value;
  std::array<SymExpr, 4> gradient;  // d/d(v, w, pi_v, pi_w)

  CompiledEvaluator compiled_value;
  std::array<CompiledEvaluator, 4> compiled_gradient;

  // Coefficient of pi_v^a pi_w^b as an expression in (v, w) and the rates.
  SymExpr pi_coefficient(int a, int b) const;

  // Largest total momentum degree with a nonzero coefficient.
  int momentum_degree() const;
};

// Assembles the generator image term by term from the operator symbols
// (coherent drive commutator plus the two dissipators), divides by the spin,
// and takes the exact large-spin limit. The imaginary part must cancel
// identically; a nonzero residue throws std::logic_error. The result is a
// polynomial in the momenta of degree four: the nonlinear dissipator
// contributes four operator factors, and the quartic survives the limit (its
// axis restriction is the printed pi_w^4 coefficient), so the degree bound
// asserted by the tests is four, not three.
SymbolicHamiltonian derive_hamiltonian(Rep rep);

// Numeric Hamilton flow (dx/dt, dpi/dt) = (grad_pi H, -grad_x H) at
// q = (v, w, pi_v, pi_w).
std::array<double, 4> hamilton_flow(const SymbolicHamiltonian& ham, const std::array<double, 4>& q,
                                    const ModelParams& p);

double hamiltonian_value(const SymbolicHamiltonian& ham, const std::array<double, 4>& q,
                         const ModelParams& p);

// Linearization of the Hamilton flow at an on-axis fixed point x* with
// pi = 0, in column convention over the state (dv, dw, dpi_v, dpi_w):
//   [[Jmf, 2 Dmat], [0, -Jmf^T]]
// where Jmf is the mean-field Jacobian and Dmat = (1/2) grad_pi^2 H. Its
// transpose is the row-convention block form with 2 Dmat in the lower-left
// corner. Because H(x, 0) = 0, the lower-left block vanishes exactly.
struct KMatrixResult {
  Eigen::Matrix4d k;
  std::array<std::complex<double>, 4> eigenvalues;
  // Columns of right_eigenvectors satisfy K c = lambda c; rows i of
  // left_eigenvectors_t (stored transposed, as columns) satisfy c^T K =
  // lambda c^T.
  Eigen::Matrix4cd right_eigenvectors;
  Eigen::Matrix4cd left_eigenvectors;
  std::array<bool, 4> stable{};                // Re(lambda) < 0
  std::array<bool, 4> pi_components_vanish{};  // momentum part of the right eigenvector ~ 0
};

KMatrixResult k_matrix(const SymbolicHamiltonian& ham, const mf::FixedPoint& fp,
                       const ModelParams& p);

}  // namespace macrospin::symham
