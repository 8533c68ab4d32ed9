#pragma once

namespace macrospin {

// Model parameters of the driven collective spin.
//
// All rates are measured in units of the linear pump rate gamma; the command
// line front end and the test suites fix gamma = 1. The formulas throughout
// the library keep gamma explicit so that any consistent unit choice works.
struct ModelParams {
  double omega = 0.0;      // coherent drive rate
  double gamma = 1.0;      // linear pump rate (the reference unit)
  double big_gamma = 0.0;  // nonlinear dissipation rate
  double spin_j = 0.0;     // total spin quantum number; 2*spin_j must be integral

  // Throws std::invalid_argument when a field is out of range:
  // gamma > 0, big_gamma >= 0, omega >= 0, spin_j > 0 with 2*spin_j integral.
  void validate() const;

  // 2J as an exact integer. Throws when 2*spin_j is not integral.
  int two_j() const;
};

}  // namespace macrospin
