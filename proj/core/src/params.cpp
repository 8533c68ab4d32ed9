#include "macrospin/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace macrospin {

int ModelParams::two_j() const {
  const double twice = 2.0 * spin_j;
  const double rounded = std::round(twice);
  if (std::abs(twice - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument("spin_j must be a positive integer or half-integer, got " +
                                std::to_string(spin_j));
  }
  return static_cast<int>(rounded);
}

void ModelParams::validate() const {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gamma must be positive");
  }
  if (!(big_gamma >= 0.0)) {
    throw std::invalid_argument("big_gamma must be non-negative");
  }
  if (!(omega >= 0.0)) {
    throw std::invalid_argument("omega must be non-negative");
  }
  (void)two_j();
}

}  // namespace macrospin
