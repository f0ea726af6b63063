#include "sepvar/sinusoid.hpp"

#include <cmath>

namespace sepvar {

double SinusoidFit::operator()(double x) const { return c0 + c1 * std::cos(x) + c2 * std::sin(x); }

double SinusoidFit::amplitude() const { return std::hypot(c1, c2); }

double SinusoidFit::argmin() const {
  if (amplitude() == 0.0) return 0.0;
  return std::atan2(-c2, -c1);
}

double SinusoidFit::argmax() const {
  if (amplitude() == 0.0) return 0.0;
  return std::atan2(c2, c1);
}

SinusoidFit fit_sinusoid(double at_zero, double at_plus, double at_minus) {
  // cos(+-2pi/3) = -1/2, sin(+-2pi/3) = +-sqrt(3)/2
  SinusoidFit fit;
  fit.c0 = (at_zero + at_plus + at_minus) / 3.0;
  fit.c1 = (2.0 * at_zero - at_plus - at_minus) / 3.0;
  fit.c2 = (at_plus - at_minus) / std::sqrt(3.0);
  return fit;
}

}  // namespace sepvar
