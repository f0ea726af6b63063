#pragma once

namespace sepvar {

/// f(x) = c0 + c1 cos(x) + c2 sin(x) through samples at x = 0, +2pi/3, -2pi/3.
struct SinusoidFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double x) const;
  double amplitude() const;
  /// Minimizer in (-pi, pi]; 0 when the fit is flat.
  double argmin() const;
  double argmax() const;
  bool degenerate(double tolerance) const { return amplitude() <= tolerance; }
};

/// Offset between the three fit samples.
inline constexpr double kSinusoidOffset = 2.0943951023931954923;  // 2pi/3

SinusoidFit fit_sinusoid(double at_zero, double at_plus, double at_minus);

}  // namespace sepvar
