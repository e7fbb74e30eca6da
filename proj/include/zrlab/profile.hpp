#pragma once

// Macroscopic density profiles u0(x).

#include <cstddef>
#include <variant>
#include <vector>

namespace zrlab {

/// values[i] holds on [breakpoints[i-1], breakpoints[i]) with the outer
/// pieces extending to -inf and +inf; values.size() == breakpoints.size() + 1.
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

/// Linear interpolation on a sorted grid, constant extension outside it.
struct SampledProfile {
  std::vector<double> x;
  std::vector<double> values;
};

class Profile {
 public:
  using Representation = std::variant<PiecewiseConstant, SampledProfile>;

  /// Throws std::invalid_argument on unsorted grids, size mismatches or negative values.
  explicit Profile(Representation rep);

  static Profile constant(double value) { return Profile(PiecewiseConstant{{}, {value}}); }
  /// u_l on x < at, u_r on x >= at.
  static Profile step(double left, double right, double at = 0.0) {
    return Profile(PiecewiseConstant{{at}, {left, right}});
  }

  double operator()(double x) const;
  double min() const;
  double max() const;
  /// Exact integral over [a, b].
  double integral(double a, double b) const;
  bool is_piecewise_constant() const noexcept { return std::holds_alternative<PiecewiseConstant>(rep_); }
  const Representation& representation() const noexcept { return rep_; }
  /// Points where the profile is not smooth (breakpoints or grid nodes).
  std::vector<double> kinks() const;

 private:
  Representation rep_;
};

}  // namespace zrlab
