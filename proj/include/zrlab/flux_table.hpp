#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace zrlab {

/// Sampled graph of a macroscopic flux rho -> f(rho) on [rho_0, rho_max],
/// evaluated by linear interpolation (constant extension outside the grid).
struct FluxTable {
  std::vector<double> rho;
  std::vector<double> f;
  double rho_star = std::numeric_limits<double>::infinity();
  /// Left endpoint of the disorder law (the flat value above rho_star).
  double c = 1.0;

  static FluxTable from_function(const std::function<double(double)>& flux, double rho_max, std::size_t intervals,
                                 double rho_min = 0.0);

  std::size_t size() const noexcept { return rho.size(); }
  double rho_min() const { return rho.front(); }
  double rho_max() const { return rho.back(); }
  double operator()(double density) const;
  /// Slope of the interval containing `density` (right interval at nodes).
  double slope(double density) const;
  /// Largest |difference quotient| over the table.
  double max_abs_slope() const;
  double min_slope() const;
  double max_slope() const;
  /// Secant-slope concavity test with tolerance `tol` on slope differences
  /// scaled by grid spacing (equivalent to the midpoint test on uniform grids).
  bool is_concave(double tol = 1e-8) const;
  bool is_nondecreasing(double tol = 0.0) const;
  /// Multiplies every flux value (used for the drift factor gamma).
  FluxTable scaled(double factor) const;
};

void write_flux_table_csv(std::ostream& os, const FluxTable& table);
FluxTable read_flux_table_csv(std::istream& is);

}  // namespace zrlab
