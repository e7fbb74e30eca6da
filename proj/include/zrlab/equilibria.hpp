#pragma once

// Product-form equilibria of the disordered zero-range process and the
// macroscopic flux they induce.
//
// Fugacity conventions: a homogeneous site law mu_psi is indexed by
// psi in [0, r(inf)); the quenched product law nu_phi puts mu_{phi/alpha_x} at
// site x and is indexed by phi in [0, r(inf) c). The stationary current under
// nu_phi equals phi, so flux_f returns phi in both the general and the
// geometric (r = 1{k>=1}, r(inf) = 1) normalizations.

#include <cstdint>
#include <limits>
#include <vector>

#include "zrlab/configuration.hpp"
#include "zrlab/environment.hpp"
#include "zrlab/flux_table.hpp"

namespace zrlab {

inline constexpr double kInfiniteDensity = std::numeric_limits<double>::infinity();

/// Z(psi) = sum_k psi^k / (r(1)...r(k)). The part of the series beyond the
/// rate table is geometric with ratio psi / r(inf) and is summed in closed form.
double partition_z(double psi, const RateFunction& rate);

/// M(psi) = E_{mu_psi}[eta], the density of the homogeneous law.
double mean_occupancy(double psi, const RateFunction& rate);

/// M^{-1}(rho) by bisection on [0, r(inf)).
double inverse_mean_occupancy(double rho, const RateFunction& rate);

/// Single-site law mu_psi with an explicit probability table up to the end of
/// the rate table and a geometric tail beyond it.
class SingleSiteLaw {
 public:
  SingleSiteLaw(double psi, const RateFunction& rate);

  double psi() const noexcept { return psi_; }
  double z() const noexcept { return z_; }
  double mean() const noexcept { return mean_; }
  double probability(std::int64_t k) const;
  double cdf(std::int64_t k) const;
  std::int64_t sample(Rng& g) const;

 private:
  double psi_;
  double z_;
  double mean_;
  double tail_ratio_;             // psi / r(inf)
  std::vector<double> head_pmf_;  // P(eta = k), k < table_max
  double tail_mass_;              // P(eta >= table_max)
};

/// rho(phi) = E_Q[M(phi/alpha)], exact weighted sum for finite support and
/// tanh-sinh quadrature (relative tolerance 1e-10) for continuous laws.
double density_rho(double phi, const DisorderLaw& law, const RateFunction& rate);

/// rho* = E_Q[M(r(inf) c / alpha)], possibly infinite. Uses the closed form
/// c E[(alpha-c)^{-1}] for the geometric rate and a refinement-checked
/// quadrature otherwise.
double critical_density(const DisorderLaw& law, const RateFunction& rate);

/// Numerical route only: decade-refined quadrature towards alpha = c. Returns
/// infinity when successive decades stop shrinking or the partial integral
/// exceeds 1e12.
double critical_density_quadrature(const DisorderLaw& law, const RateFunction& rate);

/// The fugacity phi in [0, r(inf) c) with rho(phi) = rho, for rho < rho*.
double fugacity_for_density(double rho, const DisorderLaw& law, const RateFunction& rate);

/// Macroscopic flux: phi(rho) below rho*, r(inf) c at and above it.
double flux_f(double rho, const DisorderLaw& law, const RateFunction& rate);

/// Uniform grid on [0, rho_max]; default step 1e-3 rho_max. The table is flat
/// at r(inf) c for grid points at or above a finite rho*.
FluxTable make_flux_table(const DisorderLaw& law, const RateFunction& rate, double rho_max, double step = 0.0);

/// nu^alpha_phi for a fixed realization.
struct QuenchedProductLaw {
  double phi;
  RateField field;
  RateFunction rate;

  QuenchedProductLaw(double phi, RateField field, RateFunction rate);
  /// Law of eta(x).
  SingleSiteLaw marginal(std::size_t x) const { return SingleSiteLaw(phi / field[x], rate); }
};

/// Independent site draws from nu^alpha_phi (inverse CDF for the geometric rate).
Configuration sample_product_measure(const QuenchedProductLaw& law, std::uint64_t seed);

}  // namespace zrlab
