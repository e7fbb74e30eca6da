#include "zrlab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace zrlab {

namespace {

struct SeriesSums {
  double z;
  double first_moment;
};

// Sums psi^k/R(k) and k psi^k/R(k). `gap` is 1 - psi/r(inf), passed separately
// so callers close to the radius of convergence keep full relative precision.
SeriesSums series(double psi, double gap, const RateFunction& rate) {
  const std::size_t kmax = rate.table_max();
  double term = 1.0;
  SeriesSums s{0.0, 0.0};
  for (std::size_t k = 0; k < kmax; ++k) {
    s.z += term;
    s.first_moment += static_cast<double>(k) * term;
    term *= psi / rate(static_cast<std::int64_t>(k + 1));
  }
  // Beyond the table every ratio equals q = psi/r(inf):
  //   sum_{j>=K} t_K q^{j-K} = t_K / (1-q),  sum_{j>=K} j t_K q^{j-K} = t_K (K/(1-q) + q/(1-q)^2).
  const double q = 1.0 - gap;
  const auto K = static_cast<double>(kmax);
  s.z += term / gap;
  s.first_moment += term * (K / gap + q / (gap * gap));
  return s;
}

void check_fugacity(double psi, const RateFunction& rate) {
  if (!(psi >= 0.0) || !(psi < rate.limit())) {
    throw std::domain_error("fugacity " + std::to_string(psi) + " outside [0, r(inf)) = [0, " +
                            std::to_string(rate.limit()) + ")");
  }
}

double mean_with_gap(double psi, double gap, const RateFunction& rate) {
  if (psi == 0.0) return 0.0;
  const auto s = series(psi, gap, rate);
  return s.first_moment / s.z;
}

}  // namespace

double partition_z(double psi, const RateFunction& rate) {
  check_fugacity(psi, rate);
  return series(psi, (rate.limit() - psi) / rate.limit(), rate).z;
}

double mean_occupancy(double psi, const RateFunction& rate) {
  check_fugacity(psi, rate);
  return mean_with_gap(psi, (rate.limit() - psi) / rate.limit(), rate);
}

double inverse_mean_occupancy(double rho, const RateFunction& rate) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::domain_error("inverse_mean_occupancy: density must be finite and >= 0");
  if (rho == 0.0) return 0.0;
  if (rate.is_geometric()) return rho / (1.0 + rho);
  double lo = 0.0;
  double hi = rate.limit();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * rate.limit(); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_with_gap(mid, (rate.limit() - mid) / rate.limit(), rate) < rho) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SingleSiteLaw::SingleSiteLaw(double psi, const RateFunction& rate) : psi_(psi) {
  check_fugacity(psi, rate);
  const double gap = (rate.limit() - psi) / rate.limit();
  const auto s = series(psi, gap, rate);
  z_ = s.z;
  mean_ = psi == 0.0 ? 0.0 : s.first_moment / s.z;
  tail_ratio_ = psi / rate.limit();
  const std::size_t kmax = rate.table_max();
  double term = 1.0;
  head_pmf_.resize(kmax);
  for (std::size_t k = 0; k < kmax; ++k) {
    head_pmf_[k] = term / z_;
    term *= psi / rate(static_cast<std::int64_t>(k + 1));
  }
  tail_mass_ = term / gap / z_;
}

double SingleSiteLaw::probability(std::int64_t k) const {
  if (k < 0) return 0.0;
  const auto K = static_cast<std::int64_t>(head_pmf_.size());
  if (k < K) return head_pmf_[static_cast<std::size_t>(k)];
  return tail_mass_ * (1.0 - tail_ratio_) * std::pow(tail_ratio_, static_cast<double>(k - K));
}

double SingleSiteLaw::cdf(std::int64_t k) const {
  if (k < 0) return 0.0;
  const auto K = static_cast<std::int64_t>(head_pmf_.size());
  double acc = 0.0;
  for (std::int64_t j = 0; j < std::min(k + 1, K); ++j) acc += head_pmf_[static_cast<std::size_t>(j)];
  if (k >= K) acc += tail_mass_ * (1.0 - std::pow(tail_ratio_, static_cast<double>(k - K + 1)));
  return std::min(acc, 1.0);
}

std::int64_t SingleSiteLaw::sample(Rng& g) const {
  double u = uniform01(g);
  for (std::size_t k = 0; k < head_pmf_.size(); ++k) {
    if (u < head_pmf_[k]) return static_cast<std::int64_t>(k);
    u -= head_pmf_[k];
  }
  return static_cast<std::int64_t>(head_pmf_.size()) + geometric_failures(g, tail_ratio_);
}

double density_rho(double phi, const DisorderLaw& law, const RateFunction& rate) {
  const double rinf = rate.limit();
  if (!(phi >= 0.0) || !(phi < rinf * law.c())) {
    throw std::domain_error("density_rho: phi " + std::to_string(phi) + " outside [0, r(inf) c)");
  }
  if (phi == 0.0) return 0.0;
  return law.expect([&](double alpha) {
    return mean_with_gap(phi / alpha, (rinf * alpha - phi) / (rinf * alpha), rate);
  });
}

double critical_density_quadrature(const DisorderLaw& law, const RateFunction& rate) {
  if (!law.is_continuous()) return kInfiniteDensity;  // atom at c: M(r(inf)) = inf
  const double c = law.c();
  const double w = 1.0 - c;
  const double rinf = rate.limit();
  // integrand in b = (alpha - c)/(1 - c); 1 - c/alpha = w b / alpha exactly
  auto h = [&](double b) {
    const double alpha = c + w * b;
    return mean_with_gap(rinf * c / alpha, w * b / alpha, rate) * law.unit_density(b);
  };
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  constexpr double kCap = 1e12;
  double total = integrator.integrate(h, 0.1, 1.0, 1e-12);
  double previous_increment = INFINITY;
  int stalled = 0;
  for (int k = 1; k < 300; ++k) {
    const double hi = std::pow(10.0, -k + 0.0);
    const double lo = hi / 10.0;
    const double inc = integrator.integrate(h, lo, hi, 1e-12);
    total += inc;
    if (!std::isfinite(total) || total > kCap) return kInfiniteDensity;
    if (k >= 3) {
      const double ratio = inc / previous_increment;
      stalled = ratio >= 0.999 ? stalled + 1 : 0;
      if (stalled >= 3) return kInfiniteDensity;
      // geometric extrapolation of the remaining decades
      if (ratio < 0.999) {
        const double remainder = inc * ratio / (1.0 - ratio);
        if (remainder <= 1e-13 * total) return total + remainder;
      }
    }
    previous_increment = inc;
  }
  return kInfiniteDensity;
}

double critical_density(const DisorderLaw& law, const RateFunction& rate) {
  if (law.has_atom_at_c()) return kInfiniteDensity;
  // Near alpha = c, M(r(inf) c/alpha) ~ c/(alpha - c) for every admissible rate,
  // so finiteness is decided by E[(alpha - c)^{-1}].
  if (std::holds_alternative<UniformInterval>(law.family())) return kInfiniteDensity;
  const auto& beta = std::get<ShiftedBeta>(law.family());
  if (beta.a <= 1.0) return kInfiniteDensity;
  if (rate.is_geometric()) {
    // rho* = c E[(alpha - c)^{-1}] = c/(1-c) E[1/B] = c/(1-c) (a+b-1)/(a-1)
    return beta.c / (1.0 - beta.c) * (beta.a + beta.b - 1.0) / (beta.a - 1.0);
  }
  return critical_density_quadrature(law, rate);
}

namespace {

double invert_density(double rho, const DisorderLaw& law, const RateFunction& rate) {
  const double top = rate.limit() * law.c();
  double lo = 0.0;
  double hi = top;
  while (hi - lo > 1e-13 * std::max(1.0, top)) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (density_rho(mid, law, rate) < rho) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double flux_with_critical(double rho, double rho_star, const DisorderLaw& law, const RateFunction& rate) {
  if (!(rho >= 0.0)) throw std::domain_error("flux_f: negative density");
  if (rho == 0.0) return 0.0;
  if (rho >= rho_star) return rate.limit() * law.c();
  return invert_density(rho, law, rate);
}

}  // namespace

double fugacity_for_density(double rho, const DisorderLaw& law, const RateFunction& rate) {
  if (!(rho >= 0.0)) throw std::domain_error("fugacity_for_density: negative density");
  if (rho == 0.0) return 0.0;
  if (rho >= critical_density(law, rate)) {
    throw std::domain_error("fugacity_for_density: density at or above the critical density");
  }
  return invert_density(rho, law, rate);
}

double flux_f(double rho, const DisorderLaw& law, const RateFunction& rate) {
  return flux_with_critical(rho, critical_density(law, rate), law, rate);
}

FluxTable make_flux_table(const DisorderLaw& law, const RateFunction& rate, double rho_max, double step) {
  if (!(rho_max > 0.0)) throw std::invalid_argument("make_flux_table: rho_max must be positive");
  if (step <= 0.0) step = 1e-3 * rho_max;
  const auto intervals = static_cast<std::size_t>(std::ceil(rho_max / step - 1e-9));
  const double rho_star = critical_density(law, rate);
  auto table = FluxTable::from_function([&](double r) { return flux_with_critical(r, rho_star, law, rate); },
                                        rho_max, intervals);
  table.rho_star = rho_star;
  table.c = law.c();
  return table;
}

QuenchedProductLaw::QuenchedProductLaw(double phi_, RateField field_, RateFunction rate_)
    : phi(phi_), field(std::move(field_)), rate(std::move(rate_)) {
  if (!(phi >= 0.0)) throw std::domain_error("product law: phi must be >= 0");
  if (field.size() > 0 && !(phi / field.min() < rate.limit())) {
    throw std::domain_error("product law: phi/alpha_x must stay below r(inf) at every site");
  }
}

Configuration sample_product_measure(const QuenchedProductLaw& law, std::uint64_t seed) {
  Rng g = make_rng(seed, "product_measure");
  Configuration config = Configuration::empty(law.field.size());
  if (law.phi == 0.0) return config;
  if (law.rate.is_geometric()) {
    for (std::size_t x = 0; x < config.size(); ++x) {
      // P(eta >= k) = psi^k
      config[x] = static_cast<Occupancy>(geometric_failures(g, law.phi / law.field[x]));
    }
    return config;
  }
  for (std::size_t x = 0; x < config.size(); ++x) config[x] = static_cast<Occupancy>(law.marginal(x).sample(g));
  return config;
}

}  // namespace zrlab
