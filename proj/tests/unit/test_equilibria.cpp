#include <doctest.h>

#include <cmath>
#include <sstream>

#include "zrlab/equilibria.hpp"

using namespace zrlab;

namespace {

// brute-force series oracle for Z and M
std::pair<double, double> series(double psi, const RateFunction& r, int terms) {
  double term = 1.0, z = 1.0, m = 0.0;
  for (int k = 1; k < terms; ++k) {
    term *= psi / r(k);
    z += term;
    m += k * term;
  }
  return {z, m / z};
}

}  // namespace

TEST_SUITE("equilibria") {
  TEST_CASE("partition function") {
    const auto geo = RateFunction::geometric();
    CHECK(partition_z(0.0, geo) == 1.0);
    CHECK(partition_z(0.5, geo) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(partition_z(1.0, RateFunction::capped_linear(2)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS(partition_z(1.0, geo));
    CHECK_THROWS(partition_z(-0.1, geo));
  }

  TEST_CASE("mean occupancy") {
    const auto geo = RateFunction::geometric();
    CHECK(mean_occupancy(0.0, geo) == 0.0);
    CHECK(mean_occupancy(0.5, geo) == doctest::Approx(1.0).epsilon(1e-12));
    const auto cap = RateFunction::capped_linear(2);
    CHECK(mean_occupancy(1.0, cap) == doctest::Approx(series(1.0, cap, 1000000).second).epsilon(1e-10));
    const auto table = RateFunction({0.0, 0.5, 1.5, 2.0}, 2.0);
    CHECK(partition_z(1.3, table) == doctest::Approx(series(1.3, table, 20000).first).epsilon(1e-12));
  }

  TEST_CASE("Z and M strictly increasing on a fugacity grid") {
    const auto cap = RateFunction::capped_linear(3);
    double z_prev = 0.0, m_prev = -1.0;
    for (double psi = 0.0; psi < 2.99; psi += 0.05) {
      const double z = partition_z(psi, cap);
      const double m = mean_occupancy(psi, cap);
      CHECK(z > z_prev);
      CHECK(m > m_prev);
      z_prev = z;
      m_prev = m;
    }
  }

  TEST_CASE("inverse mean occupancy") {
    const auto geo = RateFunction::geometric();
    CHECK(inverse_mean_occupancy(1.0, geo) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(inverse_mean_occupancy(0.0, geo) == 0.0);
    const auto cap = RateFunction::capped_linear(2);
    CHECK(mean_occupancy(inverse_mean_occupancy(3.7, cap), cap) == doctest::Approx(3.7).epsilon(1e-9));
  }

  TEST_CASE("single-site law") {
    const SingleSiteLaw law(0.5, RateFunction::geometric());
    double total = 0.0;
    for (int k = 0; k < 200; ++k) total += law.probability(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.mean() == doctest::Approx(1.0));
    CHECK(law.cdf(0) == doctest::Approx(0.5));
    const SingleSiteLaw capped(1.2, RateFunction::capped_linear(2));
    total = 0.0;
    double mean = 0.0;
    for (int k = 0; k < 2000; ++k) {
      total += capped.probability(k);
      mean += k * capped.probability(k);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean == doctest::Approx(mean_occupancy(1.2, RateFunction::capped_linear(2))).epsilon(1e-10));
  }

  TEST_CASE("density rho") {
    const auto geo = RateFunction::geometric();
    CHECK(density_rho(0.0, DisorderLaw::homogeneous(), geo) == 0.0);
    CHECK(density_rho(0.5, DisorderLaw::homogeneous(), geo) == doctest::Approx(1.0));
    CHECK(density_rho(0.25, DisorderLaw::finite_support({{0.5, 0.5}, {1.0, 0.5}}), geo) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS(density_rho(0.6, DisorderLaw::uniform(0.5), geo));
  }

  TEST_CASE("density rho strictly increasing; flux inverts it") {
    const auto law = DisorderLaw::shifted_beta(0.5, 2, 1);
    const auto geo = RateFunction::geometric();
    double prev = -1.0;
    for (double phi = 0.0; phi < 0.49; phi += 0.02) {
      const double rho = density_rho(phi, law, geo);
      CHECK(rho > prev);
      CHECK(flux_f(rho, law, geo) == doctest::Approx(phi).epsilon(1e-8));
      prev = rho;
    }
  }

  TEST_CASE("critical density") {
    const auto geo = RateFunction::geometric();
    CHECK(std::isinf(critical_density(DisorderLaw::finite_support({{0.5, 0.2}, {1.0, 0.8}}), geo)));
    CHECK(std::isinf(critical_density(DisorderLaw::homogeneous(), geo)));
    CHECK(critical_density(DisorderLaw::shifted_beta(0.5, 2, 1), geo) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(critical_density_quadrature(DisorderLaw::shifted_beta(0.5, 2, 1), geo) == doctest::Approx(2.0).epsilon(1e-6));
    // uniform law: c E[1/(alpha-c)] diverges logarithmically
    CHECK(std::isinf(critical_density(DisorderLaw::uniform(0.5), geo)));
    CHECK(std::isinf(critical_density_quadrature(DisorderLaw::uniform(0.5), geo)));
    // a steeper Beta shape keeps rho* finite for a non-geometric rate too
    const auto cap = RateFunction::capped_linear(2);
    const double rs = critical_density(DisorderLaw::shifted_beta(0.5, 3, 1), cap);
    CHECK(std::isfinite(rs));
    CHECK(critical_density_quadrature(DisorderLaw::shifted_beta(0.5, 3, 1), cap) == doctest::Approx(rs).epsilon(1e-6));
  }

  TEST_CASE("flux function") {
    const auto geo = RateFunction::geometric();
    CHECK(flux_f(0.0, DisorderLaw::homogeneous(), geo) == 0.0);
    CHECK(flux_f(1.0, DisorderLaw::homogeneous(), geo) == doctest::Approx(0.5).epsilon(1e-10));
    const auto law = DisorderLaw::shifted_beta(0.5, 2, 1);
    CHECK(flux_f(3.0, law, geo) == 0.5);
    CHECK(flux_f(2.0, law, geo) == 0.5);
    for (double rho = 0.0; rho < 5.0; rho += 0.37) {
      CHECK(flux_f(rho, DisorderLaw::homogeneous(), geo) == doctest::Approx(rho / (1.0 + rho)).epsilon(1e-8));
    }
  }

  TEST_CASE("flux table: nondecreasing, concave, flat above rho*") {
    const auto geo = RateFunction::geometric();
    const auto t = make_flux_table(DisorderLaw::shifted_beta(0.5, 2, 1), geo, 4.0);
    CHECK(t.rho_star == doctest::Approx(2.0));
    CHECK(t.is_nondecreasing());
    CHECK(t.is_concave(1e-8));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.rho[i] >= 2.0) CHECK(t.f[i] == 0.5);
    }
    const auto h = make_flux_table(DisorderLaw::homogeneous(), geo, 3.0);
    CHECK(h.size() == 1001);
    for (std::size_t i = 0; i < h.size(); i += 50) CHECK(h.f[i] == doctest::Approx(h.rho[i] / (1.0 + h.rho[i])).epsilon(1e-8));
    std::stringstream ss;
    write_flux_table_csv(ss, h);
    const auto back = read_flux_table_csv(ss);
    CHECK(back.rho.size() == h.rho.size());
    CHECK(back.f[500] == h.f[500]);
  }

  TEST_CASE("product measure sampling") {
    const auto field = RateField::homogeneous(1000000);
    const auto zero = sample_product_measure(QuenchedProductLaw(0.0, field, RateFunction::geometric()), 1);
    CHECK(zero.total() == 0);
    const auto eta = sample_product_measure(QuenchedProductLaw(0.5, field, RateFunction::geometric()), 2);
    const double mean = static_cast<double>(eta.total()) / 1e6;
    CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt(2.0 / 1e6));  // variance psi/(1-psi)^2 = 2
    CHECK(sample_product_measure(QuenchedProductLaw(0.5, field, RateFunction::geometric()), 2) == eta);
    CHECK_THROWS(QuenchedProductLaw(0.6, RateField::from_values({1.0, 0.5}), RateFunction::geometric()));
  }

  TEST_CASE("marginals dominate mu at r(inf) theta when phi >= r(inf) theta") {
    const auto rate = RateFunction::capped_linear(2);
    const auto field = RateField::from_values({0.55, 0.8, 1.0});
    const double theta = 0.5;
    const QuenchedProductLaw law(2.0 * 0.52, field, rate);
    const SingleSiteLaw reference(rate.limit() * theta, rate);
    for (std::size_t x = 0; x < field.size(); ++x) {
      const auto m = law.marginal(x);
      for (int k = 0; k < 60; ++k) CHECK(m.cdf(k) <= reference.cdf(k) + 1e-14);
    }
  }

  TEST_CASE("non-geometric sampler matches its table") {
    const auto rate = RateFunction::capped_linear(2);
    const SingleSiteLaw law(1.5, rate);
    Rng g = make_rng(8, "sampler");
    const int n = 200000;
    std::vector<int> hist(6, 0);
    for (int i = 0; i < n; ++i) {
      const auto k = law.sample(g);
      if (k < 5) ++hist[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < 5; ++k) {
      const double p = law.probability(k);
      CHECK(std::abs(hist[static_cast<std::size_t>(k)] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
    }
  }
}
