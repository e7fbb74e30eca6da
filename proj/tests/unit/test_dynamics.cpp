#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stats.hpp"
#include "zrlab/current.hpp"
#include "zrlab/equilibria.hpp"
#include "zrlab/kexclusion.hpp"
#include "zrlab/rate_tree.hpp"
#include "zrlab/zrp.hpp"

using namespace zrlab;
using namespace zrlab::testing;

namespace {

Configuration random_sector(std::size_t L, std::size_t N, std::uint64_t seed) {
  std::vector<Occupancy> v(L, 0);
  std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(N), 1);
  Rng g = make_rng(seed, "shuffle");
  std::shuffle(v.begin(), v.end(), g);
  return Configuration(v);
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("rate tree finds the leaf holding the target prefix") {
    const std::vector<double> rates{0.5, 0.0, 2.0, 0.0, 1.5, 0.25, 0.0};
    RateTree tree(rates);
    CHECK(tree.total() == doctest::Approx(4.25));
    CHECK(tree.find(0.0) == 0);
    CHECK(tree.find(0.49) == 0);
    CHECK(tree.find(0.51) == 2);
    CHECK(tree.find(2.6) == 4);
    CHECK(tree.find(4.2) == 5);
    tree.set(2, 0.0);
    CHECK(tree.total() == doctest::Approx(2.25));
    CHECK(tree.find(0.51) == 4);
    // random agreement with a linear scan
    Rng g = make_rng(1, "tree");
    std::vector<double> r(37);
    for (auto& x : r) x = uniform01(g) < 0.3 ? 0.0 : uniform01(g);
    RateTree t2(r);
    for (int i = 0; i < 1000; ++i) {
      const double target = uniform01(g) * t2.total();
      double acc = 0.0;
      std::size_t want = 0;
      for (; want < r.size(); ++want) {
        if (r[want] > 0.0 && target < acc + r[want]) break;
        acc += r[want];
      }
      CHECK(t2.find(target) == want);
    }
  }

  TEST_CASE("bond crossings on the ring") {
    CHECK(bond_crossings(10, 9, 9, 1) == 1);
    CHECK(bond_crossings(10, 9, 0, -1) == -1);
    CHECK(bond_crossings(10, 9, 8, 3) == 1);
    CHECK(bond_crossings(10, 9, 3, 2) == 0);
    CHECK(bond_crossings(10, 0, 0, 1) == 1);
  }

  TEST_CASE("empty initial state stays put with zero current") {
    const auto field = sample_rate_field(DisorderLaw::uniform(0.5), 50, 1);
    const auto run = run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), Configuration::empty(50), 100.0, 2);
    CHECK(run.final_config == Configuration::empty(50));
    CHECK(run.counter.displacement_total() == 0);
    const auto est = measure_current(run.counter, 10.0);
    CHECK(est.current == 0.0);
    CHECK(est.se == 0.0);
  }

  TEST_CASE("horizon zero returns the initial configuration") {
    const auto init = Configuration::flat(20, 33);
    const auto run = run_zrp(RateField::homogeneous(20), JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, 0.0, 3);
    CHECK(run.final_config == init);
    CHECK(run.events == 0);
  }

  TEST_CASE("particle number is conserved and runs are deterministic in the seed") {
    const auto field = sample_rate_field(DisorderLaw::shifted_beta(0.5, 2, 1), 200, 4);
    const auto init = sample_product_measure(QuenchedProductLaw(0.4, field, RateFunction::capped_linear(2)), 5);
    const JumpKernel k({{1, 0.5}, {2, 0.2}, {-1, 0.3}});
    const auto a = run_zrp(field, k, RateFunction::capped_linear(2), init, 50.0, 6);
    const auto b = run_zrp(field, k, RateFunction::capped_linear(2), init, 50.0, 6);
    CHECK(a.final_config.total() == init.total());
    CHECK(a.final_config == b.final_config);
    CHECK(a.events == b.events);
    CHECK(a.events > 0);
  }

  TEST_CASE("snapshots land at the requested times") {
    RunOptions opts;
    opts.snapshot_times = {0.0, 1.5, 3.0};
    const auto run = run_zrp(RateField::homogeneous(30), JumpKernel::totally_asymmetric(), RateFunction::geometric(),
                             Configuration::flat(30, 30), 3.0, 7, opts);
    REQUIRE(run.snapshots.size() == 3);
    CHECK(run.snapshots[0].config == Configuration::flat(30, 30));
    CHECK(run.snapshots[1].time == 1.5);
    CHECK(run.snapshots[2].config == run.final_config);
  }

  TEST_CASE("invalid inputs are rejected") {
    const auto field = RateField::homogeneous(10);
    CHECK_THROWS(run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), Configuration::empty(9), 1.0, 1));
    CHECK_THROWS(run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), Configuration::empty(10), INFINITY, 1));
    CHECK_THROWS(run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), Configuration::empty(10), -1.0, 1));
    CHECK_THROWS(run_kexclusion(field, 1, Configuration::flat(10, 11), 1.0, 1));
  }

  TEST_CASE("single particle performs a rate-1 Poisson walk") {
    const std::size_t reps = 10000;
    const double t = 4.0;
    std::vector<std::int64_t> zrp_disp(reps), kex_disp(reps);
    Configuration one = Configuration::empty(100);
    one[0] = 1;
    const auto field = RateField::homogeneous(100);
    for (std::size_t r = 0; r < reps; ++r) {
      zrp_disp[r] = run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), one, t, derive_seed(1, "p", r))
                        .counter.displacement_total();
      kex_disp[r] = run_kexclusion(field, 1, one, t, derive_seed(2, "p", r)).counter.displacement_total();
    }
    const auto probs = poisson_probs(t, 12);
    CHECK(chi_square_fit(histogram(zrp_disp, 12), probs) > 0.01);
    CHECK(chi_square_fit(histogram(kex_disp, 12), probs) > 0.01);
  }

  // The space-averaged current relaxes slowly, so batch means of a single
  // run understate its error; the standard error comes from replicas.
  TEST_CASE("stationary start gives current phi") {
    const auto law = DisorderLaw::shifted_beta(0.5, 2, 1);
    std::vector<double> currents;
    for (std::size_t r = 0; r < 8; ++r) {
      const auto field = sample_rate_field(law, 10000, derive_seed(3, "field", r));
      const auto init = sample_product_measure(QuenchedProductLaw(0.4, field, RateFunction::geometric()), derive_seed(3, "init", r));
      const auto run = run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, 1000.0, derive_seed(3, "dyn", r));
      currents.push_back(measure_current(run.counter, 0.0).current);
    }
    const auto [m, se] = mean_se(currents);
    CHECK(std::abs(m - 0.4) <= 3.0 * se);
  }

  TEST_CASE("product measure is preserved by the dynamics") {
    const auto law = DisorderLaw::shifted_beta(0.5, 2, 1);
    std::vector<Occupancy> before, after;
    for (std::size_t r = 0; r < 3000; ++r) {
      const auto field = sample_rate_field(law, 40, derive_seed(4, "field", r));
      const auto init = sample_product_measure(QuenchedProductLaw(0.4, field, RateFunction::geometric()), derive_seed(4, "init", r));
      const auto run = run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, 10.0, derive_seed(4, "dyn", r));
      before.push_back(init[0]);
      after.push_back(run.final_config[0]);
    }
    CHECK(chi_square_two_sample(histogram(before, 6), histogram(after, 6)) > 0.01);
  }

  TEST_CASE("K-exclusion: full lattice is frozen") {
    const auto field = sample_rate_field(DisorderLaw::uniform(0.5), 12, 1);
    std::vector<Occupancy> full(12, 2);
    const auto run = run_kexclusion(field, 2, Configuration(full), 100.0, 3);
    CHECK(run.final_config == Configuration(full));
    CHECK(run.counter.displacement_total() == 0);
  }

  TEST_CASE("K-exclusion respects the capacity and conserves mass") {
    const auto field = sample_rate_field(DisorderLaw::shifted_beta(0.5, 2, 1), 300, 1);
    const auto init = Configuration::flat(300, 400);
    RunOptions opts;
    for (int i = 1; i <= 20; ++i) opts.snapshot_times.push_back(i * 2.5);
    const auto run = run_kexclusion(field, 2, init, 50.0, 2, opts);
    for (const auto& s : run.snapshots) {
      CHECK(s.config.total() == 400);
      CHECK(s.config.max() <= 2);
      CHECK(*std::min_element(s.config.eta.begin(), s.config.eta.end()) >= 0);
    }
  }

  TEST_CASE("homogeneous TASEP ring current is rho(1-rho) L/(L-1)") {
    const std::size_t L = 1000, N = 500;
    std::vector<double> currents;
    for (std::size_t r = 0; r < 10; ++r) {
      const auto run = run_kexclusion(RateField::homogeneous(L), 1, random_sector(L, N, 5 + r), 500.0, derive_seed(6, "dyn", r));
      const auto est = measure_current(run.counter, 0.0, 20);
      CHECK(est.batches == 20);
      currents.push_back(est.current);
    }
    const auto [m, se] = mean_se(currents);
    const double exact = 0.25 * static_cast<double>(L) / static_cast<double>(L - 1);
    CHECK(std::abs(m - exact) <= 3.0 * se);
  }

  TEST_CASE("measure_current preconditions") {
    const CurrentCounter c(10, 0, 100.0, 10);
    CHECK_THROWS_AS(measure_current(c, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(measure_current(c, 0.0, 20), std::invalid_argument);
    CHECK(batch_drift_z({1.0, 1.1, 0.9, 1.0, 1.1, 0.9}) == doctest::Approx(0.0));
    CHECK(batch_drift_z({1.0, 1.1, 0.9, 2.0, 2.1, 1.9}) > 10.0);
  }
}
