#include <doctest.h>

#include <cmath>

#include "stats.hpp"
#include "zrlab/equilibria.hpp"
#include "zrlab/harris.hpp"
#include "zrlab/interaction_graph.hpp"
#include "zrlab/zrp.hpp"

using namespace zrlab;
using namespace zrlab::testing;

TEST_SUITE("harris") {
  TEST_CASE("schedule epochs are sorted and inside the block") {
    Rng g = make_rng(1, "sched");
    const auto s = make_schedule(500, JumpKernel::nearest_neighbor(0.7), 1.0, 0.3, g);
    CHECK(s.epochs.size() > 100);
    for (std::size_t i = 0; i < s.epochs.size(); ++i) {
      CHECK(s.epochs[i].time >= 0.0);
      CHECK(s.epochs[i].time <= 0.3);
      CHECK(s.epochs[i].threshold <= 1.0);
      if (i > 0) CHECK(s.epochs[i - 1].time <= s.epochs[i].time);
    }
  }

  TEST_CASE("empty state is unchanged") {
    const auto field = sample_rate_field(DisorderLaw::uniform(0.5), 64, 1);
    const auto out = run_harris(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), Configuration::empty(64), 50, 0.0, 2);
    CHECK(out == Configuration::empty(64));
  }

  TEST_CASE("isolated particle leaves at rate alpha r(1)") {
    // P(no jump by s) = exp(-alpha s); a single block of length s resolves it.
    const double alpha = 0.7;
    Configuration one = Configuration::empty(50);
    one[0] = 1;
    const auto field = RateField::homogeneous(50, alpha);
    for (double s : {0.5, 1.0, 2.0}) {
      const std::size_t reps = 4000;
      double stayed = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto out = run_harris(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), one, 1, s,
                                    derive_seed(3, "iso", r), Execution::Serial);
        stayed += out[0] == 1 ? 1.0 : 0.0;
      }
      const double p = std::exp(-alpha * s);
      const double se = std::sqrt(p * (1 - p) / reps);
      CHECK(std::abs(stayed / reps - p) <= 4.0 * se);
    }
  }

  TEST_CASE("serial and parallel resolution agree exactly") {
    const auto field = sample_rate_field(DisorderLaw::shifted_beta(0.5, 2, 1), 3000, 4);
    const auto init = sample_product_measure(QuenchedProductLaw(0.4, field, RateFunction::geometric()), 5);
    const JumpKernel k({{1, 0.6}, {-1, 0.3}, {2, 0.1}});
    HarrisStats a_stats, b_stats;
    const auto a = run_harris(field, k, RateFunction::geometric(), init, 40, 0.0, 6, Execution::Serial, &a_stats);
    const auto b = run_harris(field, k, RateFunction::geometric(), init, 40, 0.0, 6, Execution::Parallel, &b_stats);
    CHECK(a == b);
    CHECK(a.total() == init.total());
    CHECK(a_stats.accepted == b_stats.accepted);
    CHECK(a_stats.accepted > 0);

    const auto ka = run_harris_kexclusion(field, 2, Configuration::flat(3000, 2000), 40, 0.0, 7, Execution::Serial);
    const auto kb = run_harris_kexclusion(field, 2, Configuration::flat(3000, 2000), 40, 0.0, 7, Execution::Parallel);
    CHECK(ka == kb);
    CHECK(ka.max() <= 2);
  }

  TEST_CASE("Harris and Gillespie agree in law") {
    const auto field = sample_rate_field(DisorderLaw::shifted_beta(0.5, 2, 1), 32, 8);
    const auto init = Configuration::flat(32, 48);
    const double t0 = default_block_length(JumpKernel::totally_asymmetric(), 1.0);
    const std::size_t blocks = 20;
    const double horizon = t0 * static_cast<double>(blocks);
    std::vector<Occupancy> harris, gillespie;
    for (std::size_t r = 0; r < 4000; ++r) {
      harris.push_back(run_harris(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, blocks, t0,
                                  derive_seed(9, "h", r), Execution::Serial)[0]);
      gillespie.push_back(run_zrp(field, JumpKernel::totally_asymmetric(), RateFunction::geometric(), init, horizon,
                                  derive_seed(9, "g", r)).final_config[0]);
    }
    CHECK(chi_square_two_sample(histogram(harris, 8), histogram(gillespie, 8)) > 0.01);
  }

  TEST_CASE("thinning acceptance matches alpha r(m) / r(inf)") {
    const auto rate = RateFunction::capped_linear(3);
    for (std::int64_t m : {1, 2, 5}) {
      const std::size_t n = 100000;
      const double f = thinning_acceptance_frequency(0.6, rate, m, n, 10 + static_cast<std::uint64_t>(m));
      const double p = 0.6 * rate(m) / rate.limit();
      CHECK(std::abs(f - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
    }
  }
}

TEST_SUITE("interaction_graph") {
  TEST_CASE("union find") {
    UnionFind uf(6);
    CHECK(uf.unite(0, 1));
    CHECK(uf.unite(2, 3));
    CHECK_FALSE(uf.unite(1, 0));
    CHECK(uf.unite(1, 3));
    CHECK(uf.size_of(2) == 4);
    CHECK(uf.find(0) == uf.find(3));
    CHECK(uf.size_of(5) == 1);
  }

  TEST_CASE("t0 = 0 gives singletons") {
    const auto g = build_interaction_graph(JumpKernel::totally_asymmetric(), 0.0, 1000, 1);
    CHECK(g.edges == 0);
    REQUIRE(g.size_histogram.size() == 1);
    CHECK(g.size_histogram.at(1) == 1000);
  }

  TEST_CASE("subcritical threshold for K = 2") {
    CHECK(subcritical_threshold(2, 1.0) == doctest::Approx(0.14384).epsilon(1e-4));
    CHECK(subcritical_threshold(2, 1.0) == doctest::Approx(-std::log(0.75) / 2.0));
    const double t = subcritical_threshold(2, 1.0);
    CHECK(4.0 * (1.0 - std::exp(-2.0 * t)) == doctest::Approx(1.0));
  }

  TEST_CASE("symmetric range of a kernel") {
    const auto off = symmetric_offsets(JumpKernel({{1, 0.5}, {3, 0.5}}));
    CHECK(off.size() == 4);
    CHECK(symmetric_offsets(JumpKernel::totally_asymmetric()).size() == 2);
    CHECK(torus_nearest_neighbors().size() == 4);
  }

  TEST_CASE("component counts partition the lattice") {
    const auto g = build_interaction_graph(JumpKernel::nearest_neighbor(0.5), 0.1, 5000, 3);
    std::size_t sites = 0;
    for (const auto& [size, count] : g.size_histogram) sites += size * count;
    CHECK(sites == 5000);
    CHECK(g.edges > 0);
  }

  TEST_CASE("percolation tail below the path bound when subcritical") {
    const auto offsets = symmetric_offsets(JumpKernel::nearest_neighbor(0.5));
    const auto rep = percolation_experiment(Lattice::ring(1000), offsets, 0.1, 1.0, 20000, 4);
    CHECK(rep.samples == 20000);
    for (int n = 1; n <= 4; ++n) {
      const double freq = static_cast<double>(rep.edges_at_least(static_cast<std::size_t>(2 * n - 1))) / 20000.0;
      const double bound = path_tail_bound(2, 1.0, 0.1, n);
      CHECK(freq <= bound + 3.0 * std::sqrt(bound / 20000.0));
    }
  }

  TEST_CASE("lattice shifts wrap") {
    const auto ring = Lattice::ring(10);
    CHECK(ring.shift(9, {1, 0}) == 0);
    CHECK(ring.shift(0, {-1, 0}) == 9);
    const auto torus = Lattice::torus(4);
    CHECK(torus.sites() == 16);
    CHECK(torus.shift(3, {1, 0}) == 0);
    CHECK(torus.shift(0, {0, -1}) == 12);
  }
}
