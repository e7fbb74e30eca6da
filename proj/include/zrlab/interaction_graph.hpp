#pragma once

// Random interaction graph of the graphical construction: sites x and y are
// joined when x - y lies in the symmetrized range and either site has a
// Poisson epoch (rate r(inf)) in [0, t0].

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "zrlab/environment.hpp"

namespace zrlab {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);
  std::size_t find(std::size_t x);
  /// Returns true when x and y were in different sets.
  bool unite(std::size_t x, std::size_t y);
  std::size_t size_of(std::size_t x) { return size_[find(x)]; }
  std::size_t size() const noexcept { return parent_.size(); }
  void reset(std::size_t x) {
    parent_[x] = x;
    size_[x] = 1;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct Offset {
  int dx;
  int dy;
};

/// Periodic lattice: a ring of `side` sites (dim 1) or a side x side torus (dim 2).
struct Lattice {
  int dim = 1;
  std::size_t side = 0;

  static Lattice ring(std::size_t L) { return {1, L}; }
  static Lattice torus(std::size_t L) { return {2, L}; }
  std::size_t sites() const noexcept { return dim == 1 ? side : side * side; }
  std::size_t shift(std::size_t site, Offset o) const;
};

/// N* for a one-dimensional kernel.
std::vector<Offset> symmetric_offsets(const JumpKernel& kernel);
/// The four nearest-neighbour offsets of Z^2.
std::vector<Offset> torus_nearest_neighbors();

struct InteractionGraph {
  Lattice lattice;
  std::vector<std::uint8_t> active;         // site had an epoch in [0, t0]
  std::vector<std::size_t> component;       // representative label per site
  std::map<std::size_t, std::size_t> size_histogram;  // component size -> count
  std::size_t edges = 0;
};

/// Probability that a rate-r(inf) Poisson clock rings in [0, t0].
inline double activity_probability(double rate_limit, double t0);

/// Largest t0 with K^2 (1 - exp(-2 r(inf) t0)) <= 1, i.e. -ln(1 - 1/K^2) / (2 r(inf)).
double subcritical_threshold(std::size_t K, double rate_limit);

/// K^{2n-1} (1 - exp(-2 r(inf) t0))^n: bound on P(origin starts a self-avoiding path with 2n-1 edges).
double path_tail_bound(std::size_t K, double rate_limit, double t0, int n);

InteractionGraph build_interaction_graph(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                         double rate_limit, std::uint64_t seed);
InteractionGraph build_interaction_graph(const JumpKernel& kernel, double t0, std::size_t L, std::uint64_t seed,
                                         double rate_limit = 1.0);

struct OriginComponent {
  std::size_t vertices = 1;
  std::size_t edges = 0;
};

/// Explores the component of site 0 lazily (site activity drawn on first visit),
/// so a sample costs time proportional to the component, not the lattice.
OriginComponent sample_origin_component(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                        double rate_limit, Rng& g);

struct PercolationReport {
  Lattice lattice;
  std::size_t K = 0;
  double t0 = 0.0;
  double rate_limit = 1.0;
  std::size_t samples = 0;
  double mean_vertices = 0.0;
  double mean_vertices_se = 0.0;
  std::map<std::size_t, std::size_t> edge_histogram;
  std::map<std::size_t, std::size_t> size_histogram;

  /// Number of samples whose component has at least m edges.
  std::size_t edges_at_least(std::size_t m) const;
};

/// Independent origin-component samples; sample i uses stream (seed, "percolation", i).
PercolationReport percolation_experiment(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                         double rate_limit, std::size_t samples, std::uint64_t seed);

inline double activity_probability(double rate_limit, double t0) { return -std::expm1(-rate_limit * t0); }

}  // namespace zrlab
