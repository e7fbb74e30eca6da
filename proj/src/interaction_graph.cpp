#include "zrlab/interaction_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "zrlab/parallel.hpp"

namespace zrlab {

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (size_[x] < size_[y]) std::swap(x, y);
  parent_[y] = x;
  size_[x] += size_[y];
  return true;
}

std::size_t Lattice::shift(std::size_t site, Offset o) const {
  const auto L = static_cast<std::int64_t>(side);
  auto wrap = [L](std::int64_t v) { return static_cast<std::size_t>(((v % L) + L) % L); };
  if (dim == 1) return wrap(static_cast<std::int64_t>(site) + o.dx);
  const auto x = static_cast<std::int64_t>(site % side);
  const auto y = static_cast<std::int64_t>(site / side);
  return wrap(x + o.dx) + side * wrap(y + o.dy);
}

std::vector<Offset> symmetric_offsets(const JumpKernel& kernel) {
  std::vector<Offset> out;
  for (int z : kernel.symmetric_range()) out.push_back({z, 0});
  return out;
}

std::vector<Offset> torus_nearest_neighbors() { return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}; }

namespace {

bool positive(Offset o) { return o.dx > 0 || (o.dx == 0 && o.dy > 0); }

void check_inputs(const Lattice& lattice, const std::vector<Offset>& offsets, double t0, double rate_limit) {
  if (lattice.dim != 1 && lattice.dim != 2) throw std::invalid_argument("interaction graph: lattice dimension must be 1 or 2");
  if (lattice.side == 0) throw std::invalid_argument("interaction graph: empty lattice");
  if (!(t0 >= 0.0)) throw std::invalid_argument("interaction graph: t0 must be >= 0");
  if (!(rate_limit > 0.0)) throw std::invalid_argument("interaction graph: r(inf) must be positive");
  for (const auto& o : offsets) {
    if (o.dx == 0 && o.dy == 0) throw std::invalid_argument("interaction graph: zero offset");
    if (lattice.dim == 1 && o.dy != 0) throw std::invalid_argument("interaction graph: 2D offset on a ring");
  }
}

}  // namespace

double subcritical_threshold(std::size_t K, double rate_limit) {
  if (K < 1) throw std::invalid_argument("subcritical_threshold: K must be >= 1");
  const double k2 = static_cast<double>(K) * static_cast<double>(K);
  return -std::log1p(-1.0 / k2) / (2.0 * rate_limit);
}

double path_tail_bound(std::size_t K, double rate_limit, double t0, int n) {
  const double edge = -std::expm1(-2.0 * rate_limit * t0);
  return std::pow(static_cast<double>(K), 2.0 * n - 1.0) * std::pow(edge, n);
}

InteractionGraph build_interaction_graph(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                         double rate_limit, std::uint64_t seed) {
  check_inputs(lattice, offsets, t0, rate_limit);
  const std::size_t n = lattice.sites();
  InteractionGraph graph;
  graph.lattice = lattice;
  graph.active.assign(n, 0);
  Rng g = make_rng(seed, "interaction_graph");
  const double p = activity_probability(rate_limit, t0);
  if (p > 0.0) {
    // geometric skipping between active sites
    const double q = 1.0 - p;
    for (std::size_t x = static_cast<std::size_t>(geometric_failures(g, q)); x < n;
         x += 1 + static_cast<std::size_t>(geometric_failures(g, q))) {
      graph.active[x] = 1;
    }
  }
  UnionFind uf(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (const auto& o : offsets) {
      if (!positive(o)) continue;
      const std::size_t y = lattice.shift(x, o);
      if (graph.active[x] || graph.active[y]) {
        ++graph.edges;
        uf.unite(x, y);
      }
    }
  }
  graph.component.resize(n);
  for (std::size_t x = 0; x < n; ++x) graph.component[x] = uf.find(x);
  for (std::size_t x = 0; x < n; ++x) {
    if (graph.component[x] == x) ++graph.size_histogram[uf.size_of(x)];
  }
  return graph;
}

InteractionGraph build_interaction_graph(const JumpKernel& kernel, double t0, std::size_t L, std::uint64_t seed,
                                         double rate_limit) {
  return build_interaction_graph(Lattice::ring(L), symmetric_offsets(kernel), t0, rate_limit, seed);
}

OriginComponent sample_origin_component(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                        double rate_limit, Rng& g) {
  const double p = activity_probability(rate_limit, t0);
  std::unordered_map<std::size_t, bool> active;
  auto is_active = [&](std::size_t x) {
    auto [it, inserted] = active.try_emplace(x, false);
    if (inserted) it->second = uniform01(g) < p;
    return it->second;
  };
  std::vector<std::size_t> stack{0};
  std::set<std::size_t> seen{0};
  std::set<std::pair<std::size_t, std::size_t>> edges;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (const auto& o : offsets) {
      const std::size_t v = lattice.shift(u, o);
      if (v == u) continue;
      if (!(is_active(u) || is_active(v))) continue;
      edges.emplace(std::min(u, v), std::max(u, v));
      if (seen.insert(v).second) stack.push_back(v);
    }
  }
  return {seen.size(), edges.size()};
}

std::size_t PercolationReport::edges_at_least(std::size_t m) const {
  std::size_t count = 0;
  for (auto it = edge_histogram.lower_bound(m); it != edge_histogram.end(); ++it) count += it->second;
  return count;
}

PercolationReport percolation_experiment(const Lattice& lattice, const std::vector<Offset>& offsets, double t0,
                                         double rate_limit, std::size_t samples, std::uint64_t seed) {
  check_inputs(lattice, offsets, t0, rate_limit);
  if (samples < 2) throw std::invalid_argument("percolation_experiment: need at least two samples");
  PercolationReport report;
  report.lattice = lattice;
  report.K = offsets.size();
  report.t0 = t0;
  report.rate_limit = rate_limit;
  report.samples = samples;
  std::vector<OriginComponent> results(samples);
  parallel_for(samples, [&](std::size_t i) {
    Rng g = make_rng(seed, "percolation", i);
    results[i] = sample_origin_component(lattice, offsets, t0, rate_limit, g);
  });
  double sum = 0.0;
  double sum2 = 0.0;
  for (const auto& r : results) {
    ++report.edge_histogram[r.edges];
    ++report.size_histogram[r.vertices];
    const auto v = static_cast<double>(r.vertices);
    sum += v;
    sum2 += v * v;
  }
  const auto n = static_cast<double>(samples);
  report.mean_vertices = sum / n;
  report.mean_vertices_se = std::sqrt(std::max(0.0, sum2 / n - report.mean_vertices * report.mean_vertices) / (n - 1.0));
  return report;
}

}  // namespace zrlab
