#include "zrlab/harris.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "zrlab/interaction_graph.hpp"
#include "zrlab/parallel.hpp"

namespace zrlab {

namespace {

// Poisson(mu) conditioned on >= 1, by inversion.
std::int64_t truncated_poisson(Rng& g, double mu) {
  const double norm = -std::expm1(-mu);
  double u = uniform01(g) * norm;
  double term = mu * std::exp(-mu);
  std::int64_t k = 1;
  while (u >= term && k < 1000000) {
    u -= term;
    ++k;
    term *= mu / static_cast<double>(k);
  }
  return k;
}

bool epoch_order(const Epoch& a, const Epoch& b) {
  return a.time != b.time ? a.time < b.time : a.site < b.site;
}

template <class Fire>
void resolve(std::vector<Epoch>::const_iterator begin, std::vector<Epoch>::const_iterator end, std::size_t L,
             Configuration& eta, Fire&& fire, std::uint64_t& accepted) {
  const auto sites = static_cast<std::int64_t>(L);
  for (auto it = begin; it != end; ++it) {
    const std::size_t y = static_cast<std::size_t>(((static_cast<std::int64_t>(it->site) + it->displacement) % sites + sites) % sites);
    if (fire(*it, y, eta)) {
      --eta[it->site];
      ++eta[y];
      ++accepted;
    }
  }
}

template <class Fire>
Configuration run_graphical(std::size_t L, const JumpKernel& kernel, double clock_rate, const Configuration& init,
                            std::size_t blocks, double t0, std::uint64_t seed, Execution mode, HarrisStats* stats,
                            Fire&& fire) {
  if (init.size() != L) throw std::invalid_argument("run_harris: configuration and rate field sizes differ");
  if (blocks == 0) throw std::invalid_argument("run_harris: need at least one block");
  if (t0 <= 0.0) t0 = default_block_length(kernel, clock_rate);
  if (!std::isfinite(t0)) throw std::invalid_argument("run_harris: non-finite block length");
  Configuration eta = init;
  HarrisStats local;
  const auto offsets = symmetric_offsets(kernel);
  const Lattice ring = Lattice::ring(L);
  UnionFind uf(L);
  std::vector<std::size_t> touched;
  for (std::size_t block = 0; block < blocks; ++block) {
    Rng g = make_rng(seed, "harris_block", block);
    const GraphicalSchedule schedule = make_schedule(L, kernel, clock_rate, t0, g);
    local.epochs += schedule.epochs.size();
    if (mode == Execution::Serial) {
      resolve(schedule.epochs.begin(), schedule.epochs.end(), L, eta, fire, local.accepted);
      continue;
    }
    // Components of the interaction graph restricted to sites near an active one.
    touched.clear();
    for (const auto& e : schedule.epochs) {
      touched.push_back(e.site);
      for (const auto& o : offsets) {
        const std::size_t y = ring.shift(e.site, o);
        touched.push_back(y);
        uf.unite(e.site, y);
      }
    }
    std::vector<Epoch> grouped = schedule.epochs;
    std::unordered_map<std::size_t, std::size_t> label;
    std::vector<std::size_t> root_of(grouped.size());
    for (std::size_t i = 0; i < grouped.size(); ++i) {
      const std::size_t r = uf.find(grouped[i].site);
      root_of[i] = label.try_emplace(r, label.size()).first->second;
    }
    // stable counting sort by component keeps (time, site) order inside each group
    std::vector<std::size_t> start(label.size() + 1, 0);
    for (auto r : root_of) ++start[r + 1];
    for (std::size_t c = 0; c < label.size(); ++c) start[c + 1] += start[c];
    std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < grouped.size(); ++i) grouped[cursor[root_of[i]]++] = schedule.epochs[i];
    std::vector<std::uint64_t> accepted(label.size(), 0);
    parallel_for(label.size(), [&](std::size_t c) {
      resolve(grouped.begin() + static_cast<std::ptrdiff_t>(start[c]), grouped.begin() + static_cast<std::ptrdiff_t>(start[c + 1]),
              L, eta, fire, accepted[c]);
    });
    for (auto a : accepted) local.accepted += a;
    for (auto x : touched) local.largest_component = std::max(local.largest_component, uf.size_of(x));
    for (auto x : touched) uf.reset(x);
  }
  if (stats) *stats = local;
  return eta;
}

}  // namespace

GraphicalSchedule make_schedule(std::size_t sites, const JumpKernel& kernel, double clock_rate, double t0, Rng& g) {
  if (!(t0 > 0.0)) throw std::invalid_argument("make_schedule: t0 must be positive");
  GraphicalSchedule s{t0, clock_rate, {}};
  const double p = activity_probability(clock_rate, t0);
  const double q = 1.0 - p;
  const double mu = clock_rate * t0;
  for (std::size_t x = static_cast<std::size_t>(geometric_failures(g, q)); x < sites;
       x += 1 + static_cast<std::size_t>(geometric_failures(g, q))) {
    const std::int64_t k = truncated_poisson(g, mu);
    for (std::int64_t i = 0; i < k; ++i) {
      Epoch e;
      e.time = uniform01(g) * t0;
      e.site = static_cast<std::uint32_t>(x);
      e.displacement = kernel.sample(g);
      e.threshold = uniform01(g) * clock_rate;
      s.epochs.push_back(e);
    }
  }
  std::sort(s.epochs.begin(), s.epochs.end(), epoch_order);
  return s;
}

double default_block_length(const JumpKernel& kernel, double clock_rate) {
  return 0.5 * subcritical_threshold(kernel.symmetric_range().size(), clock_rate);
}

Configuration run_harris(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                         const Configuration& init, std::size_t blocks, double t0, std::uint64_t seed, Execution mode,
                         HarrisStats* stats) {
  for (auto v : init.eta) {
    if (v < 0) throw std::invalid_argument("run_harris: negative occupancy");
  }
  return run_graphical(field.size(), kernel, rate.limit(), init, blocks, t0, seed, mode, stats,
                       [&](const Epoch& e, std::size_t, const Configuration& eta) {
                         return e.threshold < field[e.site] * rate(eta[e.site]);
                       });
}

Configuration run_harris_kexclusion(const RateField& field, int capacity, const Configuration& init,
                                    std::size_t blocks, double t0, std::uint64_t seed, Execution mode,
                                    HarrisStats* stats) {
  if (capacity < 1) throw std::invalid_argument("run_harris_kexclusion: K must be >= 1");
  if (init.size() < 2) throw std::invalid_argument("run_harris_kexclusion: ring needs at least two sites");
  for (auto v : init.eta) {
    if (v < 0 || v > capacity) throw std::invalid_argument("run_harris_kexclusion: init violates 0 <= eta <= K");
  }
  return run_graphical(field.size(), JumpKernel::totally_asymmetric(), 1.0, init, blocks, t0, seed, mode, stats,
                       [&](const Epoch& e, std::size_t y, const Configuration& eta) {
                         return eta[e.site] >= 1 && eta[y] <= capacity - 1 && e.threshold < field[e.site];
                       });
}

double thinning_acceptance_frequency(double alpha, const RateFunction& rate, std::int64_t m, std::size_t epochs,
                                     std::uint64_t seed) {
  if (epochs == 0) throw std::invalid_argument("thinning_acceptance_frequency: need epochs");
  Rng g = make_rng(seed, "thinning");
  const double bar = alpha * rate(m);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < epochs; ++i) hits += uniform01(g) * rate.limit() < bar ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(epochs);
}

}  // namespace zrlab
