#include "zrlab/kexclusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace zrlab {

KExclusionSimulator::KExclusionSimulator(RateField field, int capacity, Configuration init, std::uint64_t seed)
    : field_(std::move(field)), capacity_(capacity), eta_(std::move(init)), rng_(make_rng(seed, "kexclusion_dynamics")) {
  if (capacity_ < 1) throw std::invalid_argument("run_kexclusion: K must be >= 1");
  if (eta_.size() < 2) throw std::invalid_argument("run_kexclusion: ring needs at least two sites");
  if (eta_.size() != field_.size()) throw std::invalid_argument("run_kexclusion: configuration and rate field sizes differ");
  for (std::size_t x = 0; x < eta_.size(); ++x) {
    if (eta_[x] < 0 || eta_[x] > capacity_) {
      throw std::invalid_argument("run_kexclusion: occupancy " + std::to_string(eta_[x]) + " at site " +
                                  std::to_string(x) + " violates 0 <= eta <= K = " + std::to_string(capacity_));
    }
  }
  std::vector<double> rates(eta_.size());
  for (std::size_t x = 0; x < rates.size(); ++x) rates[x] = bond_rate(x);
  tree_ = RateTree(rates);
}

void KExclusionSimulator::advance_to(double t, CurrentCounter* counter) {
  if (!std::isfinite(t)) throw std::invalid_argument("run_kexclusion: non-finite horizon");
  if (t < time_) throw std::invalid_argument("run_kexclusion: cannot run backwards in time");
  for (;;) {
    const double total = tree_.total();
    if (total <= 0.0) break;
    const double next_time = time_ + exponential(rng_, total);
    if (next_time > t) break;
    time_ = next_time;
    const std::size_t x = tree_.find(uniform01(rng_) * total);
    const std::size_t y = next(x);
    --eta_[x];
    ++eta_[y];
    tree_.set(prev(x), bond_rate(prev(x)));
    tree_.set(x, bond_rate(x));
    tree_.set(y, bond_rate(y));
    ++events_;
    if (counter) counter->record(time_, x, 1);
  }
  time_ = t;
}

RunResult run_kexclusion(const RateField& field, int capacity, const Configuration& init, double horizon,
                         std::uint64_t seed, const RunOptions& options) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("run_kexclusion: horizon must be finite and >= 0");
  }
  KExclusionSimulator sim(field, capacity, init, seed);
  RunResult result;
  result.counter = CurrentCounter(init.size(), options.bond, horizon, options.current_bins);
  for (double ts : options.snapshot_times) {
    if (ts < sim.time() || ts > horizon) throw std::invalid_argument("run_kexclusion: snapshot times must be sorted within [0, horizon]");
    sim.advance_to(ts, &result.counter);
    result.snapshots.push_back({ts, sim.config()});
  }
  sim.advance_to(horizon, &result.counter);
  result.final_config = sim.config();
  result.events = sim.events();
  return result;
}

}  // namespace zrlab
