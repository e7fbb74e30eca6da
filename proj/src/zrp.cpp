#include "zrlab/zrp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace zrlab {

namespace {

std::vector<double> initial_rates(const RateField& field, const RateFunction& rate, const Configuration& eta) {
  std::vector<double> rates(field.size());
  for (std::size_t x = 0; x < rates.size(); ++x) rates[x] = field[x] * rate(eta[x]);
  return rates;
}

}  // namespace

ZrpSimulator::ZrpSimulator(RateField field, JumpKernel kernel, RateFunction rate, Configuration init,
                           std::uint64_t seed)
    : field_(std::move(field)),
      kernel_(std::move(kernel)),
      rate_(std::move(rate)),
      eta_(std::move(init)),
      rng_(make_rng(seed, "zrp_dynamics")) {
  if (eta_.size() != field_.size()) {
    throw std::invalid_argument("run_zrp: configuration has " + std::to_string(eta_.size()) +
                                " sites but the rate field has " + std::to_string(field_.size()));
  }
  for (auto v : eta_.eta) {
    if (v < 0) throw std::invalid_argument("run_zrp: negative occupancy");
  }
  tree_ = RateTree(initial_rates(field_, rate_, eta_));
}

void ZrpSimulator::advance_to(double t, CurrentCounter* counter) {
  if (!std::isfinite(t)) throw std::invalid_argument("run_zrp: non-finite horizon");
  if (t < time_) throw std::invalid_argument("run_zrp: cannot run backwards in time");
  const auto L = static_cast<std::int64_t>(eta_.size());
  for (;;) {
    const double total = tree_.total();
    if (total <= 0.0) break;
    const double next = time_ + exponential(rng_, total);
    if (next > t) break;  // memoryless: the clock restarts from t
    time_ = next;
    const std::size_t x = tree_.find(uniform01(rng_) * total);
    const int z = kernel_.sample(rng_);
    const auto y = static_cast<std::size_t>(((static_cast<std::int64_t>(x) + z) % L + L) % L);
    --eta_[x];
    ++eta_[y];
    tree_.set(x, site_rate(x));
    if (y != x) tree_.set(y, site_rate(y));
    ++events_;
    if (counter) counter->record(time_, x, z);
  }
  time_ = t;
}

RunResult run_zrp(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                  const Configuration& init, double horizon, std::uint64_t seed, const RunOptions& options) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("run_zrp: horizon must be finite and >= 0");
  if (!std::is_sorted(options.snapshot_times.begin(), options.snapshot_times.end())) {
    throw std::invalid_argument("run_zrp: snapshot times must be sorted");
  }
  ZrpSimulator sim(field, kernel, rate, init, seed);
  RunResult result;
  result.counter = CurrentCounter(init.size(), options.bond, horizon, options.current_bins);
  for (double ts : options.snapshot_times) {
    if (ts < 0.0 || ts > horizon) throw std::invalid_argument("run_zrp: snapshot time outside [0, horizon]");
    sim.advance_to(ts, &result.counter);
    result.snapshots.push_back({ts, sim.config()});
  }
  sim.advance_to(horizon, &result.counter);
  result.final_config = sim.config();
  result.events = sim.events();
  return result;
}

}  // namespace zrlab
