#pragma once

// Event-driven (Gillespie) simulation of the disordered zero-range process on
// a ring: site x emits a particle at rate alpha_x r(eta(x)) to x + z with
// probability p(z), displacements taken modulo the ring size.

#include <cstdint>
#include <vector>

#include "zrlab/configuration.hpp"
#include "zrlab/current.hpp"
#include "zrlab/environment.hpp"
#include "zrlab/rate_tree.hpp"

namespace zrlab {

struct Snapshot {
  double time;
  Configuration config;
};

struct RunOptions {
  std::vector<double> snapshot_times;  // must be sorted and within [0, horizon]
  std::size_t current_bins = 200;
  std::size_t bond = 0;
};

struct RunResult {
  Configuration final_config;
  CurrentCounter counter;
  std::vector<Snapshot> snapshots;
  std::uint64_t events = 0;
};

class ZrpSimulator {
 public:
  ZrpSimulator(RateField field, JumpKernel kernel, RateFunction rate, Configuration init, std::uint64_t seed);

  /// Runs the chain up to exactly `t` (>= current time). Jumps are reported to
  /// `counter` when given.
  void advance_to(double t, CurrentCounter* counter = nullptr);

  double time() const noexcept { return time_; }
  const Configuration& config() const noexcept { return eta_; }
  std::uint64_t events() const noexcept { return events_; }
  double total_rate() const noexcept { return tree_.total(); }

 private:
  double site_rate(std::size_t x) const { return field_[x] * rate_(eta_[x]); }

  RateField field_;
  JumpKernel kernel_;
  RateFunction rate_;
  Configuration eta_;
  RateTree tree_;
  Rng rng_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
};

/// Full run with snapshots at exact times and a current counter over [0, horizon].
RunResult run_zrp(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                  const Configuration& init, double horizon, std::uint64_t seed, const RunOptions& options = {});

}  // namespace zrlab
