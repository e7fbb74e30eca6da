#pragma once

// Totally asymmetric K-exclusion on a ring: a particle jumps x -> x+1 at rate
// alpha_x when eta(x) >= 1 and eta(x+1) <= K-1.

#include <cstdint>

#include "zrlab/configuration.hpp"
#include "zrlab/environment.hpp"
#include "zrlab/rate_tree.hpp"
#include "zrlab/zrp.hpp"

namespace zrlab {

class KExclusionSimulator {
 public:
  KExclusionSimulator(RateField field, int capacity, Configuration init, std::uint64_t seed);

  void advance_to(double t, CurrentCounter* counter = nullptr);

  double time() const noexcept { return time_; }
  const Configuration& config() const noexcept { return eta_; }
  std::uint64_t events() const noexcept { return events_; }
  int capacity() const noexcept { return capacity_; }

 private:
  std::size_t next(std::size_t x) const { return x + 1 == eta_.size() ? 0 : x + 1; }
  std::size_t prev(std::size_t x) const { return x == 0 ? eta_.size() - 1 : x - 1; }
  double bond_rate(std::size_t x) const {
    return eta_[x] >= 1 && eta_[next(x)] <= capacity_ - 1 ? field_[x] : 0.0;
  }

  RateField field_;
  int capacity_;
  Configuration eta_;
  RateTree tree_;
  Rng rng_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
};

/// Throws std::invalid_argument when init violates 0 <= eta <= K.
RunResult run_kexclusion(const RateField& field, int capacity, const Configuration& init, double horizon,
                         std::uint64_t seed, const RunOptions& options = {});

}  // namespace zrlab
