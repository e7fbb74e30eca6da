#pragma once

// Harris graphical construction. Time is cut into blocks of length t0; in each
// block every site carries a Poisson clock of rate lambda (r(inf) for the ZRP,
// 1 for K-exclusion) with uniform thresholds U in [0, lambda] and kernel
// destinations. An epoch at x fires iff U < (current jump rate at x). Sites
// are grouped into the connected components of the interaction graph and
// each component is resolved in time order independently of the others.

#include <cstdint>
#include <vector>

#include "zrlab/configuration.hpp"
#include "zrlab/environment.hpp"
#include "zrlab/parallel.hpp"

namespace zrlab {

struct Epoch {
  double time;
  std::uint32_t site;
  int displacement;
  double threshold;
};

/// One block of the schedule, epochs sorted by (time, site).
struct GraphicalSchedule {
  double t0 = 0.0;
  double clock_rate = 1.0;
  std::vector<Epoch> epochs;
};

GraphicalSchedule make_schedule(std::size_t sites, const JumpKernel& kernel, double clock_rate, double t0, Rng& g);

/// Default block length: half the subcritical threshold for K = |N*|.
double default_block_length(const JumpKernel& kernel, double clock_rate);

struct HarrisStats {
  std::uint64_t epochs = 0;
  std::uint64_t accepted = 0;
  std::size_t largest_component = 0;
};

/// ZRP via the graphical construction over `blocks` blocks of length t0
/// (t0 <= 0 selects default_block_length). Serial mode resolves all epochs in
/// global time order; parallel mode resolves components concurrently. Both
/// produce identical configurations for equal seeds.
Configuration run_harris(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                         const Configuration& init, std::size_t blocks, double t0, std::uint64_t seed,
                         Execution mode = Execution::Parallel, HarrisStats* stats = nullptr);

/// Totally asymmetric K-exclusion via the graphical construction (clock rate 1).
Configuration run_harris_kexclusion(const RateField& field, int capacity, const Configuration& init,
                                    std::size_t blocks, double t0, std::uint64_t seed,
                                    Execution mode = Execution::Parallel, HarrisStats* stats = nullptr);

/// Frozen-environment thinning check: fraction of `epochs` thresholds
/// U ~ Unif[0, r(inf)] below alpha r(m).
double thinning_acceptance_frequency(double alpha, const RateFunction& rate, std::int64_t m, std::size_t epochs,
                                     std::uint64_t seed);

}  // namespace zrlab
