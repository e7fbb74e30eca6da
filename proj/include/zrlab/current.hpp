#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace zrlab {

/// Signed number of times the jump from -> from + z crosses the bond
/// (bond, bond+1) on a ring of `sites` sites.
std::int64_t bond_crossings(std::size_t sites, std::size_t bond, std::size_t from, std::int64_t z);

/// Time-binned jump counts across one designated bond and across all bonds.
///
/// A jump x -> x + z contributes sign(z) to the designated bond b (between b
/// and b+1) if it crosses it, and z to the all-bond total; the all-bond total
/// divided by the ring size is the space-averaged bond current.
class CurrentCounter {
 public:
  CurrentCounter() = default;
  CurrentCounter(std::size_t sites, std::size_t bond, double horizon, std::size_t bins);

  void record(double time, std::size_t from, int displacement);

  std::size_t sites() const noexcept { return sites_; }
  std::size_t bond() const noexcept { return bond_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t bins() const noexcept { return bond_counts_.size(); }
  double bin_width() const noexcept { return bins() ? horizon_ / static_cast<double>(bins()) : 0.0; }
  const std::vector<std::int64_t>& bond_counts() const noexcept { return bond_counts_; }
  const std::vector<std::int64_t>& total_counts() const noexcept { return total_counts_; }
  std::int64_t bond_total() const noexcept;
  std::int64_t displacement_total() const noexcept;

 private:
  std::size_t sites_ = 0;
  std::size_t bond_ = 0;
  double horizon_ = 0.0;
  std::vector<std::int64_t> bond_counts_;
  std::vector<std::int64_t> total_counts_;
};

enum class CurrentObservable { DesignatedBond, AllBonds };

struct CurrentEstimate {
  std::size_t bond = 0;
  double burn_in = 0.0;
  double window = 0.0;
  double current = 0.0;
  double se = 0.0;
  std::size_t batches = 0;
  std::vector<double> batch_means;
};

/// Current over (burn_in, horizon] with a batch-means standard error. Bins
/// after the burn-in are grouped into `batches` equal batches (leftover bins at
/// the start of the window are discarded). Throws std::invalid_argument if the
/// window is not longer than the burn-in or holds fewer bins than batches.
CurrentEstimate measure_current(const CurrentCounter& counter, double burn_in, std::size_t batches = 20,
                                CurrentObservable observable = CurrentObservable::AllBonds);

/// Half-split drift test on batch means: |mean(first half) - mean(second half)|
/// in units of its standard error.
double batch_drift_z(const std::vector<double>& batch_means);

}  // namespace zrlab
