#include "zrlab/current.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace zrlab {

std::int64_t bond_crossings(std::size_t sites, std::size_t bond, std::size_t from, std::int64_t z) {
  const auto L = static_cast<std::int64_t>(sites);
  // offset of b+1 relative to `from`, in [0, L)
  const std::int64_t d = ((static_cast<std::int64_t>(bond) + 1 - static_cast<std::int64_t>(from)) % L + L) % L;
  if (z > 0) {
    // right jumps land on b+1 at offsets d, d+L, ... within (0, z]
    const std::int64_t first = d == 0 ? L : d;
    return first <= z ? 1 + (z - first) / L : 0;
  }
  if (z < 0) {
    // left jumps leave b+1 at offsets in (z, 0]
    const std::int64_t back = d == 0 ? 0 : d - L;
    return back > z ? -(1 + (back - z - 1) / L) : 0;
  }
  return 0;
}

CurrentCounter::CurrentCounter(std::size_t sites, std::size_t bond, double horizon, std::size_t bins)
    : sites_(sites), bond_(bond), horizon_(horizon), bond_counts_(bins, 0), total_counts_(bins, 0) {
  if (sites == 0) throw std::invalid_argument("CurrentCounter: empty ring");
  if (bond >= sites) throw std::invalid_argument("CurrentCounter: bond outside the ring");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("CurrentCounter: bad horizon");
  if (bins == 0) throw std::invalid_argument("CurrentCounter: need at least one bin");
}

void CurrentCounter::record(double time, std::size_t from, int displacement) {
  if (horizon_ <= 0.0) return;
  auto bin = static_cast<std::size_t>(time / horizon_ * static_cast<double>(bins()));
  bin = std::min(bin, bins() - 1);
  total_counts_[bin] += displacement;
  bond_counts_[bin] += bond_crossings(sites_, bond_, from, displacement);
}

std::int64_t CurrentCounter::bond_total() const noexcept {
  return std::accumulate(bond_counts_.begin(), bond_counts_.end(), std::int64_t{0});
}

std::int64_t CurrentCounter::displacement_total() const noexcept {
  return std::accumulate(total_counts_.begin(), total_counts_.end(), std::int64_t{0});
}

CurrentEstimate measure_current(const CurrentCounter& counter, double burn_in, std::size_t batches,
                                CurrentObservable observable) {
  if (batches < 2) throw std::invalid_argument("measure_current: need at least two batches");
  if (!(counter.horizon() > burn_in)) {
    throw std::invalid_argument("measure_current: observation window does not exceed the burn-in");
  }
  const double width = counter.bin_width();
  const auto first_bin = static_cast<std::size_t>(std::ceil(burn_in / width - 1e-9));
  const std::size_t available = counter.bins() - std::min(first_bin, counter.bins());
  if (available < batches) {
    throw std::invalid_argument("measure_current: window holds " + std::to_string(available) +
                                " bins after burn-in, fewer than the " + std::to_string(batches) + " batches requested");
  }
  const std::size_t per_batch = available / batches;
  const std::size_t start = counter.bins() - per_batch * batches;
  const auto& counts = observable == CurrentObservable::AllBonds ? counter.total_counts() : counter.bond_counts();
  const double norm = observable == CurrentObservable::AllBonds ? static_cast<double>(counter.sites()) : 1.0;
  const double batch_time = width * static_cast<double>(per_batch);

  CurrentEstimate est;
  est.bond = counter.bond();
  est.burn_in = width * static_cast<double>(start);
  est.window = counter.horizon() - est.burn_in;
  est.batches = batches;
  est.batch_means.resize(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < per_batch; ++i) sum += counts[start + b * per_batch + i];
    est.batch_means[b] = static_cast<double>(sum) / norm / batch_time;
  }
  const double mean = std::accumulate(est.batch_means.begin(), est.batch_means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double m : est.batch_means) ss += (m - mean) * (m - mean);
  est.current = mean;
  est.se = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  return est;
}

double batch_drift_z(const std::vector<double>& batch_means) {
  const std::size_t h = batch_means.size() / 2;
  if (h < 2) throw std::invalid_argument("batch_drift_z: need at least four batches");
  auto stats = [](auto begin, auto end) {
    const double n = static_cast<double>(end - begin);
    const double m = std::accumulate(begin, end, 0.0) / n;
    double ss = 0.0;
    for (auto it = begin; it != end; ++it) ss += (*it - m) * (*it - m);
    return std::pair{m, ss / (n - 1.0) / n};
  };
  const auto [m1, v1] = stats(batch_means.begin(), batch_means.begin() + static_cast<std::ptrdiff_t>(h));
  const auto [m2, v2] = stats(batch_means.end() - static_cast<std::ptrdiff_t>(h), batch_means.end());
  const double se = std::sqrt(v1 + v2);
  if (se == 0.0) return m1 == m2 ? 0.0 : INFINITY;
  return std::abs(m1 - m2) / se;
}

}  // namespace zrlab
