#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zrlab {

/// Complete binary sum tree over nonnegative leaf rates. Internal nodes are
/// recomputed from their children on every update, so the total never drifts.
class RateTree {
 public:
  explicit RateTree(std::size_t leaves = 0);
  RateTree(std::span<const double> rates);

  std::size_t size() const noexcept { return leaves_; }
  double total() const noexcept { return nodes_.empty() ? 0.0 : nodes_[1]; }
  double rate(std::size_t i) const { return nodes_[base_ + i]; }
  void set(std::size_t i, double rate);
  /// Leaf i with prefix(i) <= target < prefix(i+1); target in [0, total()).
  std::size_t find(double target) const;

 private:
  std::size_t leaves_ = 0;
  std::size_t base_ = 1;
  std::vector<double> nodes_;
};

}  // namespace zrlab
