#include "zrlab/rate_tree.hpp"

#include <stdexcept>

namespace zrlab {

RateTree::RateTree(std::size_t leaves) : leaves_(leaves) {
  while (base_ < leaves_) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

RateTree::RateTree(std::span<const double> rates) : RateTree(rates.size()) {
  for (std::size_t i = 0; i < rates.size(); ++i) nodes_[base_ + i] = rates[i];
  for (std::size_t n = base_ - 1; n >= 1; --n) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
}

void RateTree::set(std::size_t i, double rate) {
  std::size_t n = base_ + i;
  nodes_[n] = rate;
  for (n >>= 1; n >= 1; n >>= 1) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
}

std::size_t RateTree::find(double target) const {
  std::size_t n = 1;
  while (n < base_) {
    const double left = nodes_[2 * n];
    if (target < left) {
      n = 2 * n;
    } else {
      target -= left;
      n = 2 * n + 1;
    }
  }
  std::size_t i = n - base_;
  // Rounding can land on a trailing zero-rate leaf; step back to a live one.
  while (i > 0 && (i >= leaves_ || nodes_[base_ + i] == 0.0)) --i;
  return i;
}

}  // namespace zrlab
