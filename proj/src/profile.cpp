#include "zrlab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zrlab {

namespace {

void check_values(const std::vector<double>& v) {
  for (double u : v) {
    if (!std::isfinite(u) || u < 0.0) throw std::invalid_argument("Profile: values must be finite and nonnegative");
  }
}

}  // namespace

Profile::Profile(Representation rep) : rep_(std::move(rep)) {
  if (auto* pc = std::get_if<PiecewiseConstant>(&rep_)) {
    if (pc->values.size() != pc->breakpoints.size() + 1) {
      throw std::invalid_argument("Profile: piecewise-constant needs one more value than breakpoints");
    }
    if (!std::is_sorted(pc->breakpoints.begin(), pc->breakpoints.end())) {
      throw std::invalid_argument("Profile: breakpoints must be sorted");
    }
    check_values(pc->values);
  } else {
    const auto& s = std::get<SampledProfile>(rep_);
    if (s.x.empty() || s.x.size() != s.values.size()) throw std::invalid_argument("Profile: grid and values differ in size");
    if (std::adjacent_find(s.x.begin(), s.x.end(), std::greater_equal<>()) != s.x.end()) {
      throw std::invalid_argument("Profile: grid must be strictly increasing");
    }
    check_values(s.values);
  }
}

double Profile::operator()(double x) const {
  if (const auto* pc = std::get_if<PiecewiseConstant>(&rep_)) {
    const auto i = std::upper_bound(pc->breakpoints.begin(), pc->breakpoints.end(), x) - pc->breakpoints.begin();
    return pc->values[static_cast<std::size_t>(i)];
  }
  const auto& s = std::get<SampledProfile>(rep_);
  if (x <= s.x.front()) return s.values.front();
  if (x >= s.x.back()) return s.values.back();
  const auto j = static_cast<std::size_t>(std::upper_bound(s.x.begin(), s.x.end(), x) - s.x.begin());
  const double w = (x - s.x[j - 1]) / (s.x[j] - s.x[j - 1]);
  return s.values[j - 1] + w * (s.values[j] - s.values[j - 1]);
}

double Profile::min() const {
  const auto& v = is_piecewise_constant() ? std::get<PiecewiseConstant>(rep_).values : std::get<SampledProfile>(rep_).values;
  return *std::min_element(v.begin(), v.end());
}

double Profile::max() const {
  const auto& v = is_piecewise_constant() ? std::get<PiecewiseConstant>(rep_).values : std::get<SampledProfile>(rep_).values;
  return *std::max_element(v.begin(), v.end());
}

double Profile::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  // the integrand is linear between kinks, so midpoint/trapezoid pieces are exact
  const auto& k = is_piecewise_constant() ? std::get<PiecewiseConstant>(rep_).breakpoints : std::get<SampledProfile>(rep_).x;
  auto it = std::upper_bound(k.begin(), k.end(), a);
  const auto end = std::lower_bound(it, k.end(), b);
  double sum = 0.0;
  double lo = a;
  auto piece = [&](double l, double h) {
    if (is_piecewise_constant()) return (*this)(0.5 * (l + h)) * (h - l);
    return 0.5 * ((*this)(l) + (*this)(h)) * (h - l);
  };
  for (; it != end; ++it) {
    sum += piece(lo, *it);
    lo = *it;
  }
  return sum + piece(lo, b);
}

std::vector<double> Profile::kinks() const {
  if (const auto* pc = std::get_if<PiecewiseConstant>(&rep_)) return pc->breakpoints;
  return std::get<SampledProfile>(rep_).x;
}

}  // namespace zrlab
