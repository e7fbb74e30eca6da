#include "zrlab/flux_table.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "zrlab/io.hpp"

namespace zrlab {

FluxTable FluxTable::from_function(const std::function<double(double)>& flux, double rho_max, std::size_t intervals,
                                   double rho_min) {
  if (intervals == 0 || !(rho_max > rho_min)) throw std::invalid_argument("flux table: empty density range");
  FluxTable t;
  t.rho.resize(intervals + 1);
  t.f.resize(intervals + 1);
  const double h = (rho_max - rho_min) / static_cast<double>(intervals);
  for (std::size_t i = 0; i <= intervals; ++i) {
    t.rho[i] = i == intervals ? rho_max : rho_min + h * static_cast<double>(i);
    t.f[i] = flux(t.rho[i]);
  }
  return t;
}

double FluxTable::operator()(double density) const {
  if (density <= rho.front()) return f.front();
  if (density >= rho.back()) return f.back();
  const auto it = std::upper_bound(rho.begin(), rho.end(), density);
  const auto i = static_cast<std::size_t>(it - rho.begin());
  const double w = (density - rho[i - 1]) / (rho[i] - rho[i - 1]);
  return f[i - 1] + w * (f[i] - f[i - 1]);
}

double FluxTable::slope(double density) const {
  if (rho.size() < 2) return 0.0;
  auto it = std::upper_bound(rho.begin(), rho.end(), density);
  auto i = static_cast<std::size_t>(it - rho.begin());
  i = std::clamp<std::size_t>(i, 1, rho.size() - 1);
  return (f[i] - f[i - 1]) / (rho[i] - rho[i - 1]);
}

double FluxTable::max_abs_slope() const {
  double m = 0.0;
  for (std::size_t i = 1; i < rho.size(); ++i) m = std::max(m, std::abs((f[i] - f[i - 1]) / (rho[i] - rho[i - 1])));
  return m;
}

double FluxTable::min_slope() const {
  double m = INFINITY;
  for (std::size_t i = 1; i < rho.size(); ++i) m = std::min(m, (f[i] - f[i - 1]) / (rho[i] - rho[i - 1]));
  return m;
}

double FluxTable::max_slope() const {
  double m = -INFINITY;
  for (std::size_t i = 1; i < rho.size(); ++i) m = std::max(m, (f[i] - f[i - 1]) / (rho[i] - rho[i - 1]));
  return m;
}

bool FluxTable::is_concave(double tol) const {
  for (std::size_t i = 1; i + 1 < rho.size(); ++i) {
    const double left = (f[i] - f[i - 1]) / (rho[i] - rho[i - 1]);
    const double right = (f[i + 1] - f[i]) / (rho[i + 1] - rho[i]);
    // midpoint-style defect of f_i below the chord, in flux units
    const double h = 0.5 * std::min(rho[i] - rho[i - 1], rho[i + 1] - rho[i]);
    if ((right - left) * h > tol) return false;
  }
  return true;
}

bool FluxTable::is_nondecreasing(double tol) const {
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] < f[i - 1] - tol) return false;
  }
  return true;
}

FluxTable FluxTable::scaled(double factor) const {
  FluxTable t = *this;
  for (auto& v : t.f) v *= factor;
  t.c *= factor;
  return t;
}

void write_flux_table_csv(std::ostream& os, const FluxTable& table) {
  CsvWriter csv(os, {"rho", "f"});
  for (std::size_t i = 0; i < table.size(); ++i) csv.row(table.rho[i], table.f[i]);
}

FluxTable read_flux_table_csv(std::istream& is) {
  const auto t = read_csv(is);
  FluxTable table;
  table.rho = t.column("rho");
  table.f = t.column("f");
  if (table.rho.size() < 2) throw std::invalid_argument("flux table CSV needs at least two rows");
  for (std::size_t i = 1; i < table.rho.size(); ++i) {
    if (!(table.rho[i] > table.rho[i - 1])) throw std::invalid_argument("flux table CSV: rho must increase");
  }
  return table;
}

}  // namespace zrlab
