#include "zrlab/pde.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "zrlab/io.hpp"

namespace zrlab {

namespace {

double interval_slope(const FluxTable& flux, std::size_t i) {
  return (flux.f[i + 1] - flux.f[i]) / (flux.rho[i + 1] - flux.rho[i]);
}

void check_domain(const Profile& u0, const FluxTable& flux, const char* who) {
  const double tol = 1e-12 * std::max(1.0, flux.rho_max());
  if (u0.min() < flux.rho_min() - tol || u0.max() > flux.rho_max() + tol) {
    throw std::invalid_argument(std::string(who) + ": initial data range [" + format_number(u0.min()) + ", " +
                                format_number(u0.max()) + "] leaves the flux domain [" + format_number(flux.rho_min()) +
                                ", " + format_number(flux.rho_max()) + "]");
  }
}

double uniform_spacing(const std::vector<double>& x, const char* who) {
  if (x.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least two grid points");
  const double dx = x[1] - x[0];
  if (!(dx > 0.0)) throw std::invalid_argument(std::string(who) + ": grid must be increasing");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs((x[i] - x[i - 1]) - dx) > 1e-9 * dx) throw std::invalid_argument(std::string(who) + ": grid must be uniform");
  }
  return dx;
}

}  // namespace

double ConjugateTable::operator()(double v) const {
  if (velocity.empty() || v < velocity.front() || v > velocity.back()) {
    throw std::out_of_range("ConjugateTable: velocity outside the tabulated range");
  }
  if (velocity.size() == 1) return value.front();
  auto j = static_cast<std::size_t>(std::upper_bound(velocity.begin(), velocity.end(), v) - velocity.begin());
  j = std::clamp<std::size_t>(j, 1, velocity.size() - 1);
  const double w = (v - velocity[j - 1]) / (velocity[j] - velocity[j - 1]);
  return value[j - 1] + w * (value[j] - value[j - 1]);
}

double conjugate_at(const FluxTable& flux, double v) {
  // g(i) = v rho_i - f_i has increments (rho_{i+1} - rho_i)(v - s_i) with s_i
  // nonincreasing, so g is minimized at the first node i with s_i <= v.
  std::size_t lo = 0;
  std::size_t hi = flux.size() - 1;  // answer in [lo, hi]
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (interval_slope(flux, mid) <= v) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return v * flux.rho[lo] - flux.f[lo];
}

ConjugateTable concave_conjugate(const FluxTable& flux, const std::vector<double>& velocities) {
  if (flux.size() < 2) throw std::invalid_argument("concave_conjugate: flux table needs at least two nodes");
  if (!flux.is_concave()) throw std::invalid_argument("concave_conjugate: flux table is not concave");
  if (!std::is_sorted(velocities.begin(), velocities.end())) {
    throw std::invalid_argument("concave_conjugate: velocity grid must be sorted");
  }
  ConjugateTable t;
  t.velocity = velocities;
  t.value.resize(velocities.size());
  t.rho_min = flux.rho_min();
  t.rho_max = flux.rho_max();
  for (std::size_t i = 0; i < velocities.size(); ++i) t.value[i] = conjugate_at(flux, velocities[i]);
  return t;
}

std::pair<double, double> velocity_window(const FluxTable& flux) {
  const double lo = flux.min_slope();
  const double hi = flux.max_slope();
  const double pad = std::max(0.1 * (hi - lo), 0.05);
  return {lo - pad, hi + pad};
}

double SolutionField::mass() const {
  double m = 0.0;
  for (double v : u) m += v;
  return m * dx();
}

void write_solution_csv(std::ostream& os, const SolutionField& s) {
  CsvWriter w(os, {"x", "u"});
  for (std::size_t i = 0; i < s.size(); ++i) w.row(s.x[i], s.u[i]);
}

std::vector<double> cell_centers(double a, double b, double dx) {
  if (!(b > a) || !(dx > 0.0)) throw std::invalid_argument("cell_centers: need a < b and dx > 0");
  const auto n = static_cast<std::size_t>(std::llround((b - a) / dx));
  if (n < 2) throw std::invalid_argument("cell_centers: fewer than two cells");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = a + (static_cast<double>(i) + 0.5) * dx;
  return x;
}

SolutionField lax_oleinik_solve(const Profile& u0, const FluxTable& flux, const std::vector<double>& x, double t,
                                 Execution mode) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("lax_oleinik_solve: t must be finite and >= 0");
  const double dx = uniform_spacing(x, "lax_oleinik_solve");
  check_domain(u0, flux, "lax_oleinik_solve");
  SolutionField out;
  out.x = x;
  out.t = t;
  out.u.resize(x.size());
  if (t == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) out.u[i] = u0(x[i]);
    return out;
  }
  if (!flux.is_concave()) throw std::invalid_argument("lax_oleinik_solve: flux table is not concave");
  const auto [vlo, vhi] = velocity_window(flux);
  const auto kmin = static_cast<std::int64_t>(std::floor(t * vlo / dx));
  const auto kmax = static_cast<std::int64_t>(std::ceil(t * vhi / dx));
  const auto nk = static_cast<std::size_t>(kmax - kmin + 1);
  std::vector<double> tf(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const double v = static_cast<double>(kmin + static_cast<std::int64_t>(k)) * dx / t;
    tf[k] = t * conjugate_at(flux, v);
  }
  // U0 on the lattice x_0 + j dx, j in [-1 - kmax, n - kmin]; offset so j = jlo is index 0
  const auto n = static_cast<std::int64_t>(x.size());
  const std::int64_t jlo = -1 - kmax;
  const std::int64_t jhi = n - kmin;
  std::vector<double> U0(static_cast<std::size_t>(jhi - jlo + 1));
  double prev = u0(x[0] + static_cast<double>(jlo) * dx);
  U0[0] = 0.0;
  for (std::int64_t j = jlo + 1; j <= jhi; ++j) {
    const double cur = u0(x[0] + static_cast<double>(j) * dx);
    U0[static_cast<std::size_t>(j - jlo)] = U0[static_cast<std::size_t>(j - jlo - 1)] + 0.5 * (prev + cur) * dx;
    prev = cur;
  }
  // U at grid indices -1 .. n
  std::vector<double> U(static_cast<std::size_t>(n + 2));
  std::vector<std::uint8_t> edge_hit(U.size(), 0);
  for_each_index(mode, U.size(), [&](std::size_t s) {
    const std::int64_t i = static_cast<std::int64_t>(s) - 1;
    double best = -INFINITY;
    double interior = -INFINITY;
    for (std::size_t k = 0; k < nk; ++k) {
      const std::int64_t j = i - (kmin + static_cast<std::int64_t>(k));
      const double val = U0[static_cast<std::size_t>(j - jlo)] + tf[k];
      best = std::max(best, val);
      if (k > 0 && k + 1 < nk) interior = std::max(interior, val);
    }
    const double tol = 1e-13 * std::max(1.0, std::abs(best));
    if (nk > 2 && best > interior + tol) edge_hit[s] = 1;
    U[s] = best;
  });
  for (std::size_t s = 0; s < U.size(); ++s) {
    if (edge_hit[s]) {
      throw std::runtime_error("lax_oleinik_solve: supremum attained on the edge of the y-window; widen the velocity range");
    }
  }
  out.potential.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.potential[i] = U[i + 1];
    out.u[i] = (U[i + 2] - U[i]) / (2.0 * dx);
  }
  return out;
}

FluxExtrema::FluxExtrema(const FluxTable& flux) : flux_(&flux), concave_(flux.is_concave()), peak_(0) {
  if (flux.size() < 2) throw std::invalid_argument("FluxExtrema: flux table needs at least two nodes");
  peak_ = static_cast<std::size_t>(std::max_element(flux.f.begin(), flux.f.end()) - flux.f.begin());
  if (concave_) return;
  min_table_.push_back(flux.f);
  max_table_.push_back(flux.f);
  for (std::size_t w = 1; (std::size_t{1} << w) <= flux.size(); ++w) {
    const std::size_t half = std::size_t{1} << (w - 1);
    const std::size_t len = flux.size() - (std::size_t{1} << w) + 1;
    std::vector<double> mn(len), mx(len);
    for (std::size_t i = 0; i < len; ++i) {
      mn[i] = std::min(min_table_[w - 1][i], min_table_[w - 1][i + half]);
      mx[i] = std::max(max_table_[w - 1][i], max_table_[w - 1][i + half]);
    }
    min_table_.push_back(std::move(mn));
    max_table_.push_back(std::move(mx));
  }
}

double FluxExtrema::range_min(std::size_t i, std::size_t j) const {
  const auto w = static_cast<std::size_t>(std::bit_width(j - i + 1) - 1);
  return std::min(min_table_[w][i], min_table_[w][j + 1 - (std::size_t{1} << w)]);
}

double FluxExtrema::range_max(std::size_t i, std::size_t j) const {
  const auto w = static_cast<std::size_t>(std::bit_width(j - i + 1) - 1);
  return std::max(max_table_[w][i], max_table_[w][j + 1 - (std::size_t{1} << w)]);
}

double FluxExtrema::min_over(double a, double b) const {
  const FluxTable& f = *flux_;
  double m = std::min(f(a), f(b));
  if (concave_) return m;
  const auto i = static_cast<std::size_t>(std::upper_bound(f.rho.begin(), f.rho.end(), a) - f.rho.begin());
  const auto j = static_cast<std::size_t>(std::lower_bound(f.rho.begin(), f.rho.end(), b) - f.rho.begin());
  if (i < j) m = std::min(m, range_min(i, j - 1));
  return m;
}

double FluxExtrema::max_over(double a, double b) const {
  const FluxTable& f = *flux_;
  double m = std::max(f(a), f(b));
  if (concave_) {
    const double r = f.rho[peak_];
    return (r > a && r < b) ? std::max(m, f.f[peak_]) : m;
  }
  const auto i = static_cast<std::size_t>(std::upper_bound(f.rho.begin(), f.rho.end(), a) - f.rho.begin());
  const auto j = static_cast<std::size_t>(std::lower_bound(f.rho.begin(), f.rho.end(), b) - f.rho.begin());
  if (i < j) m = std::max(m, range_max(i, j - 1));
  return m;
}

double FluxExtrema::godunov_flux(double ul, double ur) const {
  return ul <= ur ? min_over(ul, ur) : max_over(ur, ul);
}

SolutionField godunov_solve(const Profile& u0, const FluxTable& flux, double a, double b, double dx, double t,
                            const GodunovOptions& options) {
  if (!(options.cfl > 0.0 && options.cfl <= 1.0)) throw std::invalid_argument("godunov_solve: cfl must lie in (0, 1]");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("godunov_solve: t must be finite and >= 0");
  check_domain(u0, flux, "godunov_solve");
  SolutionField out;
  out.x = cell_centers(a, b, dx);
  out.t = t;
  const std::size_t n = out.x.size();
  const double h = (b - a) / static_cast<double>(n);
  out.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.u[i] = u0.integral(a + static_cast<double>(i) * h, a + static_cast<double>(i + 1) * h) / h;

  const FluxExtrema extrema(flux);
  const double speed = flux.max_abs_slope();
  const double dt = speed > 0.0 ? options.cfl * h / speed : options.cfl * h;
  std::vector<double> F(n + 1);
  std::vector<double>& u = out.u;
  const bool periodic = options.boundary == Boundary::Periodic;
  double time = 0.0;
  while (t - time > 1e-14 * std::max(1.0, t)) {
    const double step = std::min(dt, t - time);
    // F[i] is the flux through the left face of cell i; F[n] the right face of the last cell
    for_each_index(options.mode, n + 1, [&](std::size_t i) {
      const double left = i == 0 ? (periodic ? u[n - 1] : u[0]) : u[i - 1];
      const double right = i == n ? (periodic ? u[0] : u[n - 1]) : u[i];
      F[i] = extrema.godunov_flux(left, right);
    });
    const double ratio = step / h;
    for_each_index(options.mode, n, [&](std::size_t i) { u[i] -= ratio * (F[i + 1] - F[i]); });
    time += step;
  }
  return out;
}

double riemann_exact(double ul, double ur, const FluxTable& flux, double x_over_t) {
  if (ul == ur) return ul;
  if (ul < ur) {
    const double s = (flux(ur) - flux(ul)) / (ur - ul);
    return x_over_t < s ? ul : ur;
  }
  // characteristic speed sigma(rho): slopes placed at interval midpoints and
  // interpolated linearly, constant beyond the outer midpoints
  const std::size_t m = flux.size() - 1;
  auto sigma = [&](double rho) {
    const double first = 0.5 * (flux.rho[0] + flux.rho[1]);
    const double last = 0.5 * (flux.rho[m - 1] + flux.rho[m]);
    if (rho <= first) return interval_slope(flux, 0);
    if (rho >= last) return interval_slope(flux, m - 1);
    // interval j with midpoint_j <= rho < midpoint_{j+1}
    auto it = std::upper_bound(flux.rho.begin(), flux.rho.end(), rho);
    auto k = static_cast<std::size_t>(it - flux.rho.begin());  // rho in [rho_{k-1}, rho_k)
    const std::size_t j = rho < 0.5 * (flux.rho[k - 1] + flux.rho[k]) ? k - 2 : k - 1;
    const double mj = 0.5 * (flux.rho[j] + flux.rho[j + 1]);
    const double mj1 = 0.5 * (flux.rho[j + 1] + flux.rho[j + 2]);
    const double w = (rho - mj) / (mj1 - mj);
    return (1.0 - w) * interval_slope(flux, j) + w * interval_slope(flux, j + 1);
  };
  if (x_over_t <= sigma(ul)) return ul;
  if (x_over_t >= sigma(ur)) return ur;
  double lo = ur;  // sigma(lo) > xi
  double hi = ul;  // sigma(hi) < xi
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, ul); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sigma(mid) > x_over_t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SolutionField riemann_field(double ul, double ur, const FluxTable& flux, const std::vector<double>& x, double t,
                            double x0) {
  SolutionField s;
  s.x = x;
  s.t = t;
  s.u.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (t == 0.0) {
      s.u[i] = x[i] < x0 ? ul : ur;
    } else {
      s.u[i] = riemann_exact(ul, ur, flux, (x[i] - x0) / t);
    }
  }
  return s;
}

double l1_distance(const SolutionField& a, const SolutionField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: grids differ in size");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a.u[i] - b.u[i]);
  return d * a.dx();
}

}  // namespace zrlab
