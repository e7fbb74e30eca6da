#pragma once

// Entropy solutions of u_t + (f(u))_x = 0 for a tabulated concave flux:
// Lax-Oleinik (variational), first-order Godunov, and exact Riemann fans.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "zrlab/flux_table.hpp"
#include "zrlab/parallel.hpp"
#include "zrlab/profile.hpp"

namespace zrlab {

/// f*(v) = inf_{rho in [rho_min, rho_max]} (v rho - f(rho)) sampled on a velocity grid.
struct ConjugateTable {
  std::vector<double> velocity;
  std::vector<double> value;
  double rho_min = 0.0;
  double rho_max = 0.0;

  /// Linear interpolation; throws std::out_of_range outside the grid.
  double operator()(double v) const;
};

/// Exact conjugate of the piecewise-linear flux at one velocity. The objective
/// is convex along the nodes, so the minimizer is found by bisection on its
/// discrete slope.
double conjugate_at(const FluxTable& flux, double v);

/// Throws std::invalid_argument when the table is not concave.
ConjugateTable concave_conjugate(const FluxTable& flux, const std::vector<double>& velocities);

/// Velocity window [min f', max f'] padded by 10% of its width, at least 0.05 on each side.
std::pair<double, double> velocity_window(const FluxTable& flux);

struct SolutionField {
  std::vector<double> x;
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> potential;  // U(x, t); Lax-Oleinik only

  std::size_t size() const noexcept { return x.size(); }
  double dx() const { return x.size() > 1 ? x[1] - x[0] : 1.0; }
  double mass() const;
};

void write_solution_csv(std::ostream& os, const SolutionField& s);

/// Uniform cell centres a + (i + 1/2) dx covering [a, b].
std::vector<double> cell_centers(double a, double b, double dx);

/// Lax-Oleinik on a uniform x-grid with y restricted to the same lattice:
/// U(x,t) = max_k U0(x - k dy) + t f*(k dy / t), U0 by cumulative trapezoid,
/// u by centred differences of U. At t = 0 returns u0 on the grid.
/// Throws std::runtime_error when the maximum sits strictly on the window
/// edge (window too small) and std::invalid_argument for data outside the
/// flux domain or a non-uniform grid.
SolutionField lax_oleinik_solve(const Profile& u0, const FluxTable& flux, const std::vector<double>& x, double t,
                                 Execution mode = Execution::Parallel);

enum class Boundary { Periodic, Outflow };

/// min of f over [a, b] (a <= b) and max over [a, b], exact for the
/// piecewise-linear flux (endpoints plus interior nodes via sparse tables).
class FluxExtrema {
 public:
  explicit FluxExtrema(const FluxTable& flux);
  double min_over(double a, double b) const;
  double max_over(double a, double b) const;
  /// Godunov interface flux for left state ul and right state ur.
  double godunov_flux(double ul, double ur) const;

 private:
  double range_min(std::size_t i, std::size_t j) const;
  double range_max(std::size_t i, std::size_t j) const;

  const FluxTable* flux_;
  bool concave_;
  std::size_t peak_;
  std::vector<std::vector<double>> min_table_;
  std::vector<std::vector<double>> max_table_;
};

struct GodunovOptions {
  double cfl = 0.9;
  Boundary boundary = Boundary::Outflow;
  Execution mode = Execution::Parallel;
};

/// First-order Godunov on cells of width dx covering [a, b], started from
/// cell averages of u0. Time step cfl dx / max|f'| (cfl dx when f' == 0); the
/// final step is shortened to land on t exactly.
SolutionField godunov_solve(const Profile& u0, const FluxTable& flux, double a, double b, double dx, double t,
                            const GodunovOptions& options = {});

/// Exact self-similar Riemann solution at x/t for a concave flux: shock at
/// the Rankine-Hugoniot speed when ul < ur, rarefaction fan when ul > ur (the
/// inverse of f' interpolated between interval midpoints).
double riemann_exact(double ul, double ur, const FluxTable& flux, double x_over_t);

/// Solution field sampled from riemann_exact on the given grid.
SolutionField riemann_field(double ul, double ur, const FluxTable& flux, const std::vector<double>& x, double t,
                            double x0 = 0.0);

/// sum |a - b| dx over a common uniform grid.
double l1_distance(const SolutionField& a, const SolutionField& b);

}  // namespace zrlab
