#pragma once

// Quenched site disorder, jump kernels and monotone rate functions.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zrlab/rng.hpp"

namespace zrlab {

struct Atom {
  double value;
  double weight;
};

struct FiniteSupport {
  std::vector<Atom> atoms;
};

// alpha uniform on [c, 1].
struct UniformInterval {
  double c;
};

// alpha = c + (1-c) B with B ~ Beta(a, b).
struct ShiftedBeta {
  double c;
  double a;
  double b;
};

/// Distribution Q of a single site rate alpha in [c, 1].
///
/// Construction validates the parameters and throws std::invalid_argument with a
/// diagnostic on failure (weights not summing to one, support outside (0,1],
/// nonpositive shapes or c <= 0).
class DisorderLaw {
 public:
  using Family = std::variant<FiniteSupport, UniformInterval, ShiftedBeta>;

  explicit DisorderLaw(Family family);

  static DisorderLaw finite_support(std::vector<Atom> atoms);
  static DisorderLaw uniform(double c);
  static DisorderLaw shifted_beta(double c, double a, double b);
  /// Point mass at 1 (no disorder).
  static DisorderLaw homogeneous() { return finite_support({{1.0, 1.0}}); }

  const Family& family() const noexcept { return family_; }
  /// Left endpoint of the support.
  double c() const noexcept { return c_; }
  bool has_atom_at_c() const noexcept;
  std::string describe() const;

  double sample(Rng& g) const;
  double cdf(double alpha) const;
  /// Generalized inverse of cdf on (0,1).
  double quantile(double u) const;
  /// Density of b = (alpha - c)/(1 - c) on (0,1); continuous families only.
  double unit_density(double b) const;
  bool is_continuous() const noexcept { return !std::holds_alternative<FiniteSupport>(family_); }

  /// E_Q[g(alpha)]. Exact for finite support; tanh-sinh quadrature over the
  /// unit interval otherwise (endpoint-singular integrands are fine).
  double expect(const std::function<double(double)>& g, double rel_tol = 1e-10) const;
  /// E_Q[g(alpha) ; alpha in [lo, hi]] for continuous families (probability-mass
  /// weighted for finite support, using half-open [lo, hi)).
  double expect_between(const std::function<double(double)>& g, double lo, double hi,
                        double rel_tol = 1e-10) const;

  friend bool operator==(const DisorderLaw& a, const DisorderLaw& b);

 private:
  Family family_;
  double c_ = 1.0;
};

/// A frozen realization (alpha_x) on a ring of `size()` sites.
struct RateField {
  std::vector<double> alphas;
  std::optional<DisorderLaw> law;
  std::optional<std::uint64_t> seed;

  std::size_t size() const noexcept { return alphas.size(); }
  double operator[](std::size_t x) const { return alphas[x]; }
  double min() const;

  static RateField homogeneous(std::size_t sites, double alpha = 1.0);
  static RateField from_values(std::vector<double> alphas);
};

/// i.i.d. draws from `law`; bit-identical for equal (law, sites, seed).
RateField sample_rate_field(const DisorderLaw& law, std::size_t sites, std::uint64_t seed);

void write_rate_field_csv(std::ostream& os, const RateField& field);
RateField read_rate_field_csv(std::istream& is);

struct KernelEntry {
  int displacement;
  double probability;
};

/// Translation-invariant finite-range jump law p(z) on Z.
class JumpKernel {
 public:
  explicit JumpKernel(std::vector<KernelEntry> entries);

  static JumpKernel totally_asymmetric() { return JumpKernel({{1, 1.0}}); }
  static JumpKernel nearest_neighbor(double p_right) {
    return JumpKernel({{1, p_right}, {-1, 1.0 - p_right}});
  }

  std::span<const KernelEntry> entries() const noexcept { return entries_; }
  double probability(int z) const noexcept;
  /// Mean drift gamma = sum z p(z).
  double drift() const noexcept;
  /// Kernel with p*(z) = p(-z).
  JumpKernel reversed() const;
  /// max |z| over the support.
  int range() const noexcept;
  bool totally_asymmetric_flag() const noexcept;
  /// Symmetrized range N* = N u (-N), sorted, zero excluded.
  std::vector<int> symmetric_range() const;

  /// Draws a displacement from p.
  int sample(Rng& g) const;

  friend bool operator==(const JumpKernel&, const JumpKernel&) = default;

 private:
  std::vector<KernelEntry> entries_;
  std::vector<double> cumulative_;
};

inline double drift(const JumpKernel& kernel) { return kernel.drift(); }

/// Monotone bounded jump rate r(k): 0 = r(0) < r(1) <= r(2) <= ... <= r(inf) < inf.
///
/// Stored as the table r(0..k_max); the table must already have reached its
/// limit (r(k_max) == r(inf)), so queries above k_max return r(inf).
class RateFunction {
 public:
  RateFunction(std::vector<double> table, double limit);

  /// r(k) = 1{k >= 1}.
  static RateFunction geometric() { return RateFunction({0.0, 1.0}, 1.0); }
  /// r(k) = min(k, cap).
  static RateFunction capped_linear(int cap);

  double operator()(std::int64_t k) const noexcept {
    return k >= static_cast<std::int64_t>(table_.size()) ? limit_ : table_[static_cast<std::size_t>(k)];
  }
  double limit() const noexcept { return limit_; }
  std::size_t table_max() const noexcept { return table_.size() - 1; }
  std::span<const double> table() const noexcept { return table_; }
  bool is_geometric() const noexcept { return table_.size() == 2 && table_[1] == 1.0 && limit_ == 1.0; }
  std::string describe() const;

  friend bool operator==(const RateFunction&, const RateFunction&) = default;

 private:
  std::vector<double> table_;
  double limit_;
};

}  // namespace zrlab
