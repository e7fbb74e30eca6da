#pragma once

// Hydrodynamic-scaling experiments: sample a configuration that follows a
// macroscopic profile, run to time n t, pair the empirical measure with test
// functions and compare with the entropy solution.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zrlab/configuration.hpp"
#include "zrlab/environment.hpp"
#include "zrlab/flux_table.hpp"
#include "zrlab/profile.hpp"
#include "zrlab/zrp.hpp"

namespace zrlab {

enum class TestShape { Triangle, TruncatedGaussian, SmoothedIndicator };

/// Compactly supported test function of height 1 on [center - width, center + width].
///   Triangle: 1 - |x - center| / width.
///   TruncatedGaussian: exp(-(x-c)^2 / (2 s^2)) - exp(-9/2), s = width / 3.
///   SmoothedIndicator: 1 on |x - c| <= 3 width / 4, linear down to 0 at |x - c| = width.
struct TestFunction {
  TestShape shape = TestShape::Triangle;
  double center = 0.0;
  double width = 1.0;

  double operator()(double x) const;
  double lo() const { return center - width; }
  double hi() const { return center + width; }
  /// Exact integral (equal to the integral of |phi|, phi >= 0).
  double integral() const;
  std::vector<double> kinks() const;
  std::string describe() const;
};

struct BlockProfile {
  std::vector<double> x;  // macroscopic block centres
  std::vector<double> u;  // mean occupancy per block
  std::size_t window = 0;
};

/// Microscopic site i sits at macroscopic position (i - origin) / n.
struct Embedding {
  double n = 1.0;
  std::int64_t origin = 0;

  double position(std::size_t site) const { return (static_cast<double>(site) - static_cast<double>(origin)) / n; }
};

struct EmpiricalMeasureSample {
  double n = 1.0;
  double t = 0.0;
  std::vector<double> pairings;  // pi_n(phi_k) = n^{-1} sum_x eta(x) phi_k(x/n)
};

EmpiricalMeasureSample empirical_measure(const Configuration& config, const Embedding& embed,
                                         const std::vector<TestFunction>& tests, double t = 0.0);

/// Averages over consecutive blocks of `window` sites (0 selects ceil(sqrt(n)))
/// whose centres lie in [a, b].
BlockProfile block_profile(const Configuration& config, const Embedding& embed, double a, double b,
                           std::size_t window = 0);

enum class InitMode {
  A2,          // mu_{M^{-1}(u0(x/n))}, requires sup u0 < M(r(inf) c)
  A4,          // independent sites with mean u0(x/n) (same single-site family, no bound check)
  Flat,        // deterministic: eta(x) = round(S(x+1)) - round(S(x)), S the cumulative profile
  Binomial,    // K-exclusion: Binomial(K, u0/K)
};

/// Independent site draws (or the deterministic flat layout); deterministic in seed.
/// `capacity` is used by the Binomial mode only.
Configuration sample_initial_profile(const Profile& u0, const Embedding& embed, const RateField& field,
                                     const RateFunction& rate, InitMode mode, std::uint64_t seed, int capacity = 0);

enum class Model { Zrp, KExclusion };

struct ScalingSpec {
  Model model = Model::Zrp;
  DisorderLaw law = DisorderLaw::homogeneous();
  RateFunction rate = RateFunction::geometric();
  int capacity = 1;
  JumpKernel kernel = JumpKernel::totally_asymmetric();
  Profile u0 = Profile::constant(0.0);
  double t = 1.0;
  std::vector<std::size_t> scales{200, 800, 3200};
  std::vector<TestFunction> tests{TestFunction{}};
  std::size_t replicas = 20;
  std::uint64_t seed = 1;
  InitMode mode = InitMode::A2;
  bool quenched_fixed = false;       // one field per scale shared by all replicas
  std::optional<FluxTable> flux;     // required for disordered K-exclusion
  double rho_max = 0.0;              // flux domain; 0 selects max(2 sup u0, 1)
  double margin = 2.0;               // padding factor on the characteristic speed
  std::size_t safety_sites = 0;      // 0 selects 10 sqrt(n t) + 10
  std::optional<std::pair<double, double>> block_window;  // macroscopic [a, b]
  std::size_t block_size = 0;        // 0 selects ceil(sqrt(n))
  std::size_t ring_override = 0;     // force a ring size (testing the underflow check)
};

struct ReplicaRecord {
  std::size_t scale = 0;
  std::size_t test_id = 0;
  std::size_t replica = 0;
  std::uint64_t field_seed = 0;
  std::uint64_t dynamics_seed = 0;
  double pairing = 0.0;
  double reference = 0.0;
  double discrepancy = 0.0;
  bool valid = true;
};

struct ScaleSummary {
  std::size_t scale = 0;
  std::size_t test_id = 0;
  double mean = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
  double block_l1_mean = 0.0;  // NaN when no block window
  double block_l1_se = 0.0;
};

struct ComparisonReport {
  std::vector<ReplicaRecord> records;
  std::vector<ScaleSummary> summaries;
  std::vector<double> block_l1;  // per (scale, replica) when a block window is set
  std::vector<BlockProfile> last_block_profiles;  // replica 0 of the largest scale
  std::vector<double> last_block_reference;
  std::size_t ring_sites_largest = 0;
  std::uint64_t wrap_crossings = 0;  // diagnostic: jumps across the ring's wrap bond
  bool valid = true;

  /// Replica-mean D_n nonincreasing within one pooled SE, for every test function.
  bool trend_nonincreasing() const;
  const ScaleSummary& summary(std::size_t scale, std::size_t test_id) const;
};

/// The macroscopic flux used as reference (drift-scaled).
FluxTable reference_flux(const ScalingSpec& spec);

/// Integral of phi u(., t) for the entropy solution started from u0.
double reference_pairing(const Profile& u0, const FluxTable& flux, double t, const TestFunction& phi);
/// u(x, t) sampled at the given points.
std::vector<double> reference_solution(const Profile& u0, const FluxTable& flux, double t, const std::vector<double>& x);

ComparisonReport run_scaling_experiment(const ScalingSpec& spec);

void write_report_csv(std::ostream& os, const ComparisonReport& report);
void write_block_profile_csv(std::ostream& os, const BlockProfile& empirical, const std::vector<double>& reference);

struct PhaseDiagnostics {
  std::vector<double> times;
  std::vector<Occupancy> max_occupancy;
  std::vector<std::vector<double>> decile_mass_share;  // [snapshot][decile], decile 0 = slowest sites
  std::vector<std::vector<double>> decile_mean_occupancy;
  double kendall_tau = 0.0;
  double kendall_p_value = 1.0;  // one-sided, increasing trend
};

PhaseDiagnostics platoon_diagnostics(const std::vector<Snapshot>& snapshots, const RateField& field);

/// nu_phi prediction of the decile mass shares, E[M(phi/alpha); alpha in decile k] / rho.
std::vector<double> predicted_decile_shares(const DisorderLaw& law, const RateFunction& rate, double phi);

/// Kendall tau of a series against time and its one-sided p-value for an
/// increasing trend (normal approximation with tie correction).
std::pair<double, double> kendall_trend(const std::vector<double>& series);

enum class FluxStart {
  Flat,     // deterministic even spread of N particles
  Product,  // nu^alpha_phi draw at the annealed fugacity, then trimmed or topped up to exactly N (ZRP only)
  Condensate,  // as Product, but any excess goes to the slowest site (the supercritical shape)
};

struct FluxEstimateSpec {
  Model model = Model::Zrp;
  DisorderLaw law = DisorderLaw::homogeneous();
  RateFunction rate = RateFunction::geometric();
  int capacity = 1;
  JumpKernel kernel = JumpKernel::totally_asymmetric();
  std::vector<double> densities;
  std::size_t L = 1000;
  double horizon = 1000.0;
  std::size_t replicas = 1;
  std::size_t batches = 20;
  double burn_in_fraction = 0.25;
  bool quenched_fixed = true;  // one field for the whole density grid
  FluxStart start = FluxStart::Flat;
  /// Shared field seed (with quenched_fixed). Fields are drawn site by site,
  /// so rings of different sizes with one seed are nested prefixes.
  std::optional<std::uint64_t> field_seed;
  std::uint64_t seed = 1;
};

struct FluxPoint {
  double density = 0.0;
  std::int64_t particles = 0;
  double current = 0.0;
  double se = 0.0;
  double drift_z = 0.0;
  bool stationary = true;  // drift |z| <= 3
};

struct EmpiricalFlux {
  std::vector<FluxPoint> points;
  /// ((f_{i-1} + f_{i+1}) / 2 - f_i) / pooled SE at interior points.
  std::vector<double> concavity_z;

  bool concave_within(double z) const;
  FluxTable table() const;
};

/// Exactly `particles` particles: a product-measure draw at fugacity phi with
/// uniformly chosen particles removed or uniformly chosen sites topped up
/// (or, with excess_on_slowest, the whole excess put on the slowest site).
Configuration product_start(const RateField& field, const RateFunction& rate, double phi, std::int64_t particles,
                            std::uint64_t seed, bool excess_on_slowest = false);

/// Stationary current on an L-ring from a canonical start (fixed N), burn-in
/// horizon * burn_in_fraction, batch-means SE (one replica) or the SE of
/// replica means (several replicas).
EmpiricalFlux estimate_flux_empirical(const FluxEstimateSpec& spec);

void write_empirical_flux_csv(std::ostream& os, const EmpiricalFlux& flux);

/// Gaps ahead of each particle on a ring of `ring_sites` sites; positions must
/// be strictly increasing in [0, ring_sites).
Configuration gaps_to_zrp(const std::vector<std::int64_t>& positions, std::size_t ring_sites);
/// Inverse map with the first particle at `first`.
std::vector<std::int64_t> zrp_to_positions(const Configuration& gaps, std::int64_t first = 0);

}  // namespace zrlab
