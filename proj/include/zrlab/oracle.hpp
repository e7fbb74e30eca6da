#pragma once

// Exact finite-state checks on fixed-particle-number sectors of small rings:
// generator matrices of the ZRP (and its dual with reversed kernel) and of
// K-exclusion, the canonical product measure, stationarity and duality
// residuals, and exact stationary currents.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "zrlab/configuration.hpp"
#include "zrlab/environment.hpp"

namespace zrlab {

struct SectorStateSpace {
  std::size_t L = 0;
  int N = 0;
  std::optional<int> cap;
  std::vector<std::vector<Occupancy>> states;  // lexicographic order

  std::size_t size() const noexcept { return states.size(); }
  /// Throws std::out_of_range for configurations outside the sector.
  std::size_t index_of(const std::vector<Occupancy>& state) const;

 private:
  std::map<std::vector<Occupancy>, std::size_t> index_;
  friend SectorStateSpace enumerate_sector(std::size_t, int, std::optional<int>);
};

/// All eta on L sites with sum N (and eta <= cap). Throws if N > L cap.
SectorStateSpace enumerate_sector(std::size_t L, int N, std::optional<int> cap = std::nullopt);

/// C(N+L-1, L-1) without a cap; inclusion-exclusion with one.
std::uint64_t sector_size(std::size_t L, int N, std::optional<int> cap = std::nullopt);

using SparseGenerator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct GeneratorMatrix {
  SparseGenerator q;
  double max_exit_rate = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(q.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(q); }
  double entry(std::size_t from, std::size_t to) const { return q.coeff(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)); }
};

/// Periodic kernel p_L(x, y) = sum_k p(y - x + kL). Kernels with range > L/2 are rejected.
double periodic_kernel(const JumpKernel& kernel, std::size_t L, std::size_t x, std::size_t y);

GeneratorMatrix build_zrp_generator(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                                    const SectorStateSpace& sector);
/// Generator with the reversed kernel p*(z) = p(-z).
GeneratorMatrix build_zrp_dual(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                               const SectorStateSpace& sector);
GeneratorMatrix build_kexclusion_generator(const RateField& field, int capacity, const SectorStateSpace& sector);

/// pi(eta) proportional to prod_x alpha_x^{-eta(x)} / (r(1)...r(eta(x))).
Eigen::VectorXd zrp_sector_measure(const RateField& field, const RateFunction& rate, const SectorStateSpace& sector);
/// Solves pi Q = 0, sum pi = 1 by dense LU (irreducible sectors).
Eigen::VectorXd stationary_distribution(const GeneratorMatrix& gen);

/// ||pi Q||_inf.
double verify_stationarity(const Eigen::VectorXd& pi, const GeneratorMatrix& gen);
/// |sum pi g (Q f) - sum pi f (Q* g)|.
double verify_duality(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const Eigen::VectorXd& pi,
                      const GeneratorMatrix& gen, const GeneratorMatrix& dual);
/// ||f||_inf ||g||_inf max(1, max exit rate).
double duality_scale(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const GeneratorMatrix& gen);
/// max |D_pi Q* - Q^T D_pi|, the matrix form of the duality identity.
double weighted_transpose_residual(const Eigen::VectorXd& pi, const GeneratorMatrix& gen, const GeneratorMatrix& dual);

double exact_stationary_current_zrp(const SectorStateSpace& sector, const Eigen::VectorXd& pi, const RateField& field,
                                    const JumpKernel& kernel, const RateFunction& rate, std::size_t bond);
double exact_stationary_current_kexclusion(const SectorStateSpace& sector, const Eigen::VectorXd& pi,
                                           const RateField& field, int capacity, std::size_t bond);

struct OracleCase {
  std::size_t L = 3;
  int N = 2;
  std::vector<double> alphas;
  RateFunction rate = RateFunction::geometric();
  JumpKernel kernel = JumpKernel::totally_asymmetric();
  std::uint64_t seed = 0;
};

struct OracleCaseResult {
  OracleCase spec;
  std::size_t states = 0;
  double residual = 0.0;             // ||pi Q||_inf
  double duality_ratio = 0.0;        // max discrepancy / scale over the random pairs
  double g1_mismatch = 0.0;          // |discrepancy(f, 1) - |<pi Q, f>||, worst pair
  double transpose_residual = 0.0;
  double perturbed_residual = 0.0;   // negative control
  bool pass = false;
};

/// Random cases: L in [2, 5], N in [1, 4], alpha in [0.5, 1], geometric or
/// min(k, 2) rates, kernels p(1) = 1 or p(1) = 2/3, p(-1) = 1/3.
std::vector<OracleCase> random_oracle_cases(std::size_t count, std::uint64_t seed);

OracleCaseResult run_oracle_case(const OracleCase& c, std::size_t pairs);
std::vector<OracleCaseResult> run_oracle_suite(const std::vector<OracleCase>& cases, std::size_t pairs);

/// One JSON object per line: {L, N, cap, kernel, seed, residual, discrepancy, pass}.
std::string oracle_json_line(const OracleCaseResult& r);

}  // namespace zrlab
