#include "zrlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "zrlab/current.hpp"
#include "zrlab/io.hpp"
#include "zrlab/parallel.hpp"

namespace zrlab {

std::size_t SectorStateSpace::index_of(const std::vector<Occupancy>& state) const {
  auto it = index_.find(state);
  if (it == index_.end()) throw std::out_of_range("configuration outside the sector");
  return it->second;
}

namespace {

void fill(std::vector<Occupancy>& eta, std::size_t x, int remaining, int cap, std::vector<std::vector<Occupancy>>& out) {
  if (x + 1 == eta.size()) {
    if (remaining <= cap) {
      eta[x] = static_cast<Occupancy>(remaining);
      out.push_back(eta);
    }
    return;
  }
  for (int k = 0; k <= std::min(remaining, cap); ++k) {
    eta[x] = static_cast<Occupancy>(k);
    fill(eta, x + 1, remaining - k, cap, out);
  }
}

double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(b);
}

void check_field(const RateField& field, const SectorStateSpace& sector) {
  if (field.size() != sector.L) throw std::invalid_argument("oracle: rate field and sector have different ring sizes");
}

template <class Rates>
GeneratorMatrix assemble(const SectorStateSpace& sector, Rates&& transitions) {
  const auto n = static_cast<Eigen::Index>(sector.size());
  std::vector<Eigen::Triplet<double>> triplets;
  GeneratorMatrix gen;
  std::vector<double> diag(sector.size(), 0.0);
  for (std::size_t i = 0; i < sector.size(); ++i) {
    transitions(sector.states[i], [&](const std::vector<Occupancy>& target, double rate) {
      if (rate <= 0.0) return;
      const std::size_t j = sector.index_of(target);
      if (j == i) return;
      triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), rate);
      diag[i] += rate;
    });
    triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), -diag[i]);
    gen.max_exit_rate = std::max(gen.max_exit_rate, diag[i]);
  }
  gen.q.resize(n, n);
  gen.q.setFromTriplets(triplets.begin(), triplets.end());
  return gen;
}

}  // namespace

SectorStateSpace enumerate_sector(std::size_t L, int N, std::optional<int> cap) {
  if (L < 1) throw std::invalid_argument("enumerate_sector: L must be >= 1");
  if (N < 0) throw std::invalid_argument("enumerate_sector: N must be >= 0");
  if (cap && (*cap < 0 || static_cast<std::int64_t>(N) > static_cast<std::int64_t>(L) * *cap)) {
    throw std::invalid_argument("enumerate_sector: infeasible sector, N = " + std::to_string(N) + " > L cap = " +
                                std::to_string(static_cast<std::int64_t>(L) * *cap));
  }
  SectorStateSpace s;
  s.L = L;
  s.N = N;
  s.cap = cap;
  std::vector<Occupancy> eta(L, 0);
  fill(eta, 0, N, cap.value_or(N), s.states);
  for (std::size_t i = 0; i < s.states.size(); ++i) s.index_.emplace(s.states[i], i);
  return s;
}

std::uint64_t sector_size(std::size_t L, int N, std::optional<int> cap) {
  const auto l = static_cast<std::int64_t>(L);
  if (!cap) return static_cast<std::uint64_t>(binomial(N + l - 1, l - 1));
  // sum_j (-1)^j C(L, j) C(N - j(cap+1) + L - 1, L - 1)
  double total = 0.0;
  for (std::int64_t j = 0; j <= l && j * (*cap + 1) <= N; ++j) {
    const double term = binomial(l, j) * binomial(N - j * (*cap + 1) + l - 1, l - 1);
    total += (j % 2 == 0) ? term : -term;
  }
  return static_cast<std::uint64_t>(std::llround(total));
}

double periodic_kernel(const JumpKernel& kernel, std::size_t L, std::size_t x, std::size_t y) {
  if (2 * static_cast<std::size_t>(kernel.range()) > L) {
    throw std::invalid_argument("oracle: kernel range " + std::to_string(kernel.range()) + " exceeds L/2 for L = " +
                                std::to_string(L));
  }
  const auto l = static_cast<std::int64_t>(L);
  double p = 0.0;
  for (const auto& e : kernel.entries()) {
    const std::int64_t target = ((static_cast<std::int64_t>(x) + e.displacement) % l + l) % l;
    if (target == static_cast<std::int64_t>(y)) p += e.probability;
  }
  return p;
}

GeneratorMatrix build_zrp_generator(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                                    const SectorStateSpace& sector) {
  check_field(field, sector);
  if (sector.cap) throw std::invalid_argument("oracle: ZRP sectors are uncapped");
  const std::size_t L = sector.L;
  // p_L(x, x + d) does not depend on x
  std::vector<double> pl(L);
  for (std::size_t d = 0; d < L; ++d) pl[d] = periodic_kernel(kernel, L, 0, d);
  return assemble(sector, [&](const std::vector<Occupancy>& eta, auto&& emit) {
    std::vector<Occupancy> next = eta;
    for (std::size_t x = 0; x < L; ++x) {
      if (eta[x] == 0) continue;
      const double out = field[x] * rate(eta[x]);
      for (std::size_t d = 1; d < L; ++d) {
        if (pl[d] == 0.0) continue;
        const std::size_t y = (x + d) % L;
        --next[x];
        ++next[y];
        emit(next, out * pl[d]);
        ++next[x];
        --next[y];
      }
    }
  });
}

GeneratorMatrix build_zrp_dual(const RateField& field, const JumpKernel& kernel, const RateFunction& rate,
                               const SectorStateSpace& sector) {
  return build_zrp_generator(field, kernel.reversed(), rate, sector);
}

GeneratorMatrix build_kexclusion_generator(const RateField& field, int capacity, const SectorStateSpace& sector) {
  check_field(field, sector);
  if (capacity < 1) throw std::invalid_argument("oracle: K must be >= 1");
  if (sector.L < 2) throw std::invalid_argument("oracle: K-exclusion needs L >= 2");
  const std::size_t L = sector.L;
  return assemble(sector, [&](const std::vector<Occupancy>& eta, auto&& emit) {
    std::vector<Occupancy> next = eta;
    for (std::size_t x = 0; x < L; ++x) {
      const std::size_t y = (x + 1) % L;
      if (eta[x] < 1 || eta[y] > capacity - 1) continue;
      --next[x];
      ++next[y];
      emit(next, field[x]);
      ++next[x];
      --next[y];
    }
  });
}

Eigen::VectorXd zrp_sector_measure(const RateField& field, const RateFunction& rate, const SectorStateSpace& sector) {
  check_field(field, sector);
  Eigen::VectorXd pi(static_cast<Eigen::Index>(sector.size()));
  for (std::size_t i = 0; i < sector.size(); ++i) {
    double w = 1.0;
    for (std::size_t x = 0; x < sector.L; ++x) {
      for (Occupancy k = 1; k <= sector.states[i][x]; ++k) w /= field[x] * rate(k);
    }
    pi[static_cast<Eigen::Index>(i)] = w;
  }
  return pi / pi.sum();
}

Eigen::VectorXd stationary_distribution(const GeneratorMatrix& gen) {
  const auto n = static_cast<Eigen::Index>(gen.size());
  Eigen::MatrixXd a = gen.dense().transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw std::runtime_error("stationary_distribution: generator is not irreducible");
  return lu.solve(b);
}

double verify_stationarity(const Eigen::VectorXd& pi, const GeneratorMatrix& gen) {
  if (pi.size() != gen.q.rows()) throw std::invalid_argument("verify_stationarity: dimension mismatch");
  const Eigen::VectorXd r = gen.q.transpose() * pi;
  return r.cwiseAbs().maxCoeff();
}

double verify_duality(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const Eigen::VectorXd& pi,
                      const GeneratorMatrix& gen, const GeneratorMatrix& dual) {
  const Eigen::VectorXd lf = gen.q * f;
  const Eigen::VectorXd lg = dual.q * g;
  return std::abs(pi.cwiseProduct(g).dot(lf) - pi.cwiseProduct(f).dot(lg));
}

double duality_scale(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const GeneratorMatrix& gen) {
  return f.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff() * std::max(1.0, gen.max_exit_rate);
}

double weighted_transpose_residual(const Eigen::VectorXd& pi, const GeneratorMatrix& gen, const GeneratorMatrix& dual) {
  const Eigen::MatrixXd lhs = pi.asDiagonal() * dual.dense();
  const Eigen::MatrixXd rhs = gen.dense().transpose() * pi.asDiagonal();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

double exact_stationary_current_zrp(const SectorStateSpace& sector, const Eigen::VectorXd& pi, const RateField& field,
                                    const JumpKernel& kernel, const RateFunction& rate, std::size_t bond) {
  check_field(field, sector);
  double j = 0.0;
  for (std::size_t i = 0; i < sector.size(); ++i) {
    double rate_i = 0.0;
    for (std::size_t x = 0; x < sector.L; ++x) {
      const auto& eta = sector.states[i];
      if (eta[x] == 0) continue;
      for (const auto& e : kernel.entries()) {
        rate_i += field[x] * rate(eta[x]) * e.probability *
                  static_cast<double>(bond_crossings(sector.L, bond, x, e.displacement));
      }
    }
    j += pi[static_cast<Eigen::Index>(i)] * rate_i;
  }
  return j;
}

double exact_stationary_current_kexclusion(const SectorStateSpace& sector, const Eigen::VectorXd& pi,
                                           const RateField& field, int capacity, std::size_t bond) {
  check_field(field, sector);
  const std::size_t next = (bond + 1) % sector.L;
  double j = 0.0;
  for (std::size_t i = 0; i < sector.size(); ++i) {
    const auto& eta = sector.states[i];
    if (eta[bond] >= 1 && eta[next] <= capacity - 1) j += pi[static_cast<Eigen::Index>(i)] * field[bond];
  }
  return j;
}

std::vector<OracleCase> random_oracle_cases(std::size_t count, std::uint64_t seed) {
  std::vector<OracleCase> cases;
  for (std::size_t i = 0; i < count; ++i) {
    Rng g = make_rng(seed, "oracle_case", i);
    OracleCase c;
    c.L = 2 + static_cast<std::size_t>(g() % 4);
    c.N = 1 + static_cast<int>(g() % 4);
    c.alphas.resize(c.L);
    for (auto& a : c.alphas) a = 0.5 + 0.5 * uniform01(g);
    // alternate the rate/kernel combinations so every pairing is covered
    c.rate = (i % 2 == 0) ? RateFunction::geometric() : RateFunction::capped_linear(2);
    c.kernel = (i / 2) % 2 == 0 ? JumpKernel::totally_asymmetric() : JumpKernel({{1, 2.0 / 3.0}, {-1, 1.0 / 3.0}});
    c.seed = derive_seed(seed, "oracle_case", i);
    cases.push_back(std::move(c));
  }
  return cases;
}

OracleCaseResult run_oracle_case(const OracleCase& c, std::size_t pairs) {
  OracleCaseResult r;
  r.spec = c;
  const RateField field = RateField::from_values(c.alphas);
  const auto sector = enumerate_sector(c.L, c.N);
  const auto gen = build_zrp_generator(field, c.kernel, c.rate, sector);
  const auto dual = build_zrp_dual(field, c.kernel, c.rate, sector);
  const Eigen::VectorXd pi = zrp_sector_measure(field, c.rate, sector);
  r.states = sector.size();
  r.residual = verify_stationarity(pi, gen);
  r.transpose_residual = weighted_transpose_residual(pi, gen, dual);

  const auto n = static_cast<Eigen::Index>(sector.size());
  const Eigen::VectorXd pi_q = gen.q.transpose() * pi;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Rng g = make_rng(c.seed, "oracle_pairs");
  for (std::size_t k = 0; k < pairs; ++k) {
    Eigen::VectorXd f(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = 2.0 * uniform01(g) - 1.0;
    for (Eigen::Index i = 0; i < n; ++i) h[i] = 2.0 * uniform01(g) - 1.0;
    r.duality_ratio = std::max(r.duality_ratio, verify_duality(f, h, pi, gen, dual) / duality_scale(f, h, gen));
    const double reduced = verify_duality(f, ones, pi, gen, dual);
    r.g1_mismatch = std::max(r.g1_mismatch, std::abs(reduced - std::abs(pi_q.dot(f))));
  }
  Eigen::VectorXd perturbed = pi;
  perturbed[0] *= 1.01;
  perturbed /= perturbed.sum();
  r.perturbed_residual = verify_stationarity(perturbed, gen);
  r.pass = r.residual < 1e-10 && r.duality_ratio < 1e-10 && r.g1_mismatch < 1e-12 && r.transpose_residual < 1e-12;
  return r;
}

std::vector<OracleCaseResult> run_oracle_suite(const std::vector<OracleCase>& cases, std::size_t pairs) {
  std::vector<OracleCaseResult> out(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) { out[i] = run_oracle_case(cases[i], pairs); });
  return out;
}

std::string oracle_json_line(const OracleCaseResult& r) {
  std::ostringstream kernel;
  kernel << '[';
  bool first = true;
  for (const auto& e : r.spec.kernel.entries()) {
    kernel << (first ? "" : ",") << "[" << e.displacement << "," << format_number(e.probability) << "]";
    first = false;
  }
  kernel << ']';
  std::ostringstream os;
  os << "{\"L\":" << r.spec.L << ",\"N\":" << r.spec.N << ",\"cap\":null,\"kernel\":" << kernel.str()
     << ",\"rate\":\"" << r.spec.rate.describe() << "\",\"seed\":" << r.spec.seed
     << ",\"states\":" << r.states << ",\"residual\":" << format_number(r.residual)
     << ",\"discrepancy\":" << format_number(r.duality_ratio) << ",\"g1_mismatch\":" << format_number(r.g1_mismatch)
     << ",\"transpose_residual\":" << format_number(r.transpose_residual)
     << ",\"pass\":" << (r.pass ? "true" : "false") << "}";
  return os.str();
}

}  // namespace zrlab
