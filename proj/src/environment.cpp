#include "zrlab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "zrlab/io.hpp"

namespace zrlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid disorder law: " + what);
}

double validate(const DisorderLaw::Family& family) {
  return std::visit(
      overloaded{
          [](const FiniteSupport& f) {
            require(!f.atoms.empty(), "finite support needs at least one atom");
            double total = 0.0;
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& atom : f.atoms) {
              require(atom.value > 0.0 && atom.value <= 1.0, "support value outside (0,1]");
              require(atom.weight > 0.0, "atom weights must be positive");
              total += atom.weight;
              lo = std::min(lo, atom.value);
            }
            require(std::abs(total - 1.0) <= 1e-12, "weights sum to " + std::to_string(total) + ", not 1");
            return lo;
          },
          [](const UniformInterval& u) {
            require(u.c > 0.0 && u.c < 1.0, "uniform interval needs 0 < c < 1");
            return u.c;
          },
          [](const ShiftedBeta& s) {
            require(s.c > 0.0 && s.c < 1.0, "shifted beta needs 0 < c < 1");
            require(s.a > 0.0 && s.b > 0.0, "beta shapes must be positive");
            return s.c;
          },
      },
      family);
}

// Integrates h(b) db over [lo, hi] within the unit interval.
double integrate_unit(const std::function<double(double)>& h, double lo, double hi, double rel_tol) {
  if (hi <= lo) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  return integrator.integrate(h, lo, hi, rel_tol);
}

}  // namespace

DisorderLaw::DisorderLaw(Family family) : family_(std::move(family)) {
  c_ = validate(family_);
  if (auto* f = std::get_if<FiniteSupport>(&family_)) {
    std::sort(f->atoms.begin(), f->atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  }
}

DisorderLaw DisorderLaw::finite_support(std::vector<Atom> atoms) { return DisorderLaw(FiniteSupport{std::move(atoms)}); }
DisorderLaw DisorderLaw::uniform(double c) { return DisorderLaw(UniformInterval{c}); }
DisorderLaw DisorderLaw::shifted_beta(double c, double a, double b) { return DisorderLaw(ShiftedBeta{c, a, b}); }

bool DisorderLaw::has_atom_at_c() const noexcept { return std::holds_alternative<FiniteSupport>(family_); }

std::string DisorderLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const FiniteSupport& f) {
                   os << "finite_support{";
                   for (std::size_t i = 0; i < f.atoms.size(); ++i) {
                     os << (i ? "," : "") << '(' << f.atoms[i].value << ',' << f.atoms[i].weight << ')';
                   }
                   os << '}';
                 },
                 [&](const UniformInterval& u) { os << "uniform(" << u.c << ",1)"; },
                 [&](const ShiftedBeta& s) { os << "shifted_beta(" << s.c << ',' << s.a << ',' << s.b << ')'; },
             },
             family_);
  return os.str();
}

double DisorderLaw::sample(Rng& g) const {
  return std::visit(overloaded{
                        [&](const FiniteSupport& f) {
                          double u = uniform01(g);
                          for (const auto& atom : f.atoms) {
                            if (u < atom.weight) return atom.value;
                            u -= atom.weight;
                          }
                          return f.atoms.back().value;
                        },
                        [&](const UniformInterval& u) { return u.c + (1.0 - u.c) * uniform01(g); },
                        [&](const ShiftedBeta& s) {
                          std::gamma_distribution<double> ga(s.a, 1.0);
                          std::gamma_distribution<double> gb(s.b, 1.0);
                          const double x = ga(g);
                          const double y = gb(g);
                          const double beta = (x + y) > 0.0 ? x / (x + y) : 0.5;
                          return std::clamp(s.c + (1.0 - s.c) * beta, s.c, 1.0);
                        },
                    },
                    family_);
}

double DisorderLaw::cdf(double alpha) const {
  return std::visit(overloaded{
                        [&](const FiniteSupport& f) {
                          double acc = 0.0;
                          for (const auto& atom : f.atoms) {
                            if (atom.value <= alpha) acc += atom.weight;
                          }
                          return std::min(acc, 1.0);
                        },
                        [&](const UniformInterval& u) { return std::clamp((alpha - u.c) / (1.0 - u.c), 0.0, 1.0); },
                        [&](const ShiftedBeta& s) {
                          const double b = (alpha - s.c) / (1.0 - s.c);
                          if (b <= 0.0) return 0.0;
                          if (b >= 1.0) return 1.0;
                          return boost::math::ibeta(s.a, s.b, b);
                        },
                    },
                    family_);
}

double DisorderLaw::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  return std::visit(overloaded{
                        [&](const FiniteSupport& f) {
                          double acc = 0.0;
                          for (const auto& atom : f.atoms) {
                            acc += atom.weight;
                            if (u <= acc) return atom.value;
                          }
                          return f.atoms.back().value;
                        },
                        [&](const UniformInterval& iv) { return iv.c + (1.0 - iv.c) * u; },
                        [&](const ShiftedBeta& s) {
                          if (u <= 0.0) return s.c;
                          if (u >= 1.0) return 1.0;
                          return s.c + (1.0 - s.c) * boost::math::ibeta_inv(s.a, s.b, u);
                        },
                    },
                    family_);
}

double DisorderLaw::unit_density(double b) const {
  if (b < 0.0 || b > 1.0) return 0.0;
  if (const auto* s = std::get_if<ShiftedBeta>(&family_)) {
    return std::pow(b, s->a - 1.0) * std::pow(1.0 - b, s->b - 1.0) / std::beta(s->a, s->b);
  }
  if (std::holds_alternative<UniformInterval>(family_)) return 1.0;
  throw std::logic_error("unit_density: finite-support law has no density");
}

double DisorderLaw::expect(const std::function<double(double)>& g, double rel_tol) const {
  return expect_between(g, c_, 1.0, rel_tol);
}

double DisorderLaw::expect_between(const std::function<double(double)>& g, double lo, double hi,
                                   double rel_tol) const {
  return std::visit(
      overloaded{
          [&](const FiniteSupport& f) {
            double acc = 0.0;
            for (const auto& atom : f.atoms) {
              const bool inside = atom.value >= lo && (atom.value < hi || (hi >= 1.0 && atom.value <= 1.0));
              if (inside) acc += atom.weight * g(atom.value);
            }
            return acc;
          },
          [&](const UniformInterval& u) {
            const double w = 1.0 - u.c;
            auto h = [&](double b) { return g(u.c + w * b); };
            return integrate_unit(h, std::max(0.0, (lo - u.c) / w), std::min(1.0, (hi - u.c) / w), rel_tol);
          },
          [&](const ShiftedBeta& s) {
            const double w = 1.0 - s.c;
            auto h = [&](double b) { return g(s.c + w * b) * unit_density(b); };
            return integrate_unit(h, std::max(0.0, (lo - s.c) / w), std::min(1.0, (hi - s.c) / w), rel_tol);
          },
      },
      family_);
}

bool operator==(const DisorderLaw& a, const DisorderLaw& b) {
  if (a.family_.index() != b.family_.index()) return false;
  return std::visit(overloaded{
                        [&](const FiniteSupport& f) {
                          const auto& g = std::get<FiniteSupport>(b.family_);
                          if (f.atoms.size() != g.atoms.size()) return false;
                          for (std::size_t i = 0; i < f.atoms.size(); ++i) {
                            if (f.atoms[i].value != g.atoms[i].value || f.atoms[i].weight != g.atoms[i].weight)
                              return false;
                          }
                          return true;
                        },
                        [&](const UniformInterval& u) { return u.c == std::get<UniformInterval>(b.family_).c; },
                        [&](const ShiftedBeta& s) {
                          const auto& t = std::get<ShiftedBeta>(b.family_);
                          return s.c == t.c && s.a == t.a && s.b == t.b;
                        },
                    },
                    a.family_);
}

double RateField::min() const { return *std::min_element(alphas.begin(), alphas.end()); }

RateField RateField::homogeneous(std::size_t sites, double alpha) {
  RateField field;
  field.alphas.assign(sites, alpha);
  if (alpha == 1.0) field.law = DisorderLaw::homogeneous();
  return field;
}

RateField RateField::from_values(std::vector<double> alphas) {
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("rate field value outside (0,1]");
  }
  RateField field;
  field.alphas = std::move(alphas);
  return field;
}

RateField sample_rate_field(const DisorderLaw& law, std::size_t sites, std::uint64_t seed) {
  if (sites == 0) throw std::invalid_argument("rate field needs at least one site");
  Rng g = make_rng(seed, "rate_field");
  RateField field;
  field.alphas.resize(sites);
  for (auto& a : field.alphas) a = law.sample(g);
  field.law = law;
  field.seed = seed;
  return field;
}

void write_rate_field_csv(std::ostream& os, const RateField& field) {
  CsvWriter csv(os, {"site_index", "alpha"});
  for (std::size_t x = 0; x < field.size(); ++x) csv.row(x, field.alphas[x]);
}

RateField read_rate_field_csv(std::istream& is) {
  const auto table = read_csv(is);
  const auto site = table.column("site_index");
  const auto alpha = table.column("alpha");
  std::vector<double> alphas(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const auto x = static_cast<std::size_t>(site[i]);
    if (x != i) throw std::invalid_argument("rate field CSV rows must be in site order");
    alphas[i] = alpha[i];
  }
  return RateField::from_values(std::move(alphas));
}

JumpKernel::JumpKernel(std::vector<KernelEntry> entries) {
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.probability < 0.0) throw std::invalid_argument("jump kernel: negative probability");
    total += e.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("jump kernel: probabilities must sum to 1");
  std::sort(entries.begin(), entries.end(),
            [](const KernelEntry& a, const KernelEntry& b) { return a.displacement < b.displacement; });
  for (const auto& e : entries) {
    if (e.probability == 0.0) continue;
    if (e.displacement == 0) throw std::invalid_argument("jump kernel: zero displacement");
    if (!entries_.empty() && entries_.back().displacement == e.displacement)
      throw std::invalid_argument("jump kernel: duplicate displacement");
    entries_.push_back(e);
  }
  double acc = 0.0;
  for (const auto& e : entries_) {
    acc += e.probability;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

double JumpKernel::probability(int z) const noexcept {
  for (const auto& e : entries_) {
    if (e.displacement == z) return e.probability;
  }
  return 0.0;
}

double JumpKernel::drift() const noexcept {
  double g = 0.0;
  for (const auto& e : entries_) g += e.displacement * e.probability;
  return g;
}

JumpKernel JumpKernel::reversed() const {
  std::vector<KernelEntry> rev;
  for (const auto& e : entries_) rev.push_back({-e.displacement, e.probability});
  return JumpKernel(std::move(rev));
}

int JumpKernel::range() const noexcept {
  int r = 0;
  for (const auto& e : entries_) r = std::max(r, std::abs(e.displacement));
  return r;
}

bool JumpKernel::totally_asymmetric_flag() const noexcept {
  return entries_.size() == 1 && entries_[0].displacement == 1;
}

std::vector<int> JumpKernel::symmetric_range() const {
  std::vector<int> out;
  for (const auto& e : entries_) {
    out.push_back(e.displacement);
    out.push_back(-e.displacement);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int JumpKernel::sample(Rng& g) const {
  if (entries_.size() == 1) return entries_[0].displacement;
  const double u = uniform01(g);
  for (std::size_t i = 0; i < cumulative_.size(); ++i) {
    if (u < cumulative_[i]) return entries_[i].displacement;
  }
  return entries_.back().displacement;
}

RateFunction::RateFunction(std::vector<double> table, double limit) : table_(std::move(table)), limit_(limit) {
  if (table_.size() < 2) throw std::invalid_argument("rate function: table needs r(0) and r(1)");
  if (table_[0] != 0.0) throw std::invalid_argument("rate function: r(0) must be 0");
  if (!(table_[1] > 0.0)) throw std::invalid_argument("rate function: r(1) must be positive");
  for (std::size_t k = 2; k < table_.size(); ++k) {
    if (table_[k] < table_[k - 1]) throw std::invalid_argument("rate function: r must be nondecreasing");
  }
  if (!std::isfinite(limit_)) throw std::invalid_argument("rate function: r(inf) must be finite");
  if (table_.back() != limit_)
    throw std::invalid_argument("rate function: table must reach its limit, r(k_max) == r(inf)");
}

RateFunction RateFunction::capped_linear(int cap) {
  if (cap < 1) throw std::invalid_argument("rate function: cap must be >= 1");
  std::vector<double> t(static_cast<std::size_t>(cap) + 1);
  for (int k = 0; k <= cap; ++k) t[static_cast<std::size_t>(k)] = k;
  return RateFunction(std::move(t), cap);
}

std::string RateFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "rate{";
  for (std::size_t k = 0; k < table_.size(); ++k) os << (k ? "," : "") << table_[k];
  os << ";inf=" << limit_ << '}';
  return os.str();
}

}  // namespace zrlab
