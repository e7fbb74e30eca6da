#include "zrlab/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zrlab/equilibria.hpp"
#include "zrlab/io.hpp"
#include "zrlab/kexclusion.hpp"
#include "zrlab/parallel.hpp"
#include "zrlab/pde.hpp"

namespace zrlab {

double TestFunction::operator()(double x) const {
  const double d = std::abs(x - center);
  if (d >= width) return 0.0;
  switch (shape) {
    case TestShape::Triangle:
      return 1.0 - d / width;
    case TestShape::TruncatedGaussian: {
      const double s = width / 3.0;
      return std::exp(-d * d / (2.0 * s * s)) - std::exp(-4.5);
    }
    case TestShape::SmoothedIndicator:
      return d <= 0.75 * width ? 1.0 : (width - d) / (0.25 * width);
  }
  return 0.0;
}

double TestFunction::integral() const {
  switch (shape) {
    case TestShape::Triangle:
      return width;
    case TestShape::TruncatedGaussian: {
      const double s = width / 3.0;
      return s * std::sqrt(2.0 * M_PI) * std::erf(3.0 / std::sqrt(2.0)) - 2.0 * width * std::exp(-4.5);
    }
    case TestShape::SmoothedIndicator:
      return 1.75 * width;
  }
  return 0.0;
}

std::vector<double> TestFunction::kinks() const {
  std::vector<double> k{lo(), hi()};
  if (shape == TestShape::Triangle) k.push_back(center);
  if (shape == TestShape::SmoothedIndicator) {
    k.push_back(center - 0.75 * width);
    k.push_back(center + 0.75 * width);
  }
  std::sort(k.begin(), k.end());
  return k;
}

std::string TestFunction::describe() const {
  const char* name = shape == TestShape::Triangle            ? "triangle"
                     : shape == TestShape::TruncatedGaussian ? "gaussian"
                                                             : "smoothed_indicator";
  return std::string(name) + "(" + format_number(center) + "," + format_number(width) + ")";
}

namespace {

// Site index range [first, last] whose positions fall in [a, b].
std::pair<std::int64_t, std::int64_t> site_range(const Embedding& e, double a, double b, std::size_t L) {
  auto first = static_cast<std::int64_t>(std::ceil(a * e.n + static_cast<double>(e.origin) - 1e-9));
  auto last = static_cast<std::int64_t>(std::floor(b * e.n + static_cast<double>(e.origin) + 1e-9));
  first = std::max<std::int64_t>(first, 0);
  last = std::min<std::int64_t>(last, static_cast<std::int64_t>(L) - 1);
  return {first, last};
}

double gk_integrate(const std::function<double(double)>& g, std::vector<double> cuts, double a, double b) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(cuts[i], a);
    const double hi = std::min(cuts[i + 1], b);
    if (hi <= lo) continue;
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 12, 1e-13);
  }
  return sum;
}

bool flat_on_range(const Profile& u0, const FluxTable& flux) {
  const double lo = flux(u0.min());
  const double hi = flux(u0.max());
  return flux.is_nondecreasing() && std::abs(hi - lo) <= 1e-12 * std::max(1.0, std::abs(hi));
}

const PiecewiseConstant* single_step(const Profile& u0) {
  const auto* pc = std::get_if<PiecewiseConstant>(&u0.representation());
  return pc && pc->breakpoints.size() == 1 ? pc : nullptr;
}

double a2_bound(const RateField& field, const RateFunction& rate) {
  const double c = field.law ? field.law->c() : field.min();
  return c >= 1.0 ? INFINITY : mean_occupancy(rate.limit() * c, rate);
}

}  // namespace

EmpiricalMeasureSample empirical_measure(const Configuration& config, const Embedding& embed,
                                         const std::vector<TestFunction>& tests, double t) {
  EmpiricalMeasureSample s;
  s.n = embed.n;
  s.t = t;
  for (const auto& phi : tests) {
    const auto [first, last] = site_range(embed, phi.lo(), phi.hi(), config.size());
    double sum = 0.0;
    for (std::int64_t i = first; i <= last; ++i) {
      const auto x = static_cast<std::size_t>(i);
      if (config[x] != 0) sum += static_cast<double>(config[x]) * phi(embed.position(x));
    }
    s.pairings.push_back(sum / embed.n);
  }
  return s;
}

BlockProfile block_profile(const Configuration& config, const Embedding& embed, double a, double b,
                           std::size_t window) {
  BlockProfile p;
  p.window = window ? window : static_cast<std::size_t>(std::ceil(std::sqrt(embed.n)));
  const auto [first, last] = site_range(embed, a, b, config.size());
  const auto w = static_cast<std::int64_t>(p.window);
  for (std::int64_t s = first; s + w - 1 <= last; s += w) {
    double sum = 0.0;
    for (std::int64_t i = s; i < s + w; ++i) sum += config[static_cast<std::size_t>(i)];
    p.u.push_back(sum / static_cast<double>(w));
    p.x.push_back((static_cast<double>(s) + 0.5 * static_cast<double>(w - 1) - static_cast<double>(embed.origin)) / embed.n);
  }
  return p;
}

Configuration sample_initial_profile(const Profile& u0, const Embedding& embed, const RateField& field,
                                     const RateFunction& rate, InitMode mode, std::uint64_t seed, int capacity) {
  const std::size_t L = field.size();
  Configuration eta = Configuration::empty(L);
  Rng g = make_rng(seed, "initial_profile");
  if (mode == InitMode::A2) {
    const double bound = a2_bound(field, rate);
    if (!(u0.max() < bound)) {
      throw std::invalid_argument("sample_initial_profile: sup u0 = " + format_number(u0.max()) +
                                  " violates the A2 bound sup u0 < M(r(inf) c) = " + format_number(bound));
    }
  }
  switch (mode) {
    case InitMode::A2:
    case InitMode::A4: {
      double cached_u = -1.0;
      std::optional<SingleSiteLaw> law;
      for (std::size_t x = 0; x < L; ++x) {
        const double u = u0(embed.position(x));
        if (u != cached_u) {
          law.emplace(inverse_mean_occupancy(u, rate), rate);
          cached_u = u;
        }
        if (u == 0.0) continue;
        eta[x] = static_cast<Occupancy>(rate.is_geometric() ? geometric_failures(g, law->psi()) : law->sample(g));
      }
      break;
    }
    case InitMode::Flat: {
      double cumulative = 0.0;
      std::int64_t placed = 0;
      for (std::size_t x = 0; x < L; ++x) {
        cumulative += u0(embed.position(x));
        const std::int64_t target = std::llround(cumulative);
        eta[x] = static_cast<Occupancy>(target - placed);
        placed = target;
      }
      break;
    }
    case InitMode::Binomial: {
      if (capacity < 1) throw std::invalid_argument("sample_initial_profile: Binomial mode needs K >= 1");
      if (u0.max() > capacity) throw std::invalid_argument("sample_initial_profile: profile exceeds K");
      for (std::size_t x = 0; x < L; ++x) {
        const double u = u0(embed.position(x));
        std::binomial_distribution<int> b(capacity, std::clamp(u / capacity, 0.0, 1.0));
        eta[x] = static_cast<Occupancy>(b(g));
      }
      break;
    }
  }
  return eta;
}

FluxTable reference_flux(const ScalingSpec& spec) {
  const double gamma = spec.model == Model::Zrp ? spec.kernel.drift() : 1.0;
  if (gamma == 0.0) throw std::invalid_argument("hydro: kernels with zero drift are excluded from scaling experiments");
  if (spec.flux) return spec.flux->scaled(gamma);
  if (spec.model == Model::KExclusion) {
    if (spec.capacity == 1 && spec.law == DisorderLaw::homogeneous()) {
      return FluxTable::from_function([](double r) { return r * (1.0 - r); }, 1.0, 1000);
    }
    throw std::invalid_argument("hydro: disordered K-exclusion has no closed-form flux; supply a flux table");
  }
  const double rho_max = spec.rho_max > 0.0 ? spec.rho_max : std::max(2.0 * spec.u0.max(), 1.0);
  return make_flux_table(spec.law, spec.rate, rho_max).scaled(gamma);
}

std::vector<double> reference_solution(const Profile& u0, const FluxTable& flux, double t, const std::vector<double>& x) {
  std::vector<double> u(x.size());
  if (t == 0.0 || u0.min() == u0.max() || flat_on_range(u0, flux)) {
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = u0(x[i]);
    return u;
  }
  if (const auto* step = single_step(u0)) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      u[i] = riemann_exact(step->values[0], step->values[1], flux, (x[i] - step->breakpoints[0]) / t);
    }
    return u;
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double span = std::max(*hi - *lo, 1e-6);
  const std::size_t cells = 4000;
  const auto grid = cell_centers(*lo - 0.01 * span, *hi + 0.01 * span, 1.02 * span / static_cast<double>(cells));
  const auto sol = lax_oleinik_solve(u0, flux, grid, t);
  const Profile interp(SampledProfile{sol.x, sol.u});
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = interp(x[i]);
  return u;
}

double reference_pairing(const Profile& u0, const FluxTable& flux, double t, const TestFunction& phi) {
  std::vector<double> cuts = phi.kinks();
  for (double k : u0.kinks()) cuts.push_back(k);
  if (t == 0.0 || u0.min() == u0.max() || flat_on_range(u0, flux)) {
    return gk_integrate([&](double x) { return phi(x) * u0(x); }, cuts, phi.lo(), phi.hi());
  }
  if (const auto* step = single_step(u0)) {
    const double ul = step->values[0];
    const double ur = step->values[1];
    const double x0 = step->breakpoints[0];
    if (ul < ur) {
      cuts.push_back(x0 + t * (flux(ur) - flux(ul)) / (ur - ul));
    } else {
      cuts.push_back(x0 + t * flux.slope(ul));
      cuts.push_back(x0 + t * flux.slope(ur));
    }
    return gk_integrate([&](double x) { return phi(x) * riemann_exact(ul, ur, flux, (x - x0) / t); }, cuts, phi.lo(),
                        phi.hi());
  }
  const auto grid = cell_centers(phi.lo(), phi.hi(), (phi.hi() - phi.lo()) / 4000.0);
  const auto sol = lax_oleinik_solve(u0, flux, grid, t);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sum += phi(grid[i]) * sol.u[i];
  return sum * sol.dx();
}

bool ComparisonReport::trend_nonincreasing() const {
  std::map<std::size_t, std::vector<const ScaleSummary*>> by_test;
  for (const auto& s : summaries) by_test[s.test_id].push_back(&s);
  for (auto& [id, list] : by_test) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->scale < b->scale; });
    for (std::size_t k = 0; k + 1 < list.size(); ++k) {
      const double pooled = std::hypot(list[k]->se, list[k + 1]->se);
      if (list[k + 1]->mean > list[k]->mean + pooled) return false;
    }
  }
  return true;
}

const ScaleSummary& ComparisonReport::summary(std::size_t scale, std::size_t test_id) const {
  for (const auto& s : summaries) {
    if (s.scale == scale && s.test_id == test_id) return s;
  }
  throw std::out_of_range("ComparisonReport: no summary for that scale and test");
}

ComparisonReport run_scaling_experiment(const ScalingSpec& spec) {
  if (spec.scales.empty() || !std::is_sorted(spec.scales.begin(), spec.scales.end()) ||
      std::adjacent_find(spec.scales.begin(), spec.scales.end()) != spec.scales.end() || spec.scales.front() == 0) {
    throw std::invalid_argument("run_scaling_experiment: scales must be positive and strictly increasing");
  }
  if (spec.tests.empty()) throw std::invalid_argument("run_scaling_experiment: need at least one test function");
  if (spec.replicas < 1) throw std::invalid_argument("run_scaling_experiment: need at least one replica");
  if (!(spec.t >= 0.0)) throw std::invalid_argument("run_scaling_experiment: t must be >= 0");
  if (spec.model == Model::KExclusion && !spec.kernel.totally_asymmetric_flag()) {
    throw std::invalid_argument("run_scaling_experiment: K-exclusion is totally asymmetric");
  }
  const FluxTable flux = reference_flux(spec);
  if (spec.u0.max() > flux.rho_max()) throw std::invalid_argument("run_scaling_experiment: profile exceeds the flux domain");
  const double vmax = flux.max_abs_slope();

  double a = spec.tests.front().lo();
  double b = spec.tests.front().hi();
  for (const auto& phi : spec.tests) {
    a = std::min(a, phi.lo());
    b = std::max(b, phi.hi());
  }
  if (spec.block_window) {
    a = std::min(a, spec.block_window->first);
    b = std::max(b, spec.block_window->second);
  }
  std::vector<double> reference(spec.tests.size());
  for (std::size_t k = 0; k < spec.tests.size(); ++k) reference[k] = reference_pairing(spec.u0, flux, spec.t, spec.tests[k]);
  // no wrap disturbance when the ring data close up continuously
  const bool wrap_consistent = spec.u0(-1e300) == spec.u0(1e300);

  ComparisonReport report;
  for (std::size_t n : spec.scales) {
    const double nd = static_cast<double>(n);
    const double reach = vmax * spec.t * nd;  // sites a characteristic covers by time n t
    const auto safety = spec.safety_sites ? spec.safety_sites
                                          : static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(nd * spec.t))) + 10;
    const auto pad = static_cast<std::int64_t>(std::ceil(spec.margin * reach)) + static_cast<std::int64_t>(safety);
    const auto lo_site = static_cast<std::int64_t>(std::floor(a * nd));
    const auto hi_site = static_cast<std::int64_t>(std::ceil(b * nd));
    std::int64_t L = hi_site - lo_site + 1 + 2 * pad;
    std::int64_t origin = pad - lo_site;
    if (spec.ring_override) {
      L = static_cast<std::int64_t>(spec.ring_override);
      origin = (L - (hi_site - lo_site + 1)) / 2 - lo_site;
    }
    // Window underflow: the window's domain of dependence must not meet the
    // region the wrap disturbance can reach.
    const std::int64_t left_gap = lo_site + origin;
    const std::int64_t right_gap = L - 1 - (hi_site + origin);
    const double needed = wrap_consistent ? reach : 2.0 * reach;
    const bool scale_valid = left_gap >= 0 && right_gap >= 0 && static_cast<double>(std::min(left_gap, right_gap)) >= needed;
    if (!scale_valid) report.valid = false;
    const Embedding embed{nd, origin};

    std::vector<double> site_reference;
    if (spec.block_window) {
      std::vector<double> pos(static_cast<std::size_t>(L));
      for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = embed.position(i);
      site_reference = reference_solution(spec.u0, flux, spec.t, pos);
    }

    std::vector<std::vector<ReplicaRecord>> per_replica(spec.replicas);
    std::vector<double> block_l1(spec.replicas, std::nan(""));
    std::vector<BlockProfile> profiles(spec.replicas);
    std::vector<std::uint64_t> crossings(spec.replicas, 0);
    const std::uint64_t scale_seed = derive_seed(spec.seed, "hydro_scale", n);
    parallel_for(spec.replicas, [&](std::size_t r) {
      const std::uint64_t field_seed = spec.quenched_fixed ? derive_seed(scale_seed, "field") : derive_seed(scale_seed, "field", r);
      const std::uint64_t init_seed = derive_seed(scale_seed, "init", r);
      const std::uint64_t dyn_seed = derive_seed(scale_seed, "dynamics", r);
      const RateField field = sample_rate_field(spec.law, static_cast<std::size_t>(L), field_seed);
      const Configuration init = sample_initial_profile(spec.u0, embed, field, spec.rate, spec.mode, init_seed, spec.capacity);
      RunOptions opts;
      opts.current_bins = 1;
      opts.bond = static_cast<std::size_t>(L - 1);
      const double horizon = nd * spec.t;
      const RunResult run = spec.model == Model::Zrp ? run_zrp(field, spec.kernel, spec.rate, init, horizon, dyn_seed, opts)
                                                     : run_kexclusion(field, spec.capacity, init, horizon, dyn_seed, opts);
      crossings[r] = static_cast<std::uint64_t>(std::llabs(run.counter.bond_total()));
      const auto sample = empirical_measure(run.final_config, embed, spec.tests, spec.t);
      for (std::size_t k = 0; k < spec.tests.size(); ++k) {
        ReplicaRecord rec;
        rec.scale = n;
        rec.test_id = k;
        rec.replica = r;
        rec.field_seed = field_seed;
        rec.dynamics_seed = dyn_seed;
        rec.pairing = sample.pairings[k];
        rec.reference = reference[k];
        rec.discrepancy = std::abs(rec.pairing - rec.reference);
        rec.valid = scale_valid;
        per_replica[r].push_back(rec);
      }
      if (spec.block_window) {
        auto prof = block_profile(run.final_config, embed, spec.block_window->first, spec.block_window->second, spec.block_size);
        double l1 = 0.0;
        const auto [first, last] = site_range(embed, spec.block_window->first, spec.block_window->second, run.final_config.size());
        (void)last;
        for (std::size_t j = 0; j < prof.u.size(); ++j) {
          double ref = 0.0;
          const auto s0 = static_cast<std::size_t>(first) + j * prof.window;
          for (std::size_t i = 0; i < prof.window; ++i) ref += site_reference[s0 + i];
          ref /= static_cast<double>(prof.window);
          l1 += std::abs(prof.u[j] - ref) * static_cast<double>(prof.window) / nd;
        }
        block_l1[r] = l1;
        profiles[r] = std::move(prof);
      }
    });

    for (auto& recs : per_replica) report.records.insert(report.records.end(), recs.begin(), recs.end());
    for (auto c : crossings) report.wrap_crossings += c;
    double l1_mean = std::nan("");
    double l1_se = std::nan("");
    if (spec.block_window) {
      l1_mean = std::accumulate(block_l1.begin(), block_l1.end(), 0.0) / static_cast<double>(spec.replicas);
      double ss = 0.0;
      for (double v : block_l1) ss += (v - l1_mean) * (v - l1_mean);
      l1_se = spec.replicas > 1 ? std::sqrt(ss / static_cast<double>(spec.replicas - 1) / static_cast<double>(spec.replicas)) : 0.0;
      report.block_l1.insert(report.block_l1.end(), block_l1.begin(), block_l1.end());
      if (n == spec.scales.back()) {
        report.last_block_profiles = {profiles.front()};
        const auto& prof = profiles.front();
        const auto [first, last] = site_range(embed, spec.block_window->first, spec.block_window->second, static_cast<std::size_t>(L));
        (void)last;
        report.last_block_reference.clear();
        for (std::size_t j = 0; j < prof.u.size(); ++j) {
          double ref = 0.0;
          for (std::size_t i = 0; i < prof.window; ++i) ref += site_reference[static_cast<std::size_t>(first) + j * prof.window + i];
          report.last_block_reference.push_back(ref / static_cast<double>(prof.window));
        }
      }
    }
    for (std::size_t k = 0; k < spec.tests.size(); ++k) {
      ScaleSummary s;
      s.scale = n;
      s.test_id = k;
      s.replicas = spec.replicas;
      double sum = 0.0;
      for (const auto& recs : per_replica) sum += recs[k].discrepancy;
      s.mean = sum / static_cast<double>(spec.replicas);
      double ss = 0.0;
      for (const auto& recs : per_replica) ss += (recs[k].discrepancy - s.mean) * (recs[k].discrepancy - s.mean);
      s.se = spec.replicas > 1 ? std::sqrt(ss / static_cast<double>(spec.replicas - 1) / static_cast<double>(spec.replicas)) : 0.0;
      s.block_l1_mean = l1_mean;
      s.block_l1_se = l1_se;
      report.summaries.push_back(s);
    }
    report.ring_sites_largest = static_cast<std::size_t>(L);
  }
  return report;
}

void write_report_csv(std::ostream& os, const ComparisonReport& report) {
  CsvWriter w(os, {"kind", "scale", "test_id", "replica", "D", "pairing", "reference", "se", "block_l1", "valid"});
  for (const auto& r : report.records) {
    w.row("replica", r.scale, r.test_id, r.replica, r.discrepancy, r.pairing, r.reference, std::nan(""), std::nan(""),
          r.valid ? "true" : "false");
  }
  for (const auto& s : report.summaries) {
    w.row("summary", s.scale, s.test_id, s.replicas, s.mean, std::nan(""), std::nan(""), s.se, s.block_l1_mean,
          report.valid ? "true" : "false");
  }
}

void write_block_profile_csv(std::ostream& os, const BlockProfile& empirical, const std::vector<double>& reference) {
  CsvWriter w(os, {"x", "u_empirical", "u_pde"});
  for (std::size_t i = 0; i < empirical.u.size(); ++i) {
    w.row(empirical.x[i], empirical.u[i], i < reference.size() ? reference[i] : std::nan(""));
  }
}

std::pair<double, double> kendall_trend(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 3) throw std::invalid_argument("kendall_trend: need at least three points");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += (series[j] > series[i]) - (series[j] < series[i]);
  }
  std::vector<double> sorted = series;
  std::sort(sorted.begin(), sorted.end());
  double tie_var = 0.0;
  double tie_pairs = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    tie_var += t * (t - 1.0) * (2.0 * t + 5.0);
    tie_pairs += t * (t - 1.0) / 2.0;
    i = j;
  }
  const auto nd = static_cast<double>(n);
  const double pairs = nd * (nd - 1.0) / 2.0;
  const double denom = std::sqrt(pairs * (pairs - tie_pairs));
  const double tau = denom > 0.0 ? s / denom : 0.0;
  const double var = (nd * (nd - 1.0) * (2.0 * nd + 5.0) - tie_var) / 18.0;
  if (var <= 0.0) return {tau, 1.0};
  const double z = (s - (s > 0 ? 1.0 : s < 0 ? -1.0 : 0.0)) / std::sqrt(var);  // continuity correction
  return {tau, 0.5 * std::erfc(z / std::sqrt(2.0))};
}

PhaseDiagnostics platoon_diagnostics(const std::vector<Snapshot>& snapshots, const RateField& field) {
  const std::size_t L = field.size();
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return field[a] < field[b]; });
  std::vector<std::size_t> decile(L);
  for (std::size_t r = 0; r < L; ++r) decile[order[r]] = std::min<std::size_t>(9, 10 * r / L);
  std::vector<double> decile_sites(10, 0.0);
  for (std::size_t x = 0; x < L; ++x) decile_sites[decile[x]] += 1.0;

  PhaseDiagnostics d;
  std::vector<double> series;
  for (const auto& snap : snapshots) {
    if (snap.config.size() != L) throw std::invalid_argument("platoon_diagnostics: snapshot and field sizes differ");
    if (!d.times.empty() && snap.time < d.times.back()) throw std::invalid_argument("platoon_diagnostics: snapshots out of order");
    std::vector<double> mass(10, 0.0);
    for (std::size_t x = 0; x < L; ++x) mass[decile[x]] += snap.config[x];
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::vector<double> share(10, 0.0);
    std::vector<double> mean(10, 0.0);
    for (std::size_t k = 0; k < 10; ++k) {
      share[k] = total > 0.0 ? mass[k] / total : 0.0;
      mean[k] = decile_sites[k] > 0.0 ? mass[k] / decile_sites[k] : 0.0;
    }
    d.times.push_back(snap.time);
    d.max_occupancy.push_back(snap.config.max());
    d.decile_mass_share.push_back(std::move(share));
    d.decile_mean_occupancy.push_back(std::move(mean));
    series.push_back(static_cast<double>(snap.config.max()));
  }
  if (series.size() >= 3) std::tie(d.kendall_tau, d.kendall_p_value) = kendall_trend(series);
  return d;
}

std::vector<double> predicted_decile_shares(const DisorderLaw& law, const RateFunction& rate, double phi) {
  const double rho = density_rho(phi, law, rate);
  std::vector<double> shares(10, 0.0);
  if (rho == 0.0) return shares;
  auto m = [&](double alpha) { return mean_occupancy(phi / alpha, rate); };
  for (std::size_t k = 0; k < 10; ++k) {
    const double u0 = 0.1 * static_cast<double>(k);
    const double u1 = 0.1 * static_cast<double>(k + 1);
    if (const auto* fs = std::get_if<FiniteSupport>(&law.family())) {
      // quantile is a step function: integrate piece by piece
      std::vector<Atom> atoms = fs->atoms;
      std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
      double lo = 0.0;
      double acc = 0.0;
      for (const auto& atom : atoms) {
        const double hi = lo + atom.weight;
        const double overlap = std::max(0.0, std::min(hi, u1) - std::max(lo, u0));
        acc += overlap * m(atom.value);
        lo = hi;
      }
      shares[k] = acc / rho;
    } else {
      const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double u) { return m(law.quantile(u)); }, u0, u1, 12, 1e-10);
      shares[k] = v / rho;
    }
  }
  return shares;
}

bool EmpiricalFlux::concave_within(double z) const {
  return std::all_of(concavity_z.begin(), concavity_z.end(), [z](double v) { return v <= z; });
}

FluxTable EmpiricalFlux::table() const {
  FluxTable t;
  for (const auto& p : points) {
    t.rho.push_back(p.density);
    t.f.push_back(p.current);
  }
  return t;
}

Configuration product_start(const RateField& field, const RateFunction& rate, double phi, std::int64_t particles,
                            std::uint64_t seed, bool excess_on_slowest) {
  if (particles < 0) throw std::invalid_argument("product_start: negative particle count");
  Configuration eta = sample_product_measure(QuenchedProductLaw(phi, field, rate), seed);
  Rng g = make_rng(seed, "product_start_fixup");
  std::uniform_int_distribution<std::size_t> site(0, eta.size() - 1);
  std::int64_t total = eta.total();
  if (excess_on_slowest && total < particles) {
    const auto slowest = std::min_element(field.alphas.begin(), field.alphas.end()) - field.alphas.begin();
    eta[static_cast<std::size_t>(slowest)] += static_cast<Occupancy>(particles - total);
    total = particles;
  }
  for (; total < particles; ++total) ++eta[site(g)];
  if (total > particles) {
    // remove uniformly chosen particles: cumulative counts, then sorted uniform ranks
    std::vector<std::int64_t> ranks;
    std::uniform_int_distribution<std::int64_t> pick(0, total - 1);
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(total), 0);
    while (static_cast<std::int64_t>(ranks.size()) < total - particles) {
      const auto r = pick(g);
      if (!taken[static_cast<std::size_t>(r)]) {
        taken[static_cast<std::size_t>(r)] = 1;
        ranks.push_back(r);
      }
    }
    std::sort(ranks.begin(), ranks.end());
    std::int64_t below = 0;
    std::size_t k = 0;
    Configuration out = eta;
    for (std::size_t x = 0; x < eta.size() && k < ranks.size(); ++x) {
      const std::int64_t next = below + eta[x];
      while (k < ranks.size() && ranks[k] < next) {
        --out[x];
        ++k;
      }
      below = next;
    }
    eta = std::move(out);
  }
  return eta;
}

EmpiricalFlux estimate_flux_empirical(const FluxEstimateSpec& spec) {
  if (spec.densities.empty()) throw std::invalid_argument("estimate_flux_empirical: empty density grid");
  if (spec.L < 2) throw std::invalid_argument("estimate_flux_empirical: ring too small");
  if (spec.replicas < 1) throw std::invalid_argument("estimate_flux_empirical: need at least one replica");
  for (double rho : spec.densities) {
    if (!(rho >= 0.0)) throw std::invalid_argument("estimate_flux_empirical: negative density");
    if (spec.model == Model::KExclusion && rho > spec.capacity) {
      throw std::invalid_argument("estimate_flux_empirical: density above K");
    }
  }
  const std::size_t D = spec.densities.size();
  const std::size_t R = spec.replicas;
  const std::size_t bins = 20 * spec.batches;
  std::vector<CurrentEstimate> estimates(D * R);
  std::vector<std::int64_t> particles(D);
  for (std::size_t d = 0; d < D; ++d) particles[d] = std::llround(spec.densities[d] * static_cast<double>(spec.L));
  parallel_for(D * R, [&](std::size_t job) {
    const std::size_t d = job / R;
    const std::uint64_t field_seed =
        spec.quenched_fixed ? spec.field_seed.value_or(derive_seed(spec.seed, "flux_field"))
                            : derive_seed(spec.seed, "flux_field", job);
    const RateField field = sample_rate_field(spec.law, spec.L, field_seed);
    Configuration init;
    if (spec.start != FluxStart::Flat) {
      if (spec.model != Model::Zrp) throw std::invalid_argument("estimate_flux_empirical: product start is for the ZRP");
      // above rho* the draw is at the critical fugacity and the rest is excess
      const double rho_star = critical_density(spec.law, spec.rate);
      const double phi = spec.densities[d] < rho_star ? fugacity_for_density(spec.densities[d], spec.law, spec.rate)
                                                      : spec.rate.limit() * spec.law.c();
      init = product_start(field, spec.rate, phi, particles[d], derive_seed(spec.seed, "flux_init", job),
                           spec.start == FluxStart::Condensate);
    } else {
      init = Configuration::flat(spec.L, particles[d]);
    }
    const std::uint64_t dyn_seed = derive_seed(spec.seed, "flux_dynamics", job);
    RunOptions opts;
    opts.current_bins = bins;
    const RunResult run = spec.model == Model::Zrp
                              ? run_zrp(field, spec.kernel, spec.rate, init, spec.horizon, dyn_seed, opts)
                              : run_kexclusion(field, spec.capacity, init, spec.horizon, dyn_seed, opts);
    estimates[job] = measure_current(run.counter, spec.horizon * spec.burn_in_fraction, spec.batches);
  });

  EmpiricalFlux out;
  for (std::size_t d = 0; d < D; ++d) {
    FluxPoint p;
    p.density = spec.densities[d];
    p.particles = particles[d];
    std::vector<double> pooled(spec.batches, 0.0);
    if (R == 1) {
      p.current = estimates[d].current;
      p.se = estimates[d].se;
    } else {
      double sum = 0.0;
      for (std::size_t r = 0; r < R; ++r) sum += estimates[d * R + r].current;
      p.current = sum / static_cast<double>(R);
      double ss = 0.0;
      for (std::size_t r = 0; r < R; ++r) ss += std::pow(estimates[d * R + r].current - p.current, 2);
      p.se = std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R));
    }
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t b = 0; b < spec.batches; ++b) pooled[b] += estimates[d * R + r].batch_means[b] / static_cast<double>(R);
    }
    p.drift_z = batch_drift_z(pooled);
    p.stationary = !(p.drift_z > 3.0);
    out.points.push_back(p);
  }
  for (std::size_t i = 1; i + 1 < D; ++i) {
    const auto& l = out.points[i - 1];
    const auto& m = out.points[i];
    const auto& r = out.points[i + 1];
    const double excess = 0.5 * (l.current + r.current) - m.current;
    const double se = std::sqrt(m.se * m.se + 0.25 * (l.se * l.se + r.se * r.se));
    out.concavity_z.push_back(se > 0.0 ? excess / se : (excess > 0.0 ? INFINITY : 0.0));
  }
  return out;
}

void write_empirical_flux_csv(std::ostream& os, const EmpiricalFlux& flux) {
  CsvWriter w(os, {"rho", "particles", "current", "se", "drift_z", "stationary", "concavity_z"});
  for (std::size_t i = 0; i < flux.points.size(); ++i) {
    const auto& p = flux.points[i];
    const double z = (i >= 1 && i + 1 < flux.points.size()) ? flux.concavity_z[i - 1] : std::nan("");
    w.row(p.density, p.particles, p.current, p.se, p.drift_z, p.stationary ? "true" : "false", z);
  }
}

Configuration gaps_to_zrp(const std::vector<std::int64_t>& positions, std::size_t ring_sites) {
  if (positions.empty()) throw std::invalid_argument("gaps_to_zrp: need at least one particle");
  const auto L = static_cast<std::int64_t>(ring_sites);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= L) throw std::invalid_argument("gaps_to_zrp: position outside the ring");
    if (i > 0 && positions[i] <= positions[i - 1]) throw std::invalid_argument("gaps_to_zrp: positions must be strictly increasing");
  }
  Configuration gaps = Configuration::empty(positions.size());
  for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
    gaps[i] = static_cast<Occupancy>(positions[i + 1] - positions[i] - 1);
  }
  gaps[positions.size() - 1] = static_cast<Occupancy>(positions.front() + L - positions.back() - 1);
  return gaps;
}

std::vector<std::int64_t> zrp_to_positions(const Configuration& gaps, std::int64_t first) {
  if (gaps.size() == 0) throw std::invalid_argument("zrp_to_positions: need at least one particle");
  std::vector<std::int64_t> pos{first};
  for (std::size_t i = 0; i + 1 < gaps.size(); ++i) pos.push_back(pos.back() + gaps[i] + 1);
  return pos;
}

}  // namespace zrlab
