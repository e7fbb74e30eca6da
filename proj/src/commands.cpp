#include "zrlab/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "zrlab/equilibria.hpp"
#include "zrlab/harris.hpp"
#include "zrlab/interaction_graph.hpp"
#include "zrlab/io.hpp"
#include "zrlab/kexclusion.hpp"
#include "zrlab/oracle.hpp"
#include "zrlab/pde.hpp"
#include "zrlab/zrp.hpp"

namespace zrlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Environment {
  DisorderLaw law = DisorderLaw::homogeneous();
  RateFunction rate = RateFunction::geometric();
  JumpKernel kernel = JumpKernel::totally_asymmetric();
  int capacity = 1;
  std::optional<std::string> field_csv;
};

Environment parse_environment(const ExperimentConfig& c) {
  Environment e;
  const auto& j = c.environment;
  if (j.contains("law")) e.law = parse_law(j.at("law"));
  if (j.contains("rate")) e.rate = parse_rate(j.at("rate"));
  if (j.contains("kernel")) e.kernel = parse_kernel(j.at("kernel"));
  e.capacity = get_or<int>(j, "capacity", 1);
  if (j.contains("field_csv")) e.field_csv = j.at("field_csv").get<std::string>();
  return e;
}

RateField make_field(const Environment& env, std::size_t L, std::uint64_t seed) {
  if (env.field_csv) {
    std::istringstream is(read_file(*env.field_csv));
    RateField f = read_rate_field_csv(is);
    if (f.size() != L) throw ConfigError("field_csv has " + std::to_string(f.size()) + " sites, model.L is " + std::to_string(L));
    return f;
  }
  return sample_rate_field(env.law, L, seed);
}

json number_or_inf(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

template <class Fn>
std::string csv_string(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

void expect(CommandOutcome& out, bool ok, const std::string& what) {
  out.summary["checks"].push_back({{"check", what}, {"pass", ok}});
  if (!ok) out.failures.push_back(what);
}

// ---------------------------------------------------------------- equilibria

void cmd_equilibria(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto env = parse_environment(c);
  const double rho_max = get_or<double>(c.experiment, "rho_max", 4.0);
  const double step = get_or<double>(c.experiment, "step", 0.0);
  const FluxTable table = make_flux_table(env.law, env.rate, rho_max, step);
  files.add_csv("flux_table.csv", csv_string([&](std::ostream& os) { write_flux_table_csv(os, table); }));
  const double closed = critical_density(env.law, env.rate);
  const double quad = critical_density_quadrature(env.law, env.rate);
  json report{{"law", env.law.describe()},
              {"rate", env.rate.describe()},
              {"rho_star", number_or_inf(closed)},
              {"rho_star_quadrature", number_or_inf(quad)},
              {"phi_c", env.rate.limit() * env.law.c()}};
  files.add_json("critical_density.json", report);
  out.summary = report;
  if (c.experiment.contains("expect_rho_star")) {
    const auto& want = c.experiment.at("expect_rho_star");
    const double tol = get_or<double>(c.experiment, "tolerance", 1e-6);
    if (want.is_string()) {
      expect(out, !std::isfinite(closed) && !std::isfinite(quad), "rho_star reported infinite");
    } else {
      const double w = want.get<double>();
      expect(out, std::abs(closed - w) <= tol && std::abs(quad - w) <= tol,
             "rho_star within " + format_number(tol) + " of " + format_number(w));
    }
  }
}

// ---------------------------------------------------------------- simulate

Configuration initial_configuration(const json& init, const Environment& env, const RateField& field,
                                    std::uint64_t seed) {
  const std::size_t L = field.size();
  const auto mode = get_or<std::string>(init, "mode", "flat");
  if (mode == "flat") {
    if (init.contains("particles")) return Configuration::flat(L, require<std::int64_t>(init, "particles"));
    return Configuration::flat(L, std::llround(get_or<double>(init, "density", 0.0) * static_cast<double>(L)));
  }
  if (mode == "product") {
    return sample_product_measure(QuenchedProductLaw(require<double>(init, "phi"), field, env.rate), seed);
  }
  if (mode == "values") {
    const auto v = require<std::vector<Occupancy>>(init, "values");
    if (v.size() != L) throw ConfigError("init.values must list model.L occupations");
    return Configuration(v);
  }
  throw ConfigError("unknown init mode '" + mode + "'");
}

void write_config_csv(OutputSet& files, const std::string& name, const Configuration& eta) {
  files.add_csv(name, csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"site", "eta"});
                  for (std::size_t x = 0; x < eta.size(); ++x) w.row(x, eta[x]);
                }));
}

RunResult simulate_once(Model model, const Environment& env, const RateField& field, const Configuration& init,
                        double horizon, std::uint64_t seed, const RunOptions& opts) {
  return model == Model::Zrp ? run_zrp(field, env.kernel, env.rate, init, horizon, seed, opts)
                             : run_kexclusion(field, env.capacity, init, horizon, seed, opts);
}

void simulate_trajectory(const ExperimentConfig& c, const Environment& env, OutputSet& files, CommandOutcome& out) {
  const Model model = parse_model(get_or<std::string>(c.model, "type", "zrp"));
  const auto L = require<std::size_t>(c.model, "L");
  const double horizon = require<double>(c.model, "horizon");
  if (!(horizon >= 0.0)) throw ConfigError("model.horizon must be >= 0");
  const std::uint64_t field_seed = derive_seed(c.seed, "field");
  const std::uint64_t init_seed = derive_seed(c.seed, "init");
  const std::uint64_t dyn_seed = derive_seed(c.seed, "dynamics");
  files.add_seed("field", field_seed);
  files.add_seed("init", init_seed);
  files.add_seed("dynamics", dyn_seed);
  const RateField field = make_field(env, L, field_seed);
  const Configuration init = initial_configuration(get_or<json>(c.model, "init", json::object()), env, field, init_seed);
  write_config_csv(files, "initial_config.csv", init);
  files.add_csv("rate_field.csv", csv_string([&](std::ostream& os) { write_rate_field_csv(os, field); }));

  const auto engine = get_or<std::string>(c.model, "engine", "gillespie");
  if (engine == "harris") {
    const auto blocks = get_or<std::size_t>(c.model, "blocks", 0);
    double t0 = blocks ? horizon / static_cast<double>(blocks) : 0.0;
    std::size_t nblocks = blocks;
    if (!blocks && horizon > 0.0) {
      const double base = model == Model::Zrp ? default_block_length(env.kernel, env.rate.limit()) : 0.5 * subcritical_threshold(1, 1.0);
      nblocks = static_cast<std::size_t>(std::ceil(horizon / base));
      t0 = horizon / static_cast<double>(nblocks);
    }
    HarrisStats stats;
    const Configuration final_config =
        model == Model::Zrp ? run_harris(field, env.kernel, env.rate, init, nblocks, t0, dyn_seed, Execution::Parallel, &stats)
                            : run_harris_kexclusion(field, env.capacity, init, nblocks, t0, dyn_seed, Execution::Parallel, &stats);
    write_config_csv(files, "final_config.csv", final_config);
    out.summary = {{"engine", "harris"}, {"blocks", nblocks}, {"t0", t0}, {"epochs", stats.epochs},
                   {"accepted", stats.accepted}, {"particles", final_config.total()}};
    files.add_json("simulate_summary.json", out.summary);
    return;
  }
  if (engine != "gillespie") throw ConfigError("unknown engine '" + engine + "'");
  RunOptions opts;
  opts.current_bins = get_or<std::size_t>(c.model, "bins", 200);
  opts.bond = get_or<std::size_t>(c.model, "bond", 0);
  opts.snapshot_times = get_or<std::vector<double>>(c.model, "snapshots", {});
  const RunResult run = simulate_once(model, env, field, init, horizon, dyn_seed, opts);
  write_config_csv(files, "final_config.csv", run.final_config);
  files.add_csv("current_bins.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"bin", "t_start", "t_end", "bond_crossings", "displacement"});
                  for (std::size_t b = 0; b < run.counter.bins(); ++b) {
                    w.row(b, static_cast<double>(b) * run.counter.bin_width(), static_cast<double>(b + 1) * run.counter.bin_width(),
                          run.counter.bond_counts()[b], run.counter.total_counts()[b]);
                  }
                }));
  if (!run.snapshots.empty()) {
    files.add_csv("snapshots.csv", csv_string([&](std::ostream& os) {
                    CsvWriter w(os, {"time", "site", "eta"});
                    for (const auto& s : run.snapshots) {
                      for (std::size_t x = 0; x < s.config.size(); ++x) w.row(s.time, x, s.config[x]);
                    }
                  }));
  }
  out.summary = {{"engine", "gillespie"}, {"events", run.events}, {"particles", run.final_config.total()}};
  const double burn_in = get_or<double>(c.model, "burn_in", 0.0);
  const auto batches = get_or<std::size_t>(c.model, "batches", 20);
  if (horizon > burn_in && run.counter.bins() >= batches) {
    const auto est = measure_current(run.counter, burn_in, batches);
    out.summary["current"] = est.current;
    out.summary["current_se"] = est.se;
    out.summary["drift_z"] = batch_drift_z(est.batch_means);
    if (c.experiment.contains("expected_current")) {
      const double want = c.experiment.at("expected_current").get<double>();
      expect(out, std::abs(est.current - want) <= 3.0 * est.se, "current within 3 SE of " + format_number(want));
    }
  }
  files.add_json("simulate_summary.json", out.summary);
}

void simulate_stationary_current(const ExperimentConfig& c, const Environment& env, OutputSet& files,
                                 CommandOutcome& out) {
  const auto L = require<std::size_t>(c.model, "L");
  const double horizon = require<double>(c.model, "horizon");
  if (!(horizon > 0.0)) throw ConfigError("model.horizon must be positive");
  const auto phis = require<std::vector<double>>(c.experiment, "phis");
  const auto replicas = get_or<std::size_t>(c.experiment, "replicas", 20);
  if (replicas < 2) throw ConfigError("experiment.replicas must be >= 2");
  const bool quenched_fixed = get_or<bool>(c.experiment, "quenched_fixed", false);
  const double drift = env.kernel.drift();
  const double phi_c = env.rate.limit() * env.law.c();

  struct Row {
    double current;
    std::uint64_t field_seed, dyn_seed;
  };
  std::vector<std::vector<Row>> rows(phis.size(), std::vector<Row>(replicas));
  for (std::size_t p = 0; p < phis.size(); ++p) {
    if (!(phis[p] >= 0.0 && phis[p] < phi_c) && !(phis[p] == phi_c && env.law.is_continuous())) {
      throw ConfigError("phi = " + format_number(phis[p]) + " outside the fugacity range [0, r(inf) c]");
    }
    const std::uint64_t phi_seed = derive_seed(c.seed, "stationary_current", p);
    parallel_for(replicas, [&](std::size_t r) {
      const std::uint64_t fseed = quenched_fixed ? derive_seed(phi_seed, "field") : derive_seed(phi_seed, "field", r);
      const std::uint64_t iseed = derive_seed(phi_seed, "init", r);
      const std::uint64_t dseed = derive_seed(phi_seed, "dynamics", r);
      const RateField field = make_field(env, L, fseed);
      const Configuration init = sample_product_measure(QuenchedProductLaw(phis[p], field, env.rate), iseed);
      RunOptions opts;
      opts.current_bins = 1;
      const RunResult run = run_zrp(field, env.kernel, env.rate, init, horizon, dseed, opts);
      rows[p][r] = {static_cast<double>(run.counter.displacement_total()) / (static_cast<double>(L) * horizon), fseed, dseed};
    });
    files.add_seed("stationary_current/" + format_number(phis[p]), phi_seed);
  }
  files.add_csv("stationary_current.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"phi", "replica", "current", "field_seed", "dynamics_seed"});
                  for (std::size_t p = 0; p < phis.size(); ++p) {
                    for (std::size_t r = 0; r < replicas; ++r) {
                      w.row(phis[p], r, rows[p][r].current, std::to_string(rows[p][r].field_seed),
                            std::to_string(rows[p][r].dyn_seed));
                    }
                  }
                }));
  json summaries = json::array();
  std::string summary_csv = csv_string([&](std::ostream& os) {
    CsvWriter w(os, {"phi", "expected", "mean", "se", "z"});
    for (std::size_t p = 0; p < phis.size(); ++p) {
      double mean = 0.0;
      for (const auto& row : rows[p]) mean += row.current / static_cast<double>(replicas);
      double ss = 0.0;
      for (const auto& row : rows[p]) ss += (row.current - mean) * (row.current - mean);
      const double se = std::sqrt(ss / static_cast<double>(replicas - 1) / static_cast<double>(replicas));
      const double want = phis[p] * drift;
      const double z = (mean - want) / se;
      w.row(phis[p], want, mean, se, z);
      summaries.push_back({{"phi", phis[p]}, {"expected", want}, {"mean", mean}, {"se", se}, {"z", z}});
      expect(out, std::abs(z) <= 3.0, "current at phi=" + format_number(phis[p]) + " within 3 SE of phi * drift");
    }
  });
  files.add_csv("stationary_current_summary.csv", summary_csv);
  out.summary["stationary_current"] = summaries;

  if (c.experiment.contains("exact_ring")) {
    const auto& er = c.experiment.at("exact_ring");
    const auto ring = get_or<std::size_t>(er, "L", 4);
    const int N = get_or<int>(er, "N", 3);
    const double ring_horizon = get_or<double>(er, "horizon", 2e5);
    const auto batches = get_or<std::size_t>(er, "batches", 20);
    const std::uint64_t fseed = derive_seed(c.seed, "exact_ring_field");
    const std::uint64_t dseed = derive_seed(c.seed, "exact_ring_dynamics");
    files.add_seed("exact_ring_field", fseed);
    files.add_seed("exact_ring_dynamics", dseed);
    const RateField field = sample_rate_field(env.law, ring, fseed);
    const auto sector = enumerate_sector(ring, N);
    const auto gen = build_zrp_generator(field, env.kernel, env.rate, sector);
    const auto pi = stationary_distribution(gen);
    const double exact = exact_stationary_current_zrp(sector, pi, field, env.kernel, env.rate, 0);
    RunOptions opts;
    opts.current_bins = 20 * batches;
    const RunResult run = run_zrp(field, env.kernel, env.rate, Configuration::flat(ring, N), ring_horizon, dseed, opts);
    const auto est = measure_current(run.counter, 0.25 * ring_horizon, batches);
    const json ring_report{{"L", ring}, {"N", N}, {"states", sector.size()}, {"exact", exact},
                           {"simulated", est.current}, {"se", est.se}, {"z", (est.current - exact) / est.se}};
    files.add_json("exact_ring.json", ring_report);
    out.summary["exact_ring"] = ring_report;
    expect(out, std::abs(est.current - exact) <= 3.0 * est.se, "ring simulation within 3 SE of the exact current");
  }
  files.add_json("stationary_current_summary.json", out.summary);
}

void simulate_flux(const ExperimentConfig& c, const Environment& env, OutputSet& files, CommandOutcome& out) {
  FluxEstimateSpec base;
  base.model = parse_model(get_or<std::string>(c.model, "type", "zrp"));
  base.law = env.law;
  base.rate = env.rate;
  base.kernel = env.kernel;
  base.capacity = env.capacity;
  base.densities = require<std::vector<double>>(c.experiment, "densities");
  base.replicas = get_or<std::size_t>(c.experiment, "replicas", 1);
  base.batches = get_or<std::size_t>(c.experiment, "batches", 20);
  base.burn_in_fraction = get_or<double>(c.experiment, "burn_in_fraction", 0.25);
  base.quenched_fixed = get_or<bool>(c.experiment, "quenched_fixed", true);
  const auto start = get_or<std::string>(c.experiment, "start", "flat");
  if (start == "product") {
    base.start = FluxStart::Product;
  } else if (start == "condensate") {
    base.start = FluxStart::Condensate;
  } else if (start != "flat") {
    throw ConfigError("unknown flux start '" + start + "'");
  }
  auto rings = get_or<std::vector<std::size_t>>(c.experiment, "rings", {});
  if (rings.empty()) rings.push_back(require<std::size_t>(c.model, "L"));
  auto horizons = get_or<std::vector<double>>(c.experiment, "horizons", {});
  if (horizons.empty()) horizons.assign(rings.size(), require<double>(c.model, "horizon"));
  if (horizons.size() != rings.size()) throw ConfigError("experiment.horizons must match experiment.rings");

  const bool homogeneous = env.law == DisorderLaw::homogeneous();
  auto analytic = [&](double rho) {
    if (base.model == Model::Zrp) return flux_f(rho, env.law, env.rate) * env.kernel.drift();
    if (homogeneous && env.capacity == 1) return rho * (1.0 - rho);
    return std::nan("");
  };

  if (get_or<bool>(c.experiment, "nested_fields", false)) {
    base.quenched_fixed = true;
    base.field_seed = derive_seed(c.seed, "flux_field");
    files.add_seed("flux_field", *base.field_seed);
  }
  std::vector<EmpiricalFlux> results;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    FluxEstimateSpec spec = base;
    spec.L = rings[k];
    spec.horizon = horizons[k];
    spec.seed = derive_seed(c.seed, "flux", rings[k]);
    files.add_seed("flux/L=" + std::to_string(rings[k]), spec.seed);
    results.push_back(estimate_flux_empirical(spec));
  }
  files.add_csv("empirical_flux.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"L", "rho", "particles", "current", "se", "drift_z", "stationary", "concavity_z", "analytic"});
                  for (std::size_t k = 0; k < rings.size(); ++k) {
                    const auto& pts = results[k].points;
                    for (std::size_t i = 0; i < pts.size(); ++i) {
                      const double z = (i >= 1 && i + 1 < pts.size()) ? results[k].concavity_z[i - 1] : std::nan("");
                      w.row(rings[k], pts[i].density, pts[i].particles, pts[i].current, pts[i].se, pts[i].drift_z,
                            pts[i].stationary ? "true" : "false", z, analytic(pts[i].density));
                    }
                  }
                }));
  json rows = json::array();
  for (std::size_t k = 0; k < rings.size(); ++k) {
    for (const auto& p : results[k].points) {
      rows.push_back({{"L", rings[k]}, {"rho", p.density}, {"current", p.current}, {"se", p.se}, {"drift_z", p.drift_z}});
    }
  }
  out.summary["flux"] = rows;

  const auto& chk = get_or<json>(c.experiment, "check", json::object());
  if (chk.contains("analytic_within_se")) {
    const double m = chk.at("analytic_within_se").get<double>();
    for (std::size_t k = 0; k < rings.size(); ++k) {
      for (const auto& p : results[k].points) {
        expect(out, std::abs(p.current - analytic(p.density)) <= m * p.se,
               "L=" + std::to_string(rings[k]) + " rho=" + format_number(p.density) + " within " + format_number(m) +
                   " SE of the analytic flux");
      }
    }
  }
  if (chk.contains("concavity_z")) {
    const double z = chk.at("concavity_z").get<double>();
    for (std::size_t k = 0; k < rings.size(); ++k) {
      expect(out, results[k].concave_within(z),
             "L=" + std::to_string(rings[k]) + " no midpoint concavity violation above " + format_number(z) + " SE");
    }
  }
  if (chk.contains("trend_target")) {
    const double target = chk.at("trend_target").get<double>();
    const double tol = get_or<double>(chk, "trend_tolerance", 0.05);
    for (std::size_t i = 0; i < base.densities.size(); ++i) {
      bool decreasing = true;
      for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
        const auto& a = results[k].points[i];
        const auto& b = results[k + 1].points[i];
        if (b.current > a.current + std::hypot(a.se, b.se)) decreasing = false;
      }
      const double last = results.back().points[i].current;
      const std::string rho = format_number(base.densities[i]);
      expect(out, decreasing, "rho=" + rho + " current nonincreasing in L");
      expect(out, std::abs(last - target) <= tol * target,
             "rho=" + rho + " current at the largest ring within " + format_number(100 * tol) + "% of " + format_number(target));
    }
  }
  files.add_json("flux_summary.json", out.summary);
}

void cmd_simulate(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto env = parse_environment(c);
  const auto kind = get_or<std::string>(c.experiment, "kind", "trajectory");
  if (kind == "trajectory") return simulate_trajectory(c, env, files, out);
  if (kind == "stationary_current") return simulate_stationary_current(c, env, files, out);
  if (kind == "flux") return simulate_flux(c, env, files, out);
  throw ConfigError("unknown simulate kind '" + kind + "'");
}

// ---------------------------------------------------------------- hydro

std::optional<FluxTable> flux_from_config(const json& j) {
  if (!j.is_object() || !j.contains("flux")) return std::nullopt;
  const auto& f = j.at("flux");
  const auto type = require<std::string>(f, "type");
  if (type == "tasep") {
    return FluxTable::from_function([](double r) { return r * (1.0 - r); }, 1.0, get_or<std::size_t>(f, "points", 1000));
  }
  if (type == "csv") {
    std::istringstream is(read_file(require<std::string>(f, "path")));
    return read_flux_table_csv(is);
  }
  if (type == "equilibria") return std::nullopt;
  throw ConfigError("unknown flux type '" + type + "'");
}

void hydro_scaling(const ExperimentConfig& c, const Environment& env, OutputSet& files, CommandOutcome& out) {
  ScalingSpec spec;
  spec.model = parse_model(get_or<std::string>(c.model, "type", "zrp"));
  spec.law = env.law;
  spec.rate = env.rate;
  spec.kernel = env.kernel;
  spec.capacity = env.capacity;
  spec.u0 = parse_profile(require<json>(c.pde, "u0"));
  spec.t = require<double>(c.experiment, "t");
  spec.scales = get_or<std::vector<std::size_t>>(c.experiment, "scales", spec.scales);
  spec.replicas = get_or<std::size_t>(c.experiment, "replicas", spec.replicas);
  spec.seed = derive_seed(c.seed, "hydro");
  spec.mode = parse_init_mode(get_or<std::string>(c.experiment, "init_mode", "A2"));
  spec.quenched_fixed = get_or<bool>(c.experiment, "quenched_fixed", false);
  spec.flux = flux_from_config(c.pde);
  spec.rho_max = get_or<double>(c.pde, "rho_max", 0.0);
  spec.margin = get_or<double>(c.experiment, "margin", spec.margin);
  spec.safety_sites = get_or<std::size_t>(c.experiment, "safety_sites", 0);
  spec.block_size = get_or<std::size_t>(c.experiment, "block_size", 0);
  if (c.experiment.contains("block_window")) {
    const auto w = c.experiment.at("block_window").get<std::vector<double>>();
    if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("experiment.block_window must be [a, b] with a < b");
    spec.block_window = std::make_pair(w[0], w[1]);
  }
  if (c.experiment.contains("tests")) {
    spec.tests.clear();
    for (const auto& t : c.experiment.at("tests")) spec.tests.push_back(parse_test_function(t));
  }
  files.add_seed("hydro", spec.seed);
  const ComparisonReport report = run_scaling_experiment(spec);
  files.add_csv("hydro_report.csv", csv_string([&](std::ostream& os) { write_report_csv(os, report); }));
  if (!report.last_block_profiles.empty()) {
    files.add_csv("block_profile.csv", csv_string([&](std::ostream& os) {
                    write_block_profile_csv(os, report.last_block_profiles.front(), report.last_block_reference);
                  }));
  }
  json sums = json::array();
  for (const auto& s : report.summaries) {
    json row{{"scale", s.scale}, {"test_id", s.test_id}, {"mean", s.mean}, {"se", s.se},
             {"phi_integral", spec.tests[s.test_id].integral()}};
    if (spec.block_window) {
      row["block_l1_mean"] = s.block_l1_mean;
      row["block_l1_se"] = s.block_l1_se;
    }
    sums.push_back(row);
  }
  json tests = json::array();
  for (const auto& t : spec.tests) tests.push_back(t.describe());
  out.summary = {{"valid", report.valid},
                 {"trend_nonincreasing", report.trend_nonincreasing()},
                 {"ring_sites_largest", report.ring_sites_largest},
                 {"wrap_crossings", report.wrap_crossings},
                 {"tests", tests},
                 {"summaries", sums}};

  expect(out, report.valid, "window stays clear of the ring wrap");
  const auto& chk = get_or<json>(c.experiment, "check", json::object());
  if (get_or<bool>(chk, "trend", false)) expect(out, report.trend_nonincreasing(), "D_n nonincreasing within 1 pooled SE");
  if (chk.contains("final_fraction")) {
    const double frac = chk.at("final_fraction").get<double>();
    for (std::size_t k = 0; k < spec.tests.size(); ++k) {
      const auto& s = report.summary(spec.scales.back(), k);
      expect(out, s.mean < frac * spec.tests[k].integral(),
             "D at n=" + std::to_string(spec.scales.back()) + " below " + format_number(frac) + " * integral of " +
                 spec.tests[k].describe());
    }
  }
  if (chk.contains("block_l1_max")) {
    const double lim = chk.at("block_l1_max").get<double>();
    const auto& s = report.summary(spec.scales.back(), 0);
    expect(out, s.block_l1_mean < lim, "mean block-profile L1 distance below " + format_number(lim));
  }
  out.summary["checks"] = out.summary.value("checks", json::array());
  files.add_json("hydro_summary.json", out.summary);
}

void hydro_platoon(const ExperimentConfig& c, const Environment& env, OutputSet& files, CommandOutcome& out) {
  const auto L = require<std::size_t>(c.model, "L");
  const double horizon = require<double>(c.model, "horizon");
  const auto count = get_or<std::size_t>(c.experiment, "snapshots", 20);
  if (count < 3) throw ConfigError("experiment.snapshots must be >= 3");
  const std::uint64_t fseed = derive_seed(c.seed, "field");
  const std::uint64_t iseed = derive_seed(c.seed, "init");
  const std::uint64_t dseed = derive_seed(c.seed, "dynamics");
  files.add_seed("field", fseed);
  files.add_seed("init", iseed);
  files.add_seed("dynamics", dseed);
  const RateField field = make_field(env, L, fseed);
  const Configuration init = initial_configuration(get_or<json>(c.model, "init", json::object()), env, field, iseed);
  RunOptions opts;
  for (std::size_t k = 0; k < count; ++k) opts.snapshot_times.push_back(horizon * static_cast<double>(k + 1) / static_cast<double>(count));
  const RunResult run = run_zrp(field, env.kernel, env.rate, init, horizon, dseed, opts);
  const auto d = platoon_diagnostics(run.snapshots, field);
  const double phi = get_or<double>(c.experiment, "phi", env.rate.limit() * env.law.c());
  const auto predicted = predicted_decile_shares(env.law, env.rate, phi);
  files.add_csv("platoon.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"time", "decile", "mass_share", "mean_occupancy", "predicted_share", "max_occupancy"});
                  for (std::size_t s = 0; s < d.times.size(); ++s) {
                    for (std::size_t k = 0; k < 10; ++k) {
                      w.row(d.times[s], k, d.decile_mass_share[s][k], d.decile_mean_occupancy[s][k], predicted[k], d.max_occupancy[s]);
                    }
                  }
                }));
  out.summary = {{"kendall_tau", d.kendall_tau}, {"kendall_p_value", d.kendall_p_value}, {"phi", phi},
                 {"final_max_occupancy", d.max_occupancy.back()}};
  files.add_json("platoon_summary.json", out.summary);
}

void cmd_hydro(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto env = parse_environment(c);
  const auto kind = get_or<std::string>(c.experiment, "kind", "scaling");
  if (kind == "scaling") return hydro_scaling(c, env, files, out);
  if (kind == "platoon") return hydro_platoon(c, env, files, out);
  throw ConfigError("unknown hydro kind '" + kind + "'");
}

// ---------------------------------------------------------------- pde

struct PdeRun {
  std::vector<std::pair<std::string, SolutionField>> solutions;
};

PdeRun solve_all(const Profile& u0, const FluxTable& flux, const std::vector<std::string>& solvers, double a, double b,
                 double dx, double t, const GodunovOptions& opts) {
  PdeRun run;
  const auto grid = cell_centers(a, b, dx);
  for (const auto& s : solvers) {
    if (s == "godunov") {
      run.solutions.emplace_back(s, godunov_solve(u0, flux, a, b, dx, t, opts));
    } else if (s == "lax_oleinik") {
      run.solutions.emplace_back(s, lax_oleinik_solve(u0, flux, grid, t));
    } else if (s == "riemann") {
      const auto* pc = std::get_if<PiecewiseConstant>(&u0.representation());
      if (!pc || pc->breakpoints.size() != 1) throw ConfigError("the riemann solver needs a single-step u0");
      run.solutions.emplace_back(s, riemann_field(pc->values[0], pc->values[1], flux, grid, t, pc->breakpoints[0]));
    } else {
      throw ConfigError("unknown solver '" + s + "'");
    }
  }
  return run;
}

void cmd_pde(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto env = parse_environment(c);
  const Profile u0 = parse_profile(require<json>(c.pde, "u0"));
  FluxTable flux;
  if (auto f = flux_from_config(c.pde)) {
    flux = *f;
  } else {
    const double rho_max = get_or<double>(c.pde, "rho_max", std::max(2.0 * u0.max(), 1.0));
    flux = make_flux_table(env.law, env.rate, rho_max).scaled(env.kernel.drift());
  }
  const double a = get_or<double>(c.pde, "a", -1.0);
  const double b = get_or<double>(c.pde, "b", 1.0);
  const double dx = get_or<double>(c.pde, "dx", 1e-3);
  const double t = require<double>(c.pde, "t");
  GodunovOptions opts;
  opts.cfl = get_or<double>(c.pde, "cfl", 0.9);
  const auto boundary = get_or<std::string>(c.pde, "boundary", "outflow");
  if (boundary == "periodic") {
    opts.boundary = Boundary::Periodic;
  } else if (boundary != "outflow") {
    throw ConfigError("unknown boundary '" + boundary + "'");
  }
  const auto solvers = get_or<std::vector<std::string>>(c.pde, "solvers", {"godunov", "lax_oleinik"});
  const bool refine = get_or<bool>(c.pde, "refine", false);

  auto pairwise = [](const PdeRun& run) {
    std::vector<std::tuple<std::string, std::string, double>> d;
    for (std::size_t i = 0; i < run.solutions.size(); ++i) {
      for (std::size_t j = i + 1; j < run.solutions.size(); ++j) {
        d.emplace_back(run.solutions[i].first, run.solutions[j].first,
                       l1_distance(run.solutions[i].second, run.solutions[j].second));
      }
    }
    return d;
  };
  const PdeRun coarse = solve_all(u0, flux, solvers, a, b, dx, t, opts);
  for (const auto& [name, sol] : coarse.solutions) {
    files.add_csv("solution_" + name + ".csv", csv_string([&](std::ostream& os) { write_solution_csv(os, sol); }));
  }
  const auto d1 = pairwise(coarse);
  json dist = json::array();
  const auto& chk = get_or<json>(c.pde, "check", json::object());
  const double tol = get_or<double>(chk, "l1_tolerance", INFINITY);
  const double min_ratio = get_or<double>(chk, "min_refinement_ratio", 0.0);
  std::optional<PdeRun> fine;
  if (refine) {
    fine = solve_all(u0, flux, solvers, a, b, 0.5 * dx, t, opts);
    for (const auto& [name, sol] : fine->solutions) {
      files.add_csv("solution_" + name + "_refined.csv", csv_string([&](std::ostream& os) { write_solution_csv(os, sol); }));
    }
  }
  for (std::size_t k = 0; k < d1.size(); ++k) {
    const auto& [p, q, l1] = d1[k];
    json row{{"pair", p + "-" + q}, {"l1", l1}};
    if (std::isfinite(tol)) expect(out, l1 < tol, p + " vs " + q + " L1 below " + format_number(tol));
    if (fine) {
      const double l1f = std::get<2>(pairwise(*fine)[k]);
      const bool exact = l1 <= 1e-12 && l1f <= 1e-12;  // both levels agree to rounding: no ratio to form
      const double ratio = exact ? INFINITY : l1 / l1f;
      row["l1_refined"] = l1f;
      row["refinement_ratio"] = number_or_inf(ratio);
      if (min_ratio > 0.0) {
        expect(out, exact || ratio >= min_ratio, p + " vs " + q + " L1 shrinks by >= " + format_number(min_ratio) + "x");
      }
    }
    dist.push_back(row);
  }
  out.summary["distances"] = dist;
  out.summary["t"] = t;
  out.summary["dx"] = dx;
  files.add_json("pde_summary.json", out.summary);
}

// ---------------------------------------------------------------- oracle

void cmd_oracle(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto count = get_or<std::size_t>(c.experiment, "cases", 20);
  const auto pairs = get_or<std::size_t>(c.experiment, "pairs", 100);
  const std::uint64_t seed = derive_seed(c.seed, "oracle");
  files.add_seed("oracle", seed);
  const auto results = run_oracle_suite(random_oracle_cases(count, seed), pairs);
  std::string lines;
  double worst_residual = 0.0, worst_ratio = 0.0, worst_g1 = 0.0, weakest_control = INFINITY;
  bool all_pass = true;
  for (const auto& r : results) {
    lines += oracle_json_line(r) + "\n";
    worst_residual = std::max(worst_residual, r.residual);
    worst_ratio = std::max(worst_ratio, r.duality_ratio);
    worst_g1 = std::max(worst_g1, r.g1_mismatch);
    weakest_control = std::min(weakest_control, r.perturbed_residual);
    all_pass = all_pass && r.pass;
  }
  files.add_text("oracle.jsonl", lines);
  out.summary = {{"cases", results.size()},           {"pairs", pairs},
                 {"all_pass", all_pass},              {"max_residual", worst_residual},
                 {"max_duality_ratio", worst_ratio},  {"max_g1_mismatch", worst_g1},
                 {"min_negative_control_residual", weakest_control}};
  expect(out, all_pass, "every oracle case passes stationarity and duality");
  files.add_json("oracle_summary.json", out.summary);
}

// ---------------------------------------------------------------- graph

void cmd_graph(const ExperimentConfig& c, OutputSet& files, CommandOutcome& out) {
  const auto env = parse_environment(c);
  const auto lattice_kind = get_or<std::string>(c.experiment, "lattice", "ring");
  std::vector<Offset> offsets;
  if (lattice_kind == "ring") {
    offsets = symmetric_offsets(env.kernel);
  } else if (lattice_kind == "torus") {
    offsets = torus_nearest_neighbors();
  } else {
    throw ConfigError("unknown lattice '" + lattice_kind + "'");
  }
  const std::size_t K = offsets.size();
  const double r = env.rate.limit();
  const double threshold = subcritical_threshold(K, r);
  const double t0 = c.experiment.contains("t0_fraction") ? c.experiment.at("t0_fraction").get<double>() * threshold
                                                         : require<double>(c.experiment, "t0");
  const auto samples = get_or<std::size_t>(c.experiment, "samples", 100000);
  auto sides = get_or<std::vector<std::size_t>>(c.experiment, "sides", {});
  if (sides.empty()) sides.push_back(require<std::size_t>(c.experiment, "side"));
  const auto min_hits = get_or<std::size_t>(c.experiment, "min_hits", 100);

  std::vector<PercolationReport> reports;
  for (std::size_t side : sides) {
    const Lattice lattice = lattice_kind == "ring" ? Lattice::ring(side) : Lattice::torus(side);
    const std::uint64_t seed = derive_seed(c.seed, "graph", side);
    files.add_seed("graph/side=" + std::to_string(side), seed);
    reports.push_back(percolation_experiment(lattice, offsets, t0, r, samples, seed));
  }
  files.add_csv("component_sizes.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"side", "vertices", "count"});
                  for (std::size_t k = 0; k < sides.size(); ++k) {
                    for (const auto& [v, n] : reports[k].size_histogram) w.row(sides[k], v, n);
                  }
                }));
  bool tail_ok = true;
  files.add_csv("edge_tail.csv", csv_string([&](std::ostream& os) {
                  CsvWriter w(os, {"side", "n", "edges", "hits", "empirical", "bound"});
                  for (std::size_t k = 0; k < sides.size(); ++k) {
                    for (int n = 1;; ++n) {
                      const auto m = static_cast<std::size_t>(2 * n - 1);
                      const std::size_t hits = reports[k].edges_at_least(m);
                      if (hits == 0) break;
                      const double emp = static_cast<double>(hits) / static_cast<double>(samples);
                      const double bound = path_tail_bound(K, r, t0, n);
                      w.row(sides[k], n, m, hits, emp, bound);
                      if (hits >= min_hits && emp > bound) tail_ok = false;
                    }
                  }
                }));
  json per_side = json::array();
  for (std::size_t k = 0; k < sides.size(); ++k) {
    per_side.push_back({{"side", sides[k]}, {"mean_vertices", reports[k].mean_vertices}, {"se", reports[k].mean_vertices_se}});
  }
  out.summary = {{"K", K}, {"rate_limit", r}, {"threshold", threshold}, {"t0", t0}, {"samples", samples}, {"sides", per_side}};
  const auto& chk = get_or<json>(c.experiment, "check", json::object());
  if (get_or<bool>(chk, "tail_bound", false)) {
    expect(out, tail_ok, "edge tail below the path bound wherever hits >= " + std::to_string(min_hits));
  }
  if (chk.contains("mean_size_tolerance")) {
    const double tol = chk.at("mean_size_tolerance").get<double>();
    for (std::size_t k = 0; k + 1 < reports.size(); ++k) {
      const double a = reports[k].mean_vertices;
      const double b = reports[k + 1].mean_vertices;
      expect(out, std::abs(a - b) <= tol * a,
             "mean component size stable within " + format_number(100 * tol) + "% between sides " + std::to_string(sides[k]) +
                 " and " + std::to_string(sides[k + 1]));
    }
  }
  files.add_json("graph_summary.json", out.summary);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"equilibria", "simulate", "hydro", "pde", "oracle", "graph", "selfcheck"};
  return names;
}

fs::path resolve_output_dir(const ExperimentConfig& config, const std::optional<std::string>& cli_out) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return get_or<std::string>(config.output, "dir", "out");
}

CommandOutcome run_command(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  CommandOutcome out;
  OutputSet files(out_dir);
  const auto& cmd = config.command;
  if (cmd == "equilibria") {
    cmd_equilibria(config, files, out);
  } else if (cmd == "simulate") {
    cmd_simulate(config, files, out);
  } else if (cmd == "hydro") {
    cmd_hydro(config, files, out);
  } else if (cmd == "pde") {
    cmd_pde(config, files, out);
  } else if (cmd == "oracle") {
    cmd_oracle(config, files, out);
  } else if (cmd == "graph") {
    cmd_graph(config, files, out);
  } else {
    throw ConfigError("unknown command '" + cmd + "'");
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest = files.commit(config, wall);
  return out;
}

}  // namespace zrlab
