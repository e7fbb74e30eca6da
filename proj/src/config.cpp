#include "zrlab/config.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "zrlab/io.hpp"
#include "zrlab/rng.hpp"

namespace zrlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kSections{"environment", "model", "pde", "experiment", "output"};

std::size_t count_rows(const std::string& name, std::string_view content) {
  if (name.ends_with(".csv")) return csv_row_count(content);
  if (name.ends_with(".jsonl")) return static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
  return 1;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) { return fnv1a64(bytes); }

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") {
      if (!value.is_string()) throw ConfigError("config key 'command' must be a string");
      c.command = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("config key 'seed' must be a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (kSections.count(key)) {
      if (!value.is_object()) throw ConfigError("config section '" + key + "' must be an object");
      if (key == "environment") c.environment = value;
      if (key == "model") c.model = value;
      if (key == "pde") c.pde = value;
      if (key == "experiment") c.experiment = value;
      if (key == "output") c.output = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (c.command.empty()) throw ConfigError("config key 'command' is required");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse(read_file(path));
}

json ExperimentConfig::to_json() const {
  return json{{"command", command}, {"seed", seed},       {"environment", environment}, {"model", model},
              {"pde", pde},         {"experiment", experiment}, {"output", output}};
}

std::string ExperimentConfig::serialize() const { return to_json().dump(2) + "\n"; }

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j["output"].erase("dir");
  return hex64(fnv1a(j.dump()));
}

DisorderLaw parse_law(const json& j) {
  if (j.is_string() && j.get<std::string>() == "homogeneous") return DisorderLaw::homogeneous();
  const auto family = require<std::string>(j, "family");
  if (family == "homogeneous") return DisorderLaw::homogeneous();
  if (family == "uniform") return DisorderLaw::uniform(require<double>(j, "c"));
  if (family == "shifted_beta") {
    return DisorderLaw::shifted_beta(require<double>(j, "c"), require<double>(j, "a"), require<double>(j, "b"));
  }
  if (family == "finite_support") {
    std::vector<Atom> atoms;
    for (const auto& a : require<json>(j, "atoms")) atoms.push_back({require<double>(a, "value"), require<double>(a, "weight")});
    return DisorderLaw::finite_support(std::move(atoms));
  }
  throw ConfigError("unknown disorder family '" + family + "'");
}

json law_to_json(const DisorderLaw& law) {
  return std::visit(
      [](const auto& f) -> json {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, FiniteSupport>) {
          json atoms = json::array();
          for (const auto& a : f.atoms) atoms.push_back({{"value", a.value}, {"weight", a.weight}});
          return {{"family", "finite_support"}, {"atoms", atoms}};
        } else if constexpr (std::is_same_v<F, UniformInterval>) {
          return {{"family", "uniform"}, {"c", f.c}};
        } else {
          return {{"family", "shifted_beta"}, {"c", f.c}, {"a", f.a}, {"b", f.b}};
        }
      },
      law.family());
}

RateFunction parse_rate(const json& j) {
  const auto type = j.is_string() ? j.get<std::string>() : get_or<std::string>(j, "type", "geometric");
  if (type == "geometric") return RateFunction::geometric();
  if (type == "capped_linear") return RateFunction::capped_linear(require<int>(j, "cap"));
  if (type == "table") return RateFunction(require<std::vector<double>>(j, "values"), require<double>(j, "limit"));
  throw ConfigError("unknown rate function '" + type + "'");
}

JumpKernel parse_kernel(const json& j) {
  const auto type = j.is_string() ? j.get<std::string>() : get_or<std::string>(j, "type", "totally_asymmetric");
  if (type == "totally_asymmetric") return JumpKernel::totally_asymmetric();
  if (type == "nearest_neighbor") return JumpKernel::nearest_neighbor(require<double>(j, "p_right"));
  if (type == "entries") {
    std::vector<KernelEntry> entries;
    for (const auto& e : require<json>(j, "entries")) entries.push_back({require<int>(e, "z"), require<double>(e, "p")});
    return JumpKernel(std::move(entries));
  }
  throw ConfigError("unknown kernel type '" + type + "'");
}

Profile parse_profile(const json& j) {
  const auto type = require<std::string>(j, "type");
  if (type == "constant") return Profile::constant(require<double>(j, "value"));
  if (type == "step") return Profile::step(require<double>(j, "left"), require<double>(j, "right"), get_or<double>(j, "at", 0.0));
  if (type == "piecewise") {
    return Profile(PiecewiseConstant{require<std::vector<double>>(j, "breakpoints"), require<std::vector<double>>(j, "values")});
  }
  if (type == "sampled") return Profile(SampledProfile{require<std::vector<double>>(j, "x"), require<std::vector<double>>(j, "values")});
  throw ConfigError("unknown profile type '" + type + "'");
}

TestFunction parse_test_function(const json& j) {
  TestFunction f;
  const auto shape = get_or<std::string>(j, "shape", "triangle");
  if (shape == "triangle") {
    f.shape = TestShape::Triangle;
  } else if (shape == "gaussian") {
    f.shape = TestShape::TruncatedGaussian;
  } else if (shape == "smoothed_indicator") {
    f.shape = TestShape::SmoothedIndicator;
  } else {
    throw ConfigError("unknown test function shape '" + shape + "'");
  }
  f.center = get_or<double>(j, "center", 0.0);
  f.width = get_or<double>(j, "width", 1.0);
  if (!(f.width > 0.0)) throw ConfigError("test function width must be positive");
  return f;
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "A2") return InitMode::A2;
  if (s == "A4") return InitMode::A4;
  if (s == "flat") return InitMode::Flat;
  if (s == "binomial") return InitMode::Binomial;
  throw ConfigError("unknown init mode '" + s + "'");
}

Model parse_model(const std::string& s) {
  if (s == "zrp") return Model::Zrp;
  if (s == "kexclusion") return Model::KExclusion;
  throw ConfigError("unknown model type '" + s + "'");
}

json RunManifest::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"rows", o.rows}, {"bytes", o.bytes}});
  json seed_list = json::array();
  for (const auto& s : seeds) seed_list.push_back({{"label", s.label}, {"seed", s.seed}});
  return {{"command", command}, {"config_hash", config_hash}, {"version", version},     {"run_id", run_id},
          {"outputs", outs},    {"wall_clock_seconds", wall_clock_seconds},            {"seeds", seed_list}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.command = require<std::string>(j, "command");
  m.config_hash = require<std::string>(j, "config_hash");
  m.version = require<std::string>(j, "version");
  m.run_id = get_or<std::string>(j, "run_id", "");
  m.wall_clock_seconds = get_or<double>(j, "wall_clock_seconds", 0.0);
  for (const auto& o : require<json>(j, "outputs")) {
    m.outputs.push_back({require<std::string>(o, "path"), require<std::size_t>(o, "rows"), get_or<std::uint64_t>(o, "bytes", 0)});
  }
  for (const auto& s : get_or<json>(j, "seeds", json::array())) {
    m.seeds.push_back({require<std::string>(s, "label"), require<std::uint64_t>(s, "seed")});
  }
  return m;
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {}

void OutputSet::add_csv(const std::string& name, std::string content) {
  const auto rows = csv_row_count(content);
  files_.push_back({name, std::move(content), rows});
}

void OutputSet::add_json(const std::string& name, const json& value) { add_text(name, value.dump(2) + "\n"); }

void OutputSet::add_text(const std::string& name, std::string content) {
  const auto rows = count_rows(name, content);
  files_.push_back({name, std::move(content), rows});
}

void OutputSet::add_seed(std::string label, std::uint64_t seed) { seeds_.push_back({std::move(label), seed}); }

RunManifest OutputSet::commit(const ExperimentConfig& config, double wall_clock_seconds) {
  fs::create_directories(dir_);
  RunManifest m;
  m.command = config.command;
  m.config_hash = config.hash();
  m.run_id = hex64(fnv1a(m.config_hash + ":" + std::to_string(config.seed)));
  m.wall_clock_seconds = wall_clock_seconds;
  m.seeds = seeds_;
  for (const auto& f : files_) {
    write_file_atomic(dir_ / f.name, f.content);
    m.outputs.push_back({f.name, f.rows, f.content.size()});
  }
  write_file_atomic(dir_ / ("manifest_" + config.command + ".json"), m.to_json().dump(2) + "\n");
  return m;
}

SelfCheckReport self_check(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("output directory not found: " + dir.string());
  SelfCheckReport report;
  std::map<std::string, int> references;
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.starts_with("manifest_") && name.ends_with(".json")) {
      report.manifests.push_back(name);
    } else {
      files.push_back(name);
    }
  }
  std::sort(report.manifests.begin(), report.manifests.end());
  std::sort(files.begin(), files.end());
  for (const auto& mname : report.manifests) {
    RunManifest m;
    try {
      m = RunManifest::from_json(json::parse(read_file(dir / mname)));
    } catch (const std::exception& e) {
      report.problems.push_back(mname + ": unreadable manifest (" + e.what() + ")");
      continue;
    }
    for (const auto& o : m.outputs) {
      ++references[o.path];
      if (!fs::exists(dir / o.path)) {
        report.problems.push_back(mname + ": missing output " + o.path);
        continue;
      }
      const auto content = read_file(dir / o.path);
      if (count_rows(o.path, content) != o.rows) report.problems.push_back(mname + ": row count mismatch for " + o.path);
    }
  }
  for (const auto& f : files) {
    const auto it = references.find(f);
    if (it == references.end()) {
      report.problems.push_back("orphan output " + f);
    } else if (it->second > 1) {
      report.problems.push_back(f + " is referenced by " + std::to_string(it->second) + " manifests");
    }
  }
  return report;
}

}  // namespace zrlab
