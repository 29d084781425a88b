#include "fpl/config.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fpl/dataset.hpp"
#include "fpl/error.hpp"

namespace fpl {

namespace {

[[noreturn]] void fail(const std::string& origin, const YAML::Node& node, const std::string& field,
                       const std::string& msg) {
  std::ostringstream os;
  os << origin;
  if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
  os << ": " << field << ": " << msg;
  throw Error(ErrorKind::ConfigError, os.str());
}

template <typename T>
T scalar(const std::string& origin, const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(origin, node, field, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(origin, node, field, "cannot parse '" + node.Scalar() + "'");
  }
}

void check_keys(const std::string& origin, const YAML::Node& map, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!map.IsMap()) fail(origin, map, where, "expected a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      const std::string field = where.empty() ? key : where + "." + key;
      fail(origin, kv.first, field, "unknown key");
    }
  }
}

double pi_over_t(double v, double period) { return v * kPi / period; }

}  // namespace

const std::vector<std::string>& model_parameters(const std::string& model) {
  static const std::map<std::string, std::vector<std::string>> names{
      {"aiii", {"theta_re", "theta_im", "g"}},
      {"two_da", {"j", "delta"}},
      {"dclass", {"j1", "j2", "g"}},
  };
  const auto it = names.find(model);
  if (it == names.end()) throw Error(ErrorKind::ConfigError, "model: unknown family '" + model + "'");
  return it->second;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << origin << ":" << e.mark.line + 1 << ": syntax: " << e.msg;
    throw Error(ErrorKind::ConfigError, os.str());
  }
  check_keys(origin, root, "",
             {"model", "period", "fixed", "sweep", "sampling", "samples", "seed", "grid", "gap_tol", "kernel",
              "output", "jobs"});

  RunConfig c;
  if (!root["model"]) fail(origin, root, "model", "required");
  c.model = scalar<std::string>(origin, root["model"], "model");
  try {
    model_parameters(c.model);
  } catch (const Error&) {
    fail(origin, root["model"], "model", "unknown family '" + c.model + "' (aiii, two_da, dclass)");
  }
  const auto& names = model_parameters(c.model);
  const auto known = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };

  if (root["period"]) c.period = scalar<double>(origin, root["period"], "period");
  if (!(c.period > 0.0)) fail(origin, root["period"], "period", "must be positive");

  if (const auto fx = root["fixed"]) {
    if (!fx.IsMap()) fail(origin, fx, "fixed", "expected a mapping");
    for (const auto& kv : fx) {
      const auto key = kv.first.as<std::string>();
      if (!known(key)) fail(origin, kv.first, "fixed." + key, "not a parameter of " + c.model);
      c.fixed[key] = scalar<double>(origin, kv.second, "fixed." + key);
    }
  }

  if (const auto sw = root["sweep"]) {
    if (!sw.IsMap()) fail(origin, sw, "sweep", "expected a mapping of parameter -> {min, max, count}");
    for (const auto& kv : sw) {
      const auto key = kv.first.as<std::string>();
      const std::string field = "sweep." + key;
      if (!known(key)) fail(origin, kv.first, field, "not a parameter of " + c.model);
      if (c.fixed.count(key)) fail(origin, kv.first, field, "parameter is both fixed and swept");
      check_keys(origin, kv.second, field, {"min", "max", "count"});
      SweepAxis ax;
      ax.name = key;
      if (!kv.second["min"] || !kv.second["max"]) fail(origin, kv.second, field, "min and max are required");
      ax.min = scalar<double>(origin, kv.second["min"], field + ".min");
      ax.max = scalar<double>(origin, kv.second["max"], field + ".max");
      if (kv.second["count"]) ax.count = scalar<int>(origin, kv.second["count"], field + ".count");
      if (ax.count < 1) fail(origin, kv.second["count"], field + ".count", "must be >= 1");
      if (ax.max < ax.min) fail(origin, kv.second, field, "max < min");
      c.sweep.push_back(ax);
    }
  }
  if (c.sweep.size() > 2) fail(origin, root["sweep"], "sweep", "at most two swept parameters");
  for (const auto& n : names) {
    const bool swept = std::any_of(c.sweep.begin(), c.sweep.end(), [&](const SweepAxis& a) { return a.name == n; });
    if (!swept && !c.fixed.count(n)) fail(origin, root, "fixed." + n, "parameter is neither fixed nor swept");
  }

  if (const auto s = root["sampling"]) {
    const auto v = scalar<std::string>(origin, s, "sampling");
    if (v == "grid") {
      c.sampling = Sampling::Grid;
    } else if (v == "random") {
      c.sampling = Sampling::Random;
    } else {
      fail(origin, s, "sampling", "expected 'grid' or 'random'");
    }
  }
  if (root["samples"]) c.samples = scalar<int>(origin, root["samples"], "samples");
  if (root["seed"]) c.seed = scalar<std::uint64_t>(origin, root["seed"], "seed");
  if (c.sampling == Sampling::Random) {
    if (!c.seed) fail(origin, root, "seed", "required for random sampling");
    if (c.samples < 1) fail(origin, root["samples"], "samples", "must be >= 1 for random sampling");
  }

  c.grid = GridSpec{};
  c.grid.dims = c.model == "two_da" ? 2 : 1;
  if (c.grid.dims == 2) {
    c.grid.nk = 24;
    c.grid.nt = 12;
  }
  if (const auto g = root["grid"]) {
    check_keys(origin, g, "grid", {"nk", "nt", "substeps"});
    if (g["nk"]) c.grid.nk = scalar<int>(origin, g["nk"], "grid.nk");
    if (g["nt"]) c.grid.nt = scalar<int>(origin, g["nt"], "grid.nt");
    if (g["substeps"]) c.grid.substeps = scalar<int>(origin, g["substeps"], "grid.substeps");
    try {
      c.grid.validate();
    } catch (const Error& e) {
      fail(origin, g, "grid", e.what());
    }
  }
  if (root["gap_tol"]) c.gap_tol = scalar<double>(origin, root["gap_tol"], "gap_tol");

  if (const auto k = root["kernel"]) {
    check_keys(origin, k, "kernel", {"epsilon", "threshold", "ell", "cutoff", "edge_threshold"});
    if (k["epsilon"]) c.kernel.epsilon = scalar<double>(origin, k["epsilon"], "kernel.epsilon");
    if (k["threshold"]) c.kernel.threshold = scalar<double>(origin, k["threshold"], "kernel.threshold");
    if (k["ell"]) c.kernel.ell = scalar<int>(origin, k["ell"], "kernel.ell");
    if (k["cutoff"]) c.kernel.cutoff = scalar<double>(origin, k["cutoff"], "kernel.cutoff");
    if (k["edge_threshold"]) {
      c.kernel.edge_threshold = scalar<double>(origin, k["edge_threshold"], "kernel.edge_threshold");
    }
  }

  if (const auto o = root["output"]) {
    check_keys(origin, o, "output", {"dir", "csv", "json", "svg"});
    if (o["dir"]) c.output.dir = scalar<std::string>(origin, o["dir"], "output.dir");
    if (o["csv"]) c.output.csv = scalar<bool>(origin, o["csv"], "output.csv");
    if (o["json"]) c.output.json = scalar<bool>(origin, o["json"], "output.json");
    if (o["svg"]) c.output.svg = scalar<bool>(origin, o["svg"], "output.svg");
  }
  if (root["jobs"]) c.jobs = scalar<int>(origin, root["jobs"], "jobs");

  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, origin + ": " + std::string(e.what()));
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate(const RunConfig& c) {
  const auto fail_field = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorKind::ConfigError, field + ": " + msg);
  };
  model_parameters(c.model);
  if (c.sweep.size() > 2) fail_field("sweep", "at most two swept parameters");
  if (c.sampling == Sampling::Random && !c.seed) fail_field("seed", "required for random sampling");
  if (!(c.kernel.epsilon > 0.0)) fail_field("kernel.epsilon", "must be positive");
  if (!(c.kernel.threshold > 0.0 && c.kernel.threshold < 1.0)) fail_field("kernel.threshold", "must lie in (0, 1)");
  if (c.kernel.ell < 1) fail_field("kernel.ell", "must be >= 1");
  if (!(c.kernel.cutoff > 0.0)) fail_field("kernel.cutoff", "must be positive");
  if (!(c.gap_tol >= 0.0)) fail_field("gap_tol", "must be >= 0");
  if (c.jobs < 0) fail_field("jobs", "must be >= 0");
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = c.model;
  j["period"] = c.period;
  j["fixed"] = c.fixed;
  j["sweep"] = nlohmann::json::array();
  for (const auto& a : c.sweep) j["sweep"].push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"count", a.count}});
  j["sampling"] = c.sampling == Sampling::Grid ? "grid" : "random";
  if (c.sampling == Sampling::Random) j["samples"] = c.samples;
  if (c.seed) j["seed"] = *c.seed;
  j["grid"] = {{"nk", c.grid.nk}, {"nt", c.grid.nt}, {"dims", c.grid.dims}, {"substeps", c.grid.substeps}};
  j["gap_tol"] = c.gap_tol;
  j["kernel"] = {{"epsilon", c.kernel.epsilon},
                 {"threshold", c.kernel.threshold},
                 {"ell", c.kernel.ell},
                 {"cutoff", c.kernel.cutoff},
                 {"edge_threshold", c.kernel.edge_threshold}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  const std::string s = config_json(c).dump();
  return hex64(fnv1a64(s.data(), s.size()));
}

std::vector<std::vector<double>> sample_points(const RunConfig& c) {
  std::vector<std::vector<double>> pts;
  if (c.sweep.empty()) {
    pts.emplace_back();
    return pts;
  }
  if (c.sampling == Sampling::Random) {
    std::mt19937_64 rng(*c.seed);
    for (int s = 0; s < c.samples; ++s) {
      std::vector<double> p;
      for (const auto& a : c.sweep) {
        // Uniform draw from 53 random bits; avoids distribution differences
        // between standard libraries.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p.push_back(a.min + u * (a.max - a.min));
      }
      pts.push_back(std::move(p));
    }
    return pts;
  }
  const auto value = [](const SweepAxis& a, int i) {
    return a.count == 1 ? a.min : a.min + (a.max - a.min) * i / (a.count - 1);
  };
  if (c.sweep.size() == 1) {
    for (int i = 0; i < c.sweep[0].count; ++i) pts.push_back({value(c.sweep[0], i)});
  } else {
    for (int i = 0; i < c.sweep[0].count; ++i) {
      for (int j = 0; j < c.sweep[1].count; ++j) pts.push_back({value(c.sweep[0], i), value(c.sweep[1], j)});
    }
  }
  return pts;
}

DriveModel make_model(const std::string& model, const std::vector<std::string>& names,
                      const std::vector<double>& values, const std::map<std::string, double>& fixed,
                      double period) {
  if (names.size() != values.size()) throw Error(ErrorKind::InvalidModel, "parameter name/value count mismatch");
  const auto get = [&](const std::string& n) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == n) return pi_over_t(values[i], period);
    }
    const auto it = fixed.find(n);
    if (it == fixed.end()) throw Error(ErrorKind::InvalidModel, "parameter '" + n + "' has no value");
    return pi_over_t(it->second, period);
  };
  DriveModel m;
  if (model == "aiii") {
    m = Aiii{get("theta_re"), get("theta_im"), get("g"), period};
  } else if (model == "two_da") {
    m = TwoDA{get("j"), get("delta"), period};
  } else if (model == "dclass") {
    m = DClass{get("j1"), get("j2"), get("g"), period};
  } else {
    throw Error(ErrorKind::InvalidModel, "unknown model family '" + model + "'");
  }
  validate(m);
  return m;
}

}  // namespace fpl
