#include "tpg/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tpg/error.hpp"
#include "tpg/stability.hpp"

namespace tpg {

namespace {

[[noreturn]] void config_error(std::string_view key, std::string_view reason) {
  throw Error(ErrorCode::Config, "key=" + std::string(key) + " reason=\"" + std::string(reason) + "\"");
}

void reject_unknown(const YAML::Node& map, std::string_view section, const std::set<std::string, std::less<>>& known) {
  if (!map.IsMap()) config_error(section, "expected a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!known.contains(key)) config_error(std::string(section) + "." + key, "unknown key");
  }
}

double number(const YAML::Node& node, std::string_view key) {
  if (!node.IsScalar()) config_error(key, "expected a number");
  return parse_number(node.Scalar(), key);
}

int integer(const YAML::Node& node, std::string_view key) {
  const double x = number(node, key);
  if (x != static_cast<double>(static_cast<int>(x))) config_error(key, "expected an integer");
  return static_cast<int>(x);
}

bool boolean(const YAML::Node& node, std::string_view key) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    config_error(key, "expected true or false");
  }
}

std::string_view kind_name(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::exp_corner: return "exp-corner";
    case PerturbationKind::fourier_mode: return "fourier-mode";
    case PerturbationKind::uniform_random: return "uniform-random";
  }
  return "exp-corner";
}

int component_index(std::string_view name) {
  if (name == "u") return 0;
  if (name == "v") return 1;
  if (name == "w") return 2;
  return -1;
}

Perturbation parse_perturbation(const YAML::Node& node, const std::string& key) {
  reject_unknown(node, key, {"kind", "amplitude", "components", "m", "n", "seed"});
  Perturbation p;
  if (!node["kind"]) config_error(key + ".kind", "missing");
  const std::string kind = node["kind"].as<std::string>();
  if (kind == "exp-corner") {
    p.kind = PerturbationKind::exp_corner;
  } else if (kind == "fourier-mode") {
    p.kind = PerturbationKind::fourier_mode;
  } else if (kind == "uniform-random") {
    p.kind = PerturbationKind::uniform_random;
    if (!node["seed"]) config_error(key + ".seed", "uniform-random needs a seed");
  } else {
    config_error(key + ".kind", "expected exp-corner, fourier-mode or uniform-random");
  }
  if (!node["amplitude"]) config_error(key + ".amplitude", "missing");
  p.amplitude = number(node["amplitude"], key + ".amplitude");
  if (node["components"]) {
    p.components = {false, false, false};
    for (const auto& c : node["components"]) {
      const int idx = component_index(c.as<std::string>());
      if (idx < 0) config_error(key + ".components", "expected u, v or w");
      p.components[static_cast<std::size_t>(idx)] = true;
    }
  }
  if (node["m"]) p.m = integer(node["m"], key + ".m");
  if (node["n"]) p.n = integer(node["n"], key + ".n");
  if (node["seed"]) {
    try {
      p.seed = node["seed"].as<unsigned long long>();
    } catch (const YAML::Exception&) {
      config_error(key + ".seed", "expected a nonnegative integer");
    }
  }
  return p;
}

TaxisScheme taxis_from_string(std::string_view s) {
  if (s == "upwind") return TaxisScheme::upwind;
  if (s == "central") return TaxisScheme::central;
  config_error("stepper.taxis", "expected upwind or central");
}

void set_stepper_key(StepperConfig& st, std::string_view key, const std::string& value, std::string_view where) {
  if (key == "scheme") {
    st.scheme = scheme_from_string(value);
  } else if (key == "taxis") {
    st.taxis = taxis_from_string(value);
  } else {
    const double x = parse_number(value, where);
    if (key == "dt_init") st.dt_init = x;
    else if (key == "dt_min") st.dt_min = x;
    else if (key == "dt_max") st.dt_max = x;
    else if (key == "cfl_safety") st.cfl_safety = x;
    else if (key == "t_end") st.t_end = x;
    else if (key == "linear_tol") st.linear_tol = x;
    else if (key == "positivity_tol") st.positivity_tol = x;
    else config_error(where, "unknown key");
  }
}

const std::set<std::string, std::less<>> kStepperKeys = {"scheme", "taxis", "dt_init", "dt_min", "dt_max",
                                                          "cfl_safety", "t_end", "linear_tol", "positivity_tol"};

}  // namespace

double parse_number(std::string_view text, std::string_view key) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec == std::errc() && end == text.data() + text.size()) return x;
  if (text == "inf" || text == ".inf") return std::numeric_limits<double>::infinity();
  try {
    const Rule r = Rule::parse(text);
    if (!r.is_constant()) config_error(key, "expected a constant expression");
    return r(0.0);
  } catch (const Error&) {
    config_error(key, "expected a number, got '" + std::string(text) + "'");
  }
}

RunConfig parse_config(const YAML::Node& root) {
  YAML::Node doc = root;
  if (doc.IsMap() && doc["config"]) doc = doc["config"];
  reject_unknown(doc, "root", {"model", "grid", "init", "stepper", "outputs", "diagnostics"});
  RunConfig cfg;

  const YAML::Node model = doc["model"];
  if (!model) config_error("model", "missing");
  reject_unknown(model, "model", {"preset", "params", "rules"});
  if (!model["preset"]) config_error("model.preset", "missing");
  cfg.preset = model["preset"].as<std::string>();
  if (model["params"]) {
    for (const auto& kv : model["params"]) {
      const std::string name = kv.first.as<std::string>();
      cfg.params[name] = number(kv.second, "model.params." + name);
    }
  }
  if (model["rules"]) {
    for (const auto& kv : model["rules"]) cfg.rules[kv.first.as<std::string>()] = kv.second.as<std::string>();
  }

  const YAML::Node grid = doc["grid"];
  if (!grid) config_error("grid", "missing");
  reject_unknown(grid, "grid", {"length_x", "length_y", "nx", "ny"});
  for (const char* k : {"length_x", "length_y", "nx", "ny"})
    if (!grid[k]) config_error(std::string("grid.") + k, "missing");
  cfg.grid = GridSpec::make(number(grid["length_x"], "grid.length_x"), number(grid["length_y"], "grid.length_y"),
                            integer(grid["nx"], "grid.nx"), integer(grid["ny"], "grid.ny"));

  if (const YAML::Node init = doc["init"]) {
    reject_unknown(init, "init", {"u", "v", "w", "perturbations"});
    for (int c = 0; c < 3; ++c) {
      const std::string name(1, "uvw"[c]);
      if (!init[name]) continue;
      if (init[name].IsScalar() && init[name].Scalar() == "steady") {
        if (c != 0) config_error("init." + name, "only u may be 'steady'");
        cfg.init_constant[0].reset();
      } else {
        cfg.init_constant[static_cast<std::size_t>(c)] = number(init[name], "init." + name);
      }
    }
    if (const YAML::Node ps = init["perturbations"]) {
      if (!ps.IsSequence()) config_error("init.perturbations", "expected a list");
      for (std::size_t k = 0; k < ps.size(); ++k)
        cfg.perturbations.push_back(parse_perturbation(ps[k], "init.perturbations." + std::to_string(k)));
    }
  }

  if (const YAML::Node st = doc["stepper"]) {
    reject_unknown(st, "stepper", kStepperKeys);
    for (const auto& kv : st) {
      const std::string key = kv.first.as<std::string>();
      set_stepper_key(cfg.stepper, key, kv.second.as<std::string>(), "stepper." + key);
    }
  }

  if (const YAML::Node out = doc["outputs"]) {
    reject_unknown(out, "outputs", {"interval", "snapshot_interval", "heatmaps"});
    if (out["interval"]) cfg.output_interval = number(out["interval"], "outputs.interval");
    if (out["snapshot_interval"]) cfg.snapshot_interval = number(out["snapshot_interval"], "outputs.snapshot_interval");
    if (out["heatmaps"]) cfg.heatmaps = boolean(out["heatmaps"], "outputs.heatmaps");
  }

  if (const YAML::Node dg = doc["diagnostics"]) {
    reject_unknown(dg, "diagnostics", {"window", "box", "samples"});
    if (dg["window"]) cfg.regime_window = number(dg["window"], "diagnostics.window");
    if (dg["samples"]) cfg.hypothesis_samples = integer(dg["samples"], "diagnostics.samples");
    if (const YAML::Node box = dg["box"]) {
      reject_unknown(box, "diagnostics.box", {"u", "v", "w"});
      std::array<std::array<double, 2>*, 3> ranges{&cfg.box.u, &cfg.box.v, &cfg.box.w};
      for (int c = 0; c < 3; ++c) {
        const std::string name(1, "uvw"[c]);
        const YAML::Node r = box[name];
        if (!r) continue;
        const std::string key = "diagnostics.box." + name;
        if (!r.IsSequence() || r.size() != 2) config_error(key, "expected [lo, hi]");
        *ranges[static_cast<std::size_t>(c)] = {number(r[0], key), number(r[1], key)};
      }
    }
  }

  cfg.stepper.validate();
  if (!(cfg.output_interval > 0.0)) config_error("outputs.interval", "must be positive");
  if (cfg.snapshot_interval < 0.0) config_error("outputs.snapshot_interval", "must not be negative");
  if (cfg.regime_window < 0.0) config_error("diagnostics.window", "must not be negative");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    config_error("config", "cannot open " + path);
  } catch (const YAML::Exception& e) {
    config_error("config", e.what());
  }
  try {
    return parse_config(doc);
  } catch (const YAML::Exception& e) {
    config_error("config", e.what());
  }
}

ModelSpec RunConfig::build_model() const { return tpg::preset(preset, params, rules); }

State RunConfig::initial_state(const ModelSpec& m) const {
  std::array<double, 3> c{};
  for (int k = 1; k < 3; ++k) c[static_cast<std::size_t>(k)] = init_constant[static_cast<std::size_t>(k)].value_or(0.0);
  c[0] = init_constant[0] ? *init_constant[0] : trivial_steady_state(m, c[2]).ubar;
  return make_state(grid, c, perturbations);
}

void emit_config(YAML::Emitter& out, const RunConfig& cfg) {
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << cfg.preset;
  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : cfg.params) out << YAML::Key << k << YAML::Value << v;
  out << YAML::EndMap;
  if (!cfg.rules.empty()) {
    out << YAML::Key << "rules" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : cfg.rules) out << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << v;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "length_x" << YAML::Value << cfg.grid.length_x;
  out << YAML::Key << "length_y" << YAML::Value << cfg.grid.length_y;
  out << YAML::Key << "nx" << YAML::Value << cfg.grid.nx;
  out << YAML::Key << "ny" << YAML::Value << cfg.grid.ny;
  out << YAML::EndMap;

  out << YAML::Key << "init" << YAML::Value << YAML::BeginMap;
  for (int c = 0; c < 3; ++c) {
    out << YAML::Key << std::string(1, "uvw"[c]) << YAML::Value;
    const auto& v = cfg.init_constant[static_cast<std::size_t>(c)];
    if (v) out << *v;
    else out << "steady";
  }
  out << YAML::Key << "perturbations" << YAML::Value << YAML::BeginSeq;
  for (const Perturbation& p : cfg.perturbations) {
    out << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(kind_name(p.kind));
    out << YAML::Key << "amplitude" << YAML::Value << p.amplitude;
    out << YAML::Key << "components" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int c = 0; c < 3; ++c)
      if (p.components[static_cast<std::size_t>(c)]) out << std::string(1, "uvw"[c]);
    out << YAML::EndSeq;
    if (p.kind == PerturbationKind::fourier_mode) {
      out << YAML::Key << "m" << YAML::Value << p.m;
      out << YAML::Key << "n" << YAML::Value << p.n;
    }
    if (p.kind == PerturbationKind::uniform_random) out << YAML::Key << "seed" << YAML::Value << p.seed;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  const StepperConfig& st = cfg.stepper;
  out << YAML::Key << "stepper" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scheme" << YAML::Value << std::string(to_string(st.scheme));
  out << YAML::Key << "taxis" << YAML::Value << (st.taxis == TaxisScheme::upwind ? "upwind" : "central");
  out << YAML::Key << "dt_init" << YAML::Value << st.dt_init;
  out << YAML::Key << "dt_min" << YAML::Value << st.dt_min;
  out << YAML::Key << "dt_max" << YAML::Value << st.dt_max;
  out << YAML::Key << "cfl_safety" << YAML::Value << st.cfl_safety;
  out << YAML::Key << "t_end" << YAML::Value << st.t_end;
  out << YAML::Key << "linear_tol" << YAML::Value << st.linear_tol;
  out << YAML::Key << "positivity_tol" << YAML::Value << st.positivity_tol;
  out << YAML::EndMap;

  out << YAML::Key << "outputs" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "interval" << YAML::Value << cfg.output_interval;
  out << YAML::Key << "snapshot_interval" << YAML::Value << cfg.snapshot_interval;
  out << YAML::Key << "heatmaps" << YAML::Value << cfg.heatmaps;
  out << YAML::EndMap;

  out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "window" << YAML::Value << cfg.regime_window;
  out << YAML::Key << "samples" << YAML::Value << cfg.hypothesis_samples;
  out << YAML::Key << "box" << YAML::Value << YAML::BeginMap;
  for (int c = 0; c < 3; ++c) {
    const auto& r = c == 0 ? cfg.box.u : c == 1 ? cfg.box.v : cfg.box.w;
    out << YAML::Key << std::string(1, "uvw"[c]) << YAML::Value << YAML::Flow << YAML::BeginSeq << r[0] << r[1]
        << YAML::EndSeq;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  out << YAML::EndMap;
}

void set_axis_value(RunConfig& cfg, std::string_view name, double value) {
  if (name.starts_with("init.")) {
    const int c = component_index(name.substr(5));
    if (c < 0) config_error(name, "expected init.u, init.v or init.w");
    cfg.init_constant[static_cast<std::size_t>(c)] = value;
    return;
  }
  const PresetInfo& info = preset_info(cfg.preset);
  auto listed = [&](const std::vector<std::string_view>& names) {
    for (auto n : names)
      if (n == name) return true;
    return false;
  };
  if (!listed(info.required) && !listed(info.optional) && !cfg.params.contains(name))
    config_error(name, "not a parameter of preset " + cfg.preset);
  cfg.params[std::string(name)] = value;
}

void apply_env_overrides(RunConfig& cfg) {
  for (const std::string& key : kStepperKeys) {
    std::string var = "TPG_STEPPER_" + key;
    for (char& ch : var) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(var.c_str())) set_stepper_key(cfg.stepper, key, v, var);
  }
  cfg.stepper.validate();
}

}  // namespace tpg
