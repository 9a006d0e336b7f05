#include "rfmag/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "rfmag/errors.hpp"

namespace rfmag {
namespace {

const std::map<std::string, double>& unit_table(Dimension dim) {
  static const std::map<Dimension, std::map<std::string, double>> tables = {
      {Dimension::none, {}},
      {Dimension::field,
       {{"T", 1.0}, {"mT", 1e-3}, {"uT", 1e-6}, {"nT", 1e-9}, {"pT", 1e-12}, {"fT", 1e-15},
        {"G", 1e-4}, {"mG", 1e-7}}},
      {Dimension::time, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}}},
      {Dimension::frequency, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}},
      {Dimension::rate,
       {{"1/s", 1.0}, {"/s", 1.0}, {"s^-1", 1.0}, {"1/ms", 1e3}, {"/ms", 1e3}, {"ms^-1", 1e3},
        {"1/us", 1e6}, {"us^-1", 1e6}}},
      {Dimension::angular_rate, {{"rad/s", 1.0}, {"krad/s", 1e3}, {"Mrad/s", 1e6}}},
      {Dimension::angle, {{"rad", 1.0}, {"deg", std::numbers::pi / 180.0}}},
      {Dimension::gyro, {{"rad/(s T)", 1.0}, {"rad/(s*T)", 1.0}, {"rad/s/T", 1.0}}},
  };
  return tables.at(dim);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Describes one configurable value. Exactly one of real/integer/choice is set.
struct Field {
  std::string path;
  Dimension dim = Dimension::none;
  std::function<double&(SimConfig&)> real;
  std::function<int&(SimConfig&)> integer;
  std::vector<std::string> choices;
  std::function<std::string(const SimConfig&)> get_choice;
  std::function<void(SimConfig&, const std::string&)> set_choice;
};

template <typename E>
Field choice_field(std::string path, std::vector<std::pair<std::string, E>> options,
                   std::function<E&(SimConfig&)> ref) {
  Field f;
  f.path = std::move(path);
  for (const auto& o : options) f.choices.push_back(o.first);
  f.get_choice = [options, ref](const SimConfig& c) {
    const E v = ref(const_cast<SimConfig&>(c));
    for (const auto& o : options) {
      if (o.second == v) return o.first;
    }
    throw std::logic_error("unnamed enum value");
  };
  f.set_choice = [options, ref, p = f.path](SimConfig& c, const std::string& s) {
    for (const auto& o : options) {
      if (o.first == s) {
        ref(c) = o.second;
        return;
      }
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + o.first;
    throw ConfigError("'" + p + "': invalid value '" + s + "' (expected " + allowed + ")");
  };
  return f;
}

Field real_field(std::string path, Dimension dim, std::function<double&(SimConfig&)> ref) {
  Field f;
  f.path = std::move(path);
  f.dim = dim;
  f.real = std::move(ref);
  return f;
}

Field int_field(std::string path, std::function<int&(SimConfig&)> ref) {
  Field f;
  f.path = std::move(path);
  f.integer = std::move(ref);
  return f;
}

void add_probe_fields(std::vector<Field>& out, const std::string& name,
                      ProbeParams& (*probe)(SimConfig&)) {
  const std::string p = name + ".";
  out.push_back(real_field(p + "photon_number", Dimension::none,
                           [probe](SimConfig& c) -> double& { return probe(c).photon_number; }));
  out.push_back(real_field(p + "duration", Dimension::time,
                           [probe](SimConfig& c) -> double& { return probe(c).duration; }));
  out.push_back(real_field(p + "detuning", Dimension::frequency,
                           [probe](SimConfig& c) -> double& { return probe(c).detuning; }));
  out.push_back(real_field(p + "xi_squared", Dimension::none,
                           [probe](SimConfig& c) -> double& { return probe(c).xi_squared; }));
  out.push_back(real_field(p + "eta_detection", Dimension::none,
                           [probe](SimConfig& c) -> double& { return probe(c).eta_detection; }));
  out.push_back(real_field(p + "mode_gamma", Dimension::rate,
                           [probe](SimConfig& c) -> double& { return probe(c).mode_gamma; }));
  out.push_back(real_field(p + "s3c_displacement", Dimension::none,
                           [probe](SimConfig& c) -> double& { return probe(c).s3c_displacement; }));
  out.push_back(int_field(p + "n_slices", [probe](SimConfig& c) -> int& { return probe(c).n_slices; }));
  out.push_back(choice_field<ModeSign>(
      p + "mode_sign", {{"rising", ModeSign::rising}, {"falling", ModeSign::falling}},
      [probe](SimConfig& c) -> ModeSign& { return probe(c).mode_sign; }));
  out.push_back(choice_field<ReadoutModel>(
      p + "readout", {{"pulse", ReadoutModel::pulse}, {"temporal", ReadoutModel::temporal}},
      [probe](SimConfig& c) -> ReadoutModel& { return probe(c).readout; }));
}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    auto E = [](SimConfig& c) -> ExperimentConfig& { return c.experiment; };
    f.push_back(real_field("constants.gamma_gyro", Dimension::gyro,
                           [E](SimConfig& c) -> double& { return E(c).constants.gamma_gyro; }));
    f.push_back(real_field("constants.spin_f", Dimension::none,
                           [E](SimConfig& c) -> double& { return E(c).constants.spin_f; }));
    f.push_back(real_field("ensemble.n_atoms_per_cell", Dimension::none,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.n_atoms_per_cell; }));
    f.push_back(int_field("ensemble.n_cells",
                          [E](SimConfig& c) -> int& { return E(c).ensemble.n_cells; }));
    f.push_back(real_field("ensemble.t2_dark", Dimension::time,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.t2_dark; }));
    f.push_back(real_field("ensemble.gamma_swap", Dimension::rate,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.gamma_swap; }));
    f.push_back(real_field("ensemble.gamma_extra", Dimension::rate,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.gamma_extra; }));
    f.push_back(real_field("ensemble.beta0", Dimension::none,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.beta0; }));
    f.push_back(real_field("ensemble.optical_depth", Dimension::none,
                           [E](SimConfig& c) -> double& { return E(c).ensemble.optical_depth; }));
    add_probe_fields(f, "probe1", [](SimConfig& c) -> ProbeParams& { return c.experiment.probe1; });
    add_probe_fields(f, "probe2", [](SimConfig& c) -> ProbeParams& { return c.experiment.probe2; });
    f.push_back(real_field("rf.amplitude", Dimension::field,
                           [E](SimConfig& c) -> double& { return E(c).rf.amplitude; }));
    f.push_back(real_field("rf.duration", Dimension::time,
                           [E](SimConfig& c) -> double& { return E(c).rf.duration; }));
    f.push_back(real_field("rf.phase", Dimension::angle,
                           [E](SimConfig& c) -> double& { return E(c).rf.phase; }));
    f.push_back(real_field("rf.carrier", Dimension::angular_rate,
                           [E](SimConfig& c) -> double& { return E(c).rf.carrier; }));
    f.push_back(real_field("b_dc", Dimension::field,
                           [E](SimConfig& c) -> double& { return E(c).b_dc; }));
    f.push_back(real_field("delay", Dimension::time,
                           [E](SimConfig& c) -> double& { return E(c).delay; }));
    f.push_back(real_field("pump_duration", Dimension::time,
                           [E](SimConfig& c) -> double& { return E(c).pump_duration; }));
    f.push_back(real_field("sample_rate_factor", Dimension::none,
                           [E](SimConfig& c) -> double& { return E(c).sample_rate_factor; }));
    f.push_back(choice_field<ReadoutPath>(
        "readout_path", {{"mode", ReadoutPath::mode}, {"time_domain", ReadoutPath::time_domain}},
        [E](SimConfig& c) -> ReadoutPath& { return E(c).readout_path; }));
    f.push_back(choice_field<ProtocolKind>(
        "protocol",
        {{"pn", ProtocolKind::pn},
         {"entangled", ProtocolKind::entangled},
         {"unentangled", ProtocolKind::unentangled},
         {"calibration", ProtocolKind::calibration}},
        [](SimConfig& c) -> ProtocolKind& { return c.protocol; }));
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& path) {
  for (const auto& f : registry()) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

std::string where(const YAML::Node& node) {
  const auto m = node.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

std::string scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError("'" + key + "' must be a scalar" + where(node));
  return node.Scalar();
}

double quantity(const YAML::Node& node, const std::string& key, Dimension dim) {
  try {
    return parse_quantity(scalar(node, key), dim);
  } catch (const ConfigError& e) {
    throw ConfigError("'" + key + "': " + e.what() + where(node));
  }
}

std::uint64_t unsigned_value(const YAML::Node& node, const std::string& key) {
  const std::string s = trim(scalar(node, key));
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    // Allow a plain float literal such as 1e4 if it is integral.
    try {
      const double d = parse_quantity(s, Dimension::none);
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    } catch (const ConfigError&) {
    }
    throw ConfigError("'" + key + "' must be a non-negative integer" + where(node));
  }
  return std::stoull(s);
}

void set_from_node(SimConfig& config, const Field& f, const YAML::Node& node) {
  if (f.real) {
    f.real(config) = quantity(node, f.path, f.dim);
  } else if (f.integer) {
    const auto v = unsigned_value(node, f.path);
    f.integer(config) = static_cast<int>(v);
  } else {
    try {
      f.set_choice(config, trim(scalar(node, f.path)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + where(node));
    }
  }
}

std::vector<double> parse_grid(const YAML::Node& node, const std::string& key, Dimension dim) {
  std::vector<double> out;
  if (node.IsSequence()) {
    for (const auto& v : node) out.push_back(quantity(v, key, dim));
  } else if (node.IsMap()) {
    std::optional<double> start, stop;
    std::optional<std::uint64_t> count;
    bool log_spacing = false;
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      if (k == "start") start = quantity(kv.second, key + ".start", dim);
      else if (k == "stop") stop = quantity(kv.second, key + ".stop", dim);
      else if (k == "count") count = unsigned_value(kv.second, key + ".count");
      else if (k == "spacing") {
        const std::string s = trim(scalar(kv.second, key + ".spacing"));
        if (s == "log") log_spacing = true;
        else if (s != "linear") throw ConfigError("'" + key + ".spacing' must be linear|log" + where(kv.second));
      } else {
        throw ConfigError("unknown key '" + key + "." + k + "'" + where(kv.first));
      }
    }
    if (!start || !stop || !count) {
      throw ConfigError("'" + key + "' needs start, stop and count" + where(node));
    }
    if (log_spacing && !(*start > 0.0 && *stop > 0.0)) {
      throw ConfigError("'" + key + "': log spacing needs positive bounds" + where(node));
    }
    for (std::uint64_t i = 0; i < *count; ++i) {
      const double u = *count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(*count - 1);
      out.push_back(log_spacing ? *start * std::pow(*stop / *start, u) : *start + u * (*stop - *start));
    }
  } else {
    throw ConfigError("'" + key + "' must be a list or a start/stop/count map" + where(node));
  }
  if (out.empty()) throw ConfigError("'" + key + "' is an empty grid" + where(node));
  return out;
}

Dimension sweep_dimension(const std::string& variable) {
  if (variable == "rf.bandwidth") return Dimension::frequency;
  const Field* f = find_field(variable);
  if (!f || !f->real) throw ConfigError("invalid sweep variable '" + variable + "'");
  return f->dim;
}

void apply_yaml(SimConfig& config, const YAML::Node& root) {
  if (root.IsNull()) return;
  if (!root.IsMap()) throw ConfigError("config root must be a mapping" + where(root));
  static const std::vector<std::string> sections = {"constants", "ensemble", "probe1", "probe2", "rf"};
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& value = kv.second;
    if (std::find(sections.begin(), sections.end(), key) != sections.end()) {
      if (!value.IsMap()) throw ConfigError("'" + key + "' must be a mapping" + where(value));
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        const std::string path = key + "." + name;
        if ((key == "probe1" || key == "probe2") && name == "a2_over_a1") {
          const double ratio = quantity(sub.second, path, Dimension::none);
          try {
            (key == "probe1" ? config.experiment.probe1 : config.experiment.probe2).xi_squared =
                xi_squared(ratio);
          } catch (const std::exception& e) {
            throw ConfigError("'" + path + "': " + e.what() + where(sub.second));
          }
          continue;
        }
        const Field* f = find_field(path);
        if (!f) throw ConfigError("unknown key '" + path + "'" + where(sub.first));
        set_from_node(config, *f, sub.second);
      }
    } else if (const Field* f = find_field(key)) {
      set_from_node(config, *f, value);
    } else if (key == "n_shots") {
      config.n_shots = unsigned_value(value, key);
    } else if (key == "master_seed") {
      config.master_seed = unsigned_value(value, key);
    } else if (key == "detection_bandwidth") {
      config.detection_bandwidth = quantity(value, key, Dimension::frequency);
    } else if (key == "output") {
      if (!value.IsMap()) throw ConfigError("'output' must be a mapping" + where(value));
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        if (name != "dir") throw ConfigError("unknown key 'output." + name + "'" + where(sub.first));
        config.output_dir = scalar(sub.second, "output.dir");
      }
    } else if (key == "sweep") {
      if (!value.IsMap()) throw ConfigError("'sweep' must be a mapping" + where(value));
      SweepSpec s;
      YAML::Node grid;
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        if (name == "variable") {
          s.variable = trim(scalar(sub.second, "sweep.variable"));
        } else if (name == "values" || name == "grid") {
          grid = sub.second;
        } else if (name == "method") {
          const std::string m = trim(scalar(sub.second, "sweep.method"));
          if (m == "monte_carlo") s.monte_carlo = true;
          else if (m == "analytic") s.monte_carlo = false;
          else throw ConfigError("'sweep.method' must be monte_carlo|analytic" + where(sub.second));
        } else {
          throw ConfigError("unknown key 'sweep." + name + "'" + where(sub.first));
        }
      }
      if (s.variable.empty()) throw ConfigError("'sweep.variable' is required" + where(value));
      Dimension dim;
      try {
        dim = sweep_dimension(s.variable);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + where(value));
      }
      if (!grid) throw ConfigError("'sweep.values' is required" + where(value));
      s.values = parse_grid(grid, "sweep.values", dim);
      config.sweep = s;
    } else if (key == "optimize") {
      if (!value.IsMap()) throw ConfigError("'optimize' must be a mapping" + where(value));
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        if (name == "gamma_grid") config.optimize.gamma_grid = parse_grid(sub.second, "optimize.gamma_grid", Dimension::rate);
        else if (name == "n_shots") config.optimize.n_shots = unsigned_value(sub.second, "optimize.n_shots");
        else throw ConfigError("unknown key 'optimize." + name + "'" + where(sub.first));
      }
    } else if (key == "spectrum") {
      if (!value.IsMap()) throw ConfigError("'spectrum' must be a mapping" + where(value));
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        if (name == "averages") config.spectrum.averages = unsigned_value(sub.second, "spectrum.averages");
        else throw ConfigError("unknown key 'spectrum." + name + "'" + where(sub.first));
      }
    } else {
      throw ConfigError("unknown key '" + key + "'" + where(kv.first));
    }
  }
}

}  // namespace

double parse_quantity(const std::string& text, Dimension dim) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty value");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) throw ConfigError("'" + s + "' is not a number");
  const std::string unit = trim(std::string(end));
  if (!std::isfinite(v)) throw ConfigError("'" + s + "' is not finite");
  if (unit.empty()) return v;
  const auto& table = unit_table(dim);
  const auto it = table.find(unit);
  if (it == table.end()) throw ConfigError("unit '" + unit + "' not valid here");
  return v * it->second;
}

SimConfig::SimConfig() {
  experiment.probe1.duration = 2e-3;
  experiment.probe1.mode_sign = ModeSign::rising;
  experiment.probe2.duration = 3e-3;
  experiment.probe2.mode_sign = ModeSign::falling;
  for (int i = 0; i < 19; ++i) optimize.gamma_grid.push_back(200.0 + 100.0 * i);
}

void SimConfig::validate() const {
  experiment.validate();
  if (n_shots < 1) throw ConfigError("n_shots must be >= 1");
  if (detection_bandwidth) {
    if (!(*detection_bandwidth > 0.0)) throw ConfigError("detection_bandwidth must be > 0");
    if (experiment.readout_path == ReadoutPath::time_domain) {
      check_nyquist(experiment.omega(), experiment.sample_rate(), *detection_bandwidth);
    }
  }
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep grid is empty");
    sweep_dimension(sweep->variable);
  }
  if (optimize.gamma_grid.empty()) throw ConfigError("optimize.gamma_grid is empty");
  for (double g : optimize.gamma_grid) {
    if (g < 0.0) throw ConfigError("optimize.gamma_grid values must be >= 0");
  }
  if (spectrum.averages < 1) throw ConfigError("spectrum.averages must be >= 1");
  build_sequence(experiment, protocol);
}

SimConfig load_config_string(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  SimConfig config;
  apply_yaml(config, root);
  config.validate();
  return config;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return load_config_string(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string canonical_json(const SimConfig& config) {
  nlohmann::json j;
  for (const auto& f : registry()) {
    SimConfig& c = const_cast<SimConfig&>(config);
    if (f.real) j[f.path] = f.real(c);
    else if (f.integer) j[f.path] = f.integer(c);
    else j[f.path] = f.get_choice(config);
  }
  j["n_shots"] = config.n_shots;
  j["detection_bandwidth"] =
      config.detection_bandwidth ? nlohmann::json(*config.detection_bandwidth) : nlohmann::json();
  if (config.sweep) {
    j["sweep.variable"] = config.sweep->variable;
    j["sweep.values"] = config.sweep->values;
    j["sweep.method"] = config.sweep->monte_carlo ? "monte_carlo" : "analytic";
  }
  j["optimize.gamma_grid"] = config.optimize.gamma_grid;
  j["optimize.n_shots"] = config.optimize.n_shots;
  j["spectrum.averages"] = config.spectrum.averages;
  return j.dump();
}

std::string config_hash(const SimConfig& config) {
  const std::string text = canonical_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_field(SimConfig& config, const std::string& path, double value) {
  if (path == "rf.bandwidth") {
    if (!(value > 0.0)) throw ConfigError("rf.bandwidth must be > 0");
    config.experiment.rf.duration = 0.88 / value;
    return;
  }
  const Field* f = find_field(path);
  if (!f || !(f->real || f->integer)) throw ConfigError("unknown numeric field '" + path + "'");
  if (f->real) f->real(config) = value;
  else f->integer(config) = static_cast<int>(value);
}

double get_field(const SimConfig& config, const std::string& path) {
  if (path == "rf.bandwidth") return config.experiment.rf.bandwidth();
  const Field* f = find_field(path);
  if (!f || !(f->real || f->integer)) throw ConfigError("unknown numeric field '" + path + "'");
  SimConfig& c = const_cast<SimConfig&>(config);
  return f->real ? f->real(c) : static_cast<double>(f->integer(c));
}

std::vector<std::string> numeric_field_paths() {
  std::vector<std::string> out;
  for (const auto& f : registry()) {
    if (f.real || f.integer) out.push_back(f.path);
  }
  out.push_back("rf.bandwidth");
  return out;
}

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::pn: return "pn";
    case ProtocolKind::entangled: return "entangled";
    case ProtocolKind::unentangled: return "unentangled";
    case ProtocolKind::calibration: return "calibration";
  }
  return "?";
}

ProtocolKind parse_protocol(const std::string& name) {
  if (name == "pn") return ProtocolKind::pn;
  if (name == "entangled") return ProtocolKind::entangled;
  if (name == "unentangled") return ProtocolKind::unentangled;
  if (name == "calibration") return ProtocolKind::calibration;
  throw ConfigError("unknown protocol '" + name + "'");
}

}  // namespace rfmag
