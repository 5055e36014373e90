#include "elr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace elr {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  double out;
  try {
    out = std::stod(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  if (consumed != value.size()) throw ConfigError("config: key '" + key + "' has trailing junk: '" + value + "'");
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  std::int64_t out;
  try {
    out = std::stoll(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
  if (consumed != value.size()) throw ConfigError("config: key '" + key + "' has trailing junk: '" + value + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  const std::int64_t v = parse_int(key, value);
  if (v < 0) throw ConfigError("config: key '" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

NoisyDataset DataSpec::build() const {
  const CleanDataset clean = gen_mixture(n, p, classes, sigma, data_seed);
  switch (noise) {
    case NoiseKind::None:
      return without_noise(clean);
    case NoiseKind::Symmetric:
      return inject_symmetric_noise(clean, delta, data_seed, exclude_true_class);
    case NoiseKind::Asymmetric:
      return inject_asymmetric_noise(clean, delta, data_seed);
  }
  throw std::logic_error("unknown noise kind");
}

void ExperimentConfig::validate() const {
  if (data.n < 1) throw ConfigError("config: n must be >= 1");
  if (data.p < 1) throw ConfigError("config: p must be >= 1");
  if (data.classes < 2) throw ConfigError("config: classes must be >= 2");
  if (data.sigma < 0.0) throw ConfigError("config: sigma must be >= 0");
  if (data.delta < 0.0 || data.delta > 1.0) throw ConfigError("config: delta must be in [0, 1]");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    if (kv.count(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }

  static const std::set<std::string> known = {
      "mode",        "arch",         "hidden",        "init_radius",   "eta",
      "epochs",      "batch_size",   "lambda",        "beta",          "gamma",
      "alpha_mixup", "mixup",        "ramp_steps",    "refine_labels", "freeze_targets",
      "tie_networks", "seed",        "metric_every",  "n",             "p",
      "classes",     "sigma",        "delta",         "noise",         "exclude_true_class",
      "data_seed"};
  for (const auto& [key, value] : kv) {
    (void)value;
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  for (const char* required : {"mode", "n", "p"}) {
    if (!kv.count(required)) throw ConfigError("config: missing required key '" + std::string(required) + "'");
  }

  ExperimentConfig cfg;
  auto take = [&kv](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  try {
    cfg.train.mode = train_mode_from_string(kv.at("mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.data.n = parse_int("n", kv.at("n"));
  cfg.data.p = parse_int("p", kv.at("p"));

  if (const auto* v = take("classes")) cfg.data.classes = static_cast<int>(parse_int("classes", *v));
  if (const auto* v = take("sigma")) cfg.data.sigma = parse_double("sigma", *v);
  if (const auto* v = take("delta")) cfg.data.delta = parse_double("delta", *v);
  if (const auto* v = take("noise")) {
    if (*v == "none") cfg.data.noise = NoiseKind::None;
    else if (*v == "symmetric") cfg.data.noise = NoiseKind::Symmetric;
    else if (*v == "asymmetric") cfg.data.noise = NoiseKind::Asymmetric;
    else throw ConfigError("config: noise must be none | symmetric | asymmetric, got '" + *v + "'");
  }
  if (const auto* v = take("exclude_true_class")) cfg.data.exclude_true_class = parse_bool("exclude_true_class", *v);
  if (const auto* v = take("data_seed")) cfg.data.data_seed = parse_uint("data_seed", *v);

  if (const auto* v = take("arch")) {
    if (*v == "linear") cfg.train.arch = ArchKind::Linear;
    else if (*v == "mlp") cfg.train.arch = ArchKind::Mlp;
    else throw ConfigError("config: arch must be linear | mlp, got '" + *v + "'");
  }
  if (const auto* v = take("hidden")) cfg.train.hidden = parse_int("hidden", *v);
  if (const auto* v = take("init_radius")) cfg.train.init_radius = parse_double("init_radius", *v);
  if (const auto* v = take("eta")) cfg.train.eta = parse_double("eta", *v);
  if (const auto* v = take("epochs")) cfg.train.epochs = static_cast<int>(parse_int("epochs", *v));
  if (const auto* v = take("batch_size")) {
    if (*v == "full") cfg.train.batch_size = 0;
    else cfg.train.batch_size = parse_int("batch_size", *v);
  }
  if (const auto* v = take("lambda")) cfg.train.lambda = parse_double("lambda", *v);
  if (const auto* v = take("beta")) cfg.train.beta = parse_double("beta", *v);
  if (const auto* v = take("gamma")) cfg.train.gamma = parse_double("gamma", *v);
  if (const auto* v = take("alpha_mixup")) cfg.train.alpha_mixup = parse_double("alpha_mixup", *v);
  if (const auto* v = take("mixup")) cfg.train.mixup = parse_bool("mixup", *v);
  if (const auto* v = take("ramp_steps")) cfg.train.ramp_steps = parse_int("ramp_steps", *v);
  if (const auto* v = take("refine_labels")) cfg.train.refine_labels = parse_bool("refine_labels", *v);
  if (const auto* v = take("freeze_targets")) cfg.train.freeze_targets_uniform = parse_bool("freeze_targets", *v);
  if (const auto* v = take("tie_networks")) cfg.train.tie_networks = parse_bool("tie_networks", *v);
  if (const auto* v = take("seed")) cfg.train.seed = parse_uint("seed", *v);
  if (const auto* v = take("metric_every")) cfg.train.metric_every = static_cast<int>(parse_int("metric_every", *v));

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(is);
}

namespace {

// Shortest decimal form that parses back to the same double.
std::string roundtrip_double(double v) {
  char buf[64];
  for (int precision : {6, 9, 12, 15, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "mode = " << to_string(config.train.mode) << '\n';
  os << "n = " << config.data.n << '\n';
  os << "p = " << config.data.p << '\n';
  os << "classes = " << config.data.classes << '\n';
  os << "sigma = " << roundtrip_double(config.data.sigma) << '\n';
  os << "delta = " << roundtrip_double(config.data.delta) << '\n';
  os << "noise = "
     << (config.data.noise == NoiseKind::None ? "none"
                                              : config.data.noise == NoiseKind::Symmetric ? "symmetric" : "asymmetric")
     << '\n';
  os << "exclude_true_class = " << (config.data.exclude_true_class ? "true" : "false") << '\n';
  os << "data_seed = " << config.data.data_seed << '\n';
  os << "arch = " << (config.train.arch == ArchKind::Linear ? "linear" : "mlp") << '\n';
  os << "hidden = " << config.train.hidden << '\n';
  os << "init_radius = " << roundtrip_double(config.train.init_radius) << '\n';
  os << "eta = " << roundtrip_double(config.train.eta) << '\n';
  os << "epochs = " << config.train.epochs << '\n';
  if (config.train.batch_size == 0) os << "batch_size = full\n";
  else os << "batch_size = " << config.train.batch_size << '\n';
  os << "lambda = " << roundtrip_double(config.train.lambda) << '\n';
  os << "beta = " << roundtrip_double(config.train.beta) << '\n';
  os << "gamma = " << roundtrip_double(config.train.gamma) << '\n';
  os << "alpha_mixup = " << roundtrip_double(config.train.alpha_mixup) << '\n';
  os << "mixup = " << (config.train.mixup ? "true" : "false") << '\n';
  os << "ramp_steps = " << config.train.ramp_steps << '\n';
  os << "refine_labels = " << (config.train.refine_labels ? "true" : "false") << '\n';
  os << "freeze_targets = " << (config.train.freeze_targets_uniform ? "true" : "false") << '\n';
  os << "tie_networks = " << (config.train.tie_networks ? "true" : "false") << '\n';
  os << "seed = " << config.train.seed << '\n';
  os << "metric_every = " << config.train.metric_every << '\n';
  return os.str();
}

}  // namespace elr
