#include "nlif/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace nlif {

namespace {

enum class Type { real, real_or_auto, integer, boolean, text, reals, integers };

struct Key {
  const char* name;
  Type type;
  const char* fallback;  // nullptr: required
  std::vector<std::string> choices = {};
};

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = {
      {"experiment", Type::text, nullptr,
       {"run-micro", "run-macro", "run-hybrid", "tests-1-4", "bias-study", "threshold-sweep",
        "refractory-study", "mc-scaling", "diffusion-check", "benchmark"}},
      {"seed", Type::integer, nullptr},
      {"network.b", Type::real, nullptr},
      {"network.size", Type::integer, nullptr},
      {"network.v_fire", Type::real, "2"},
      {"network.v_reset", Type::real, "1"},
      {"network.v_leak", Type::real, "0"},
      {"network.v_min", Type::real, "-4"},
      {"network.sigma0", Type::real, "1.4142135623730951"},
      {"network.a", Type::real, "1"},
      {"grid.dv", Type::real_or_auto, nullptr},
      {"time.dt", Type::real, nullptr},
      {"time.horizon", Type::real, nullptr},
      {"init.mean", Type::real, "-1"},
      {"init.variance", Type::real, "0.5"},
      {"input.kind", Type::text, "constant", {"constant", "pulse", "periodic"}},
      {"input.value", Type::real, "0"},
      {"input.amplitude", Type::real, "0"},
      {"input.concentration", Type::real, "100"},
      {"input.center", Type::real, "0.5"},
      {"input.count", Type::integer, "1"},
      {"input.offset", Type::real, "0.25"},
      {"input.spacing", Type::real, "0.5"},
      {"micro.rule", Type::text, "refractory", {"refractory", "no_refractory"}},
      {"micro.strict", Type::boolean, "true"},
      {"macro.scheme", Type::text, "semi_implicit", {"semi_implicit", "explicit"}},
      {"macro.closure", Type::text, "implicit", {"implicit", "lagged"}},
      {"hybrid.rate_on", Type::real, "inf"},
      {"hybrid.rate_off", Type::real, "0"},
      {"hybrid.back", Type::integer, "10"},
      {"hybrid.max_switches", Type::integer, "100"},
      {"hybrid.rewind", Type::boolean, "false"},
      {"output.k_rec", Type::integer, "100"},
      {"output.snapshots", Type::reals, ""},
      {"study.sizes", Type::integers, ""},
      {"study.replicas", Type::integer, "20"},
      {"threshold.level", Type::real, "15"},
      {"threshold.step", Type::real, "0.5"},
      {"threshold.max", Type::real, "40"},
      {"threshold.subdivisions", Type::integer, "4"},
      {"threshold.b_values", Type::reals, ""},
      {"mc.order", Type::integer, "1"},
      {"diffusion.rate", Type::real, "5"},
      {"diffusion.kick", Type::real, "1e-4"},
      {"benchmark.name", Type::text, "benchmark"},
  };
  return keys;
}

constexpr const char* kFullPrefix = "full.";

const Key* find_key(const std::string& name) {
  std::string base = name;
  if (base.rfind(kFullPrefix, 0) == 0) base = base.substr(5);
  for (const auto& k : schema()) {
    if (base == k.name) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_real(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    // Allow simple fractions such as 1/20.
    const auto slash = s.find('/');
    if (slash == std::string::npos) return std::nullopt;
    const auto num = parse_real(trim(s.substr(0, slash)));
    const auto den = parse_real(trim(s.substr(slash + 1)));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }
  return v;
}

// Decimal integer or base^exponent, e.g. 20^4.
std::optional<std::int64_t> parse_integer(const std::string& s) {
  const auto caret = s.find('^');
  if (caret != std::string::npos) {
    const auto base = parse_integer(trim(s.substr(0, caret)));
    const auto exp = parse_integer(trim(s.substr(caret + 1)));
    if (!base || !exp || *exp < 0 || *exp > 62) return std::nullopt;
    std::int64_t v = 1;
    for (std::int64_t i = 0; i < *exp; ++i) {
      if (*base != 0 && std::abs(v) > std::numeric_limits<std::int64_t>::max() / std::abs(*base)) {
        return std::nullopt;
      }
      v *= *base;
    }
    return v;
  }
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

std::string normalize(const std::string& name, const Key& key, const std::string& value) {
  auto fail = [&](const char* what) -> std::string {
    throw ConfigError(name + ": expected " + what + ", got '" + value + "'");
  };
  switch (key.type) {
    case Type::real: {
      const auto v = parse_real(value);
      if (!v) fail("a number");
      return format_real(*v);
    }
    case Type::real_or_auto: {
      if (value == "auto") return value;
      const auto v = parse_real(value);
      if (!v) fail("a number or 'auto'");
      return format_real(*v);
    }
    case Type::integer: {
      const auto v = parse_integer(value);
      if (!v) fail("an integer");
      return std::to_string(*v);
    }
    case Type::boolean:
      if (value == "true" || value == "1" || value == "yes") return "true";
      if (value == "false" || value == "0" || value == "no") return "false";
      fail("true or false");
      break;
    case Type::text:
      if (!key.choices.empty() &&
          std::find(key.choices.begin(), key.choices.end(), value) == key.choices.end()) {
        std::string list;
        for (const auto& c : key.choices) list += (list.empty() ? "" : ", ") + c;
        throw ConfigError(name + ": '" + value + "' is not one of " + list);
      }
      return value;
    case Type::reals: {
      std::string out;
      for (const auto& item : split_list(value)) {
        const auto v = parse_real(item);
        if (!v) fail("a comma-separated list of numbers");
        out += (out.empty() ? "" : ",") + format_real(*v);
      }
      return out;
    }
    case Type::integers: {
      std::string out;
      for (const auto& item : split_list(value)) {
        const auto v = parse_integer(item);
        if (!v) fail("a comma-separated list of integers");
        out += (out.empty() ? "" : ",") + std::to_string(*v);
      }
      return out;
    }
  }
  return value;
}

struct Reader {
  const Settings& s;

  const std::string& text(const std::string& key) const { return s.at(key); }
  double real(const std::string& key) const { return *parse_real(s.at(key)); }
  std::int64_t integer(const std::string& key) const { return *parse_integer(s.at(key)); }
  int small(const std::string& key) const {
    const auto v = integer(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(key + ": value out of range");
    }
    return static_cast<int>(v);
  }
  bool boolean(const std::string& key) const { return s.at(key) == "true"; }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(s.at(key))) out.push_back(*parse_real(item));
    return out;
  }
  std::vector<std::int64_t> integers(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(s.at(key))) out.push_back(*parse_integer(item));
    return out;
  }
};

Experiment experiment_from(const std::string& s) {
  static const std::pair<const char*, Experiment> table[] = {
      {"run-micro", Experiment::run_micro},
      {"run-macro", Experiment::run_macro},
      {"run-hybrid", Experiment::run_hybrid},
      {"tests-1-4", Experiment::tests_1_4},
      {"bias-study", Experiment::bias_study},
      {"threshold-sweep", Experiment::threshold_sweep},
      {"refractory-study", Experiment::refractory_study},
      {"mc-scaling", Experiment::mc_scaling},
      {"diffusion-check", Experiment::diffusion_check},
      {"benchmark", Experiment::benchmark},
  };
  for (const auto& [name, e] : table) {
    if (s == name) return e;
  }
  throw ConfigError("experiment: unknown kind '" + s + "'");
}

// Settings entries are `key = value` lines; a preset is written the same way.
Settings preset_text(const char* name, const char* text) {
  return parse_settings(text, std::string("preset ") + name);
}

const char* const kSinglePulse = R"(
experiment = run-hybrid
seed = 1
network.size = 20^4
grid.dv = 1/20
time.dt = 1e-4
time.horizon = 1
input.kind = pulse
input.concentration = 100
input.center = 0.5
micro.rule = refractory
hybrid.rate_on = 10
hybrid.rate_off = 10
hybrid.back = 10
output.k_rec = 10
)";

const char* const kPeriodic = R"(
experiment = run-hybrid
seed = 1
network.b = 0.8
network.size = 20^4
grid.dv = 1/20
time.dt = 1e-4
time.horizon = 3
input.kind = periodic
input.concentration = 500
input.count = 6
input.offset = 0.25
input.spacing = 0.5
micro.rule = refractory
hybrid.rate_on = 10
hybrid.rate_off = 10
hybrid.back = 10
output.k_rec = 10
)";

const char* const kTests = R"(
experiment = tests-1-4
seed = 1
network.size = 10^4
full.network.size = 20^4
grid.dv = auto
time.dt = 5e-5
time.horizon = 3
micro.rule = no_refractory
output.k_rec = 100
study.replicas = 2
)";

const std::map<std::string, Settings>& presets() {
  static const std::map<std::string, Settings> table = [] {
    std::map<std::string, Settings> t;
    t["tests-1-4-b1"] = merge(preset_text("tests-1-4-b1", kTests), {{"network.b", "1"}});
    t["tests-1-4-bm1"] = merge(preset_text("tests-1-4-bm1", kTests), {{"network.b", "-1"}});
    t["bias-study-b1"] = merge(preset_text("bias-study-b1", kTests),
                               preset_text("bias-study-b1", R"(
experiment = bias-study
network.b = 1
study.sizes = 5^4, 10^4
full.study.sizes = 5^4, 10^4, 20^4
study.replicas = 20
full.study.replicas = 50
)"));
    t["single-pulse-b1"] = merge(preset_text("single-pulse-b1", kSinglePulse),
                                 {{"network.b", "1"}, {"input.amplitude", "16"}});
    t["single-pulse-b05"] = merge(preset_text("single-pulse-b05", kSinglePulse),
                                  {{"network.b", "0.5"}, {"input.amplitude", "24"}});
    t["periodic-b08-j10"] = merge(preset_text("periodic-b08-j10", kPeriodic),
                                  {{"input.amplitude", "10"}});
    t["periodic-b08-j20"] = merge(preset_text("periodic-b08-j20", kPeriodic),
                                  {{"input.amplitude", "20"}});
    t["threshold-sweep"] = preset_text("threshold-sweep", R"(
experiment = threshold-sweep
seed = 1
network.b = 1
network.size = 10^4
grid.dv = auto
time.dt = 1e-4
time.horizon = 1
input.kind = pulse
input.concentration = 100
input.center = 0.2
micro.rule = refractory
threshold.level = 15
threshold.step = 0.5
threshold.subdivisions = 4
threshold.b_values = 0.5, 1
full.threshold.b_values = 0, 0.2, 0.4, 0.6, 0.8, 1, 1.2
output.k_rec = 10
)");
    t["refractory-study"] = preset_text("refractory-study", R"(
experiment = refractory-study
seed = 1
network.b = 1.2
network.size = 10^4
grid.dv = auto
time.dt = 1e-4
time.horizon = 1
input.kind = pulse
input.amplitude = 20
input.concentration = 100
input.center = 0.2
study.replicas = 4
full.study.replicas = 20
output.k_rec = 100
)");
    t["mc-scaling"] = preset_text("mc-scaling", R"(
experiment = mc-scaling
seed = 1
network.b = 0
network.size = 10^4
grid.dv = 1/20
time.dt = 1e-4
time.horizon = 1
study.sizes = 10^3, 10^4, 10^5
study.replicas = 200
mc.order = 1
)");
    t["diffusion-check"] = preset_text("diffusion-check", R"(
experiment = diffusion-check
seed = 1
network.b = 0
network.size = 10^4
grid.dv = 1/20
time.dt = 1e-4
time.horizon = 1
study.replicas = 200
diffusion.rate = 5
diffusion.kick = 1e-4
)");
    t["benchmark-single-pulse"] = merge(t["single-pulse-b1"], preset_text("benchmark-single-pulse", R"(
experiment = benchmark
benchmark.name = single-pulse-b1
grid.dv = auto
study.sizes = 10^4, 15^4, 20^4
full.study.sizes = 10^4, 15^4, 20^4, 25^4
)"));
    t["benchmark-periodic"] = merge(t["periodic-b08-j10"], preset_text("benchmark-periodic", R"(
experiment = benchmark
benchmark.name = periodic-b08-j10
grid.dv = auto
study.sizes = 10^4, 15^4, 20^4
full.study.sizes = 10^4, 15^4, 20^4, 25^4
)"));
    return t;
  }();
  return table;
}

InputCurrent build_input(const Reader& r) {
  const auto& kind = r.text("input.kind");
  if (kind == "constant") return InputCurrent::constant(r.real("input.value"));
  GaussianPulse p{r.real("input.amplitude"), r.real("input.concentration"), r.real("input.center")};
  if (!(p.concentration > 0.0)) throw ConfigError("input.concentration: must be positive");
  if (kind == "pulse") return InputCurrent::pulse(p);
  const int count = r.small("input.count");
  if (count < 1) throw ConfigError("input.count: must be >= 1");
  return InputCurrent::periodic(p.amplitude, p.concentration, count, r.real("input.offset"),
                                r.real("input.spacing"));
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::run_micro: return "run-micro";
    case Experiment::run_macro: return "run-macro";
    case Experiment::run_hybrid: return "run-hybrid";
    case Experiment::tests_1_4: return "tests-1-4";
    case Experiment::bias_study: return "bias-study";
    case Experiment::threshold_sweep: return "threshold-sweep";
    case Experiment::refractory_study: return "refractory-study";
    case Experiment::mc_scaling: return "mc-scaling";
    case Experiment::diffusion_check: return "diffusion-check";
    case Experiment::benchmark: return "benchmark";
  }
  return "?";
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (find_key(key) == nullptr) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!out.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str(), path);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : presets()) out.push_back(name);
  return out;
}

Settings preset(const std::string& name) {
  const auto& table = presets();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string list;
    for (const auto& [n, _] : table) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + list + ")");
  }
  return it->second;
}

Settings merge(const Settings& base, const Settings& over) {
  Settings out = base;
  for (const auto& [k, v] : over) out[k] = v;
  return out;
}

RunConfig build_config(const Settings& raw, bool full_fidelity) {
  Settings s;
  for (const auto& [k, v] : raw) {
    const Key* key = find_key(k);
    if (key == nullptr) throw ConfigError("unknown key '" + k + "'");
    if (k.rfind(kFullPrefix, 0) == 0) continue;
    s[k] = v;
  }
  if (full_fidelity) {
    for (const auto& [k, v] : raw) {
      if (k.rfind(kFullPrefix, 0) == 0) s[k.substr(5)] = v;
    }
  }
  std::vector<std::string> missing;
  for (const auto& key : schema()) {
    if (s.count(key.name) == 0) {
      if (key.fallback == nullptr) {
        missing.emplace_back(key.name);
      } else {
        s[key.name] = key.fallback;
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing required keys: " + list);
  }
  for (auto& [k, v] : s) v = normalize(k, *find_key(k), v);

  const Reader r{s};
  RunConfig cfg;
  cfg.experiment = experiment_from(r.text("experiment"));
  const auto seed = r.integer("seed");
  if (seed < 0) throw ConfigError("seed: must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);

  auto& h = cfg.hybrid;
  auto& p = h.params;
  p.b = r.real("network.b");
  p.size = r.integer("network.size");
  p.kick = p.size > 0 ? p.b / static_cast<double>(p.size) : 0.0;
  p.v_fire = r.real("network.v_fire");
  p.v_reset = r.real("network.v_reset");
  p.v_leak = r.real("network.v_leak");
  p.v_min = r.real("network.v_min");
  p.sigma0 = r.real("network.sigma0");
  p.a = r.real("network.a");
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }

  double dv = 0.0;
  if (r.text("grid.dv") == "auto") {
    dv = mesh_for_network(p);
  } else {
    dv = r.real("grid.dv");
  }
  try {
    h.grid = VoltageGrid::make(p.v_min, p.v_fire, p.v_reset, dv);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("grid.dv: ") + e.what());
  }

  h.dt = r.real("time.dt");
  if (!(h.dt > 0.0)) throw ConfigError("time.dt: must be positive");
  const double horizon = r.real("time.horizon");
  if (!(horizon > 0.0)) throw ConfigError("time.horizon: must be positive");
  const double steps = std::round(horizon / h.dt);
  if (std::abs(steps * h.dt - horizon) > 1e-9 * horizon) {
    throw ConfigError("time.horizon: not an integer number of time.dt steps");
  }
  h.steps = static_cast<std::int64_t>(steps);

  h.init.mean = r.real("init.mean");
  h.init.variance = r.real("init.variance");
  if (!(h.init.variance > 0.0)) throw ConfigError("init.variance: must be positive");
  h.input = build_input(r);

  h.micro.rule = r.text("micro.rule") == "refractory" ? UpdateRule::refractory : UpdateRule::no_refractory;
  h.micro.strict = r.boolean("micro.strict");
  h.macro.scheme = r.text("macro.scheme") == "explicit" ? MacroScheme::explicit_euler
                                                        : MacroScheme::semi_implicit;
  h.macro.closure = r.text("macro.closure") == "lagged" ? ShiftClosure::lagged : ShiftClosure::implicit;
  h.rate_on = r.real("hybrid.rate_on");
  h.rate_off = r.real("hybrid.rate_off");
  h.back = r.small("hybrid.back");
  h.max_switches = r.small("hybrid.max_switches");
  h.rewind_on_switch_down = r.boolean("hybrid.rewind");
  try {
    h.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("hybrid: ") + e.what());
  }

  cfg.k_rec = r.integer("output.k_rec");
  if (cfg.k_rec < 1) throw ConfigError("output.k_rec: must be >= 1");
  cfg.snapshots = r.reals("output.snapshots");
  for (const double t : cfg.snapshots) {
    if (t < 0.0 || t > horizon) throw ConfigError("output.snapshots: times must lie in [0, horizon]");
    h.snapshot_steps.push_back(std::llround(t / h.dt));
  }
  cfg.sizes = r.integers("study.sizes");
  for (const auto L : cfg.sizes) {
    if (L < 1) throw ConfigError("study.sizes: sizes must be >= 1");
  }
  cfg.replicas = r.small("study.replicas");
  if (cfg.replicas < 1) throw ConfigError("study.replicas: must be >= 1");

  cfg.search.threshold = r.real("threshold.level");
  cfg.search.lattice_step = r.real("threshold.step");
  cfg.search.lattice_max = r.real("threshold.max");
  cfg.search.subdivisions = r.small("threshold.subdivisions");
  cfg.search.k_rec = cfg.k_rec;
  cfg.sweep_b = r.reals("threshold.b_values");
  cfg.observable_order = r.small("mc.order");
  if (cfg.observable_order < 1 || cfg.observable_order > 3) throw ConfigError("mc.order: must be 1, 2 or 3");
  cfg.diffusion_rate = r.real("diffusion.rate");
  cfg.diffusion_kick = r.real("diffusion.kick");
  cfg.benchmark_name = r.text("benchmark.name");

  switch (cfg.experiment) {
    case Experiment::bias_study:
    case Experiment::benchmark:
      if (cfg.sizes.empty()) throw ConfigError("study.sizes: required for " + r.text("experiment"));
      break;
    case Experiment::mc_scaling:
      if (cfg.sizes.size() < 3) throw ConfigError("study.sizes: mc-scaling needs at least three sizes");
      break;
    case Experiment::threshold_sweep:
      if (cfg.sweep_b.empty()) throw ConfigError("threshold.b_values: required for threshold-sweep");
      if (!std::holds_alternative<GaussianPulse>(h.input.kind())) {
        throw ConfigError("input.kind: threshold-sweep needs a single pulse");
      }
      break;
    default:
      break;
  }
  if ((cfg.experiment == Experiment::bias_study || cfg.experiment == Experiment::tests_1_4) &&
      cfg.replicas < 2) {
    throw ConfigError("study.replicas: bias estimates need at least two replicas");
  }

  cfg.settings = std::move(s);
  cfg.fingerprint = fingerprint(cfg.settings);
  return cfg;
}

std::string canonical_text(const Settings& settings) {
  std::string out;
  for (const auto& [k, v] : settings) out += k + "=" + v + "\n";
  return out;
}

std::string fingerprint(const Settings& settings) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical_text(settings)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nlif
