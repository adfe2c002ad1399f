#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gafocus/harness.hpp"

namespace gafocus {

namespace {

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config key '" + key + "': malformed value '" + value + "'");
}

template <class T>
T parse_uint(const std::string& key, const std::string& value) {
  std::string_view v = value;
  int base = 10;
  if (v.starts_with("0x") || v.starts_with("0X")) {
    v.remove_prefix(2);
    base = 16;
  }
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, value);
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::exponential:
      return "exponential";
    case ScheduleKind::linear_clamped:
      return "linear";
    case ScheduleKind::constant:
      break;
  }
  return "constant";
}

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "n_outputs") n_outputs = parse_uint<std::size_t>(key, value);
  else if (key == "n_modes") n_modes = parse_uint<std::size_t>(key, value);
  else if (key == "target_channel") target_channel = parse_uint<std::size_t>(key, value);
  else if (key == "seed") seed = parse_uint<std::uint64_t>(key, value);
  else if (key == "baseline_samples") baseline_samples = parse_uint<std::size_t>(key, value);
  else if (key == "noise_sigma") noise_sigma = parse_double(key, value);
  else if (key == "noise_rel") noise_rel = parse_double(key, value);
  else if (key == "adc_bits") adc_bits = parse_uint<unsigned>(key, value);
  else if (key == "adc_full_scale") adc_full_scale = parse_double(key, value);
  else if (key == "samples_per_measurement") samples_per_measurement = parse_uint<unsigned>(key, value);
  else if (key == "gain") {
    if (value == "auto") gain.reset();
    else gain = parse_double(key, value);
  } else if (key == "gain_headroom") gain_headroom = parse_double(key, value);
  else if (key == "gain_baseline_fraction") {
    if (value == "none") gain_baseline_fraction.reset();
    else gain_baseline_fraction = parse_double(key, value);
  } else if (key == "population") population = parse_uint<std::size_t>(key, value);
  else if (key == "offspring") offspring = parse_uint<std::size_t>(key, value);
  else if (key == "replacement") {
    if (value == "replace-worst" || value == "replace_worst") replacement = Replacement::replace_worst;
    else if (value == "elitist-merge" || value == "elitist_merge") replacement = Replacement::elitist_merge;
    else bad_value(key, value);
  } else if (key == "mutation") {
    if (value == "redraw") mutation = MutationStyle::redraw;
    else if (value == "flip") mutation = MutationStyle::flip;
    else bad_value(key, value);
  } else if (key == "schedule") {
    if (value == "exponential") schedule = ScheduleKind::exponential;
    else if (value == "linear") schedule = ScheduleKind::linear_clamped;
    else if (value == "constant") schedule = ScheduleKind::constant;
    else bad_value(key, value);
  } else if (key == "r0") r0 = parse_double(key, value);
  else if (key == "r_end") r_end = parse_double(key, value);
  else if (key == "decay") decay = parse_double(key, value);
  else if (key == "kappa_start") kappa_start = parse_int(key, value);
  else if (key == "tau") tau = parse_int(key, value);
  else if (key == "epsilon") epsilon = parse_int(key, value);
  else if (key == "iterations") iterations = parse_uint<std::uint64_t>(key, value);
  else if (key == "stop_at") {
    if (value == "none") stop_at.reset();
    else stop_at = parse_uint<std::uint64_t>(key, value);
  } else if (key == "workers") workers = parse_uint<unsigned>(key, value);
  else if (key == "profile") profile = value;
  else if (key == "decays") {
    decays.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) decays.push_back(parse_double(key, trim(item)));
  } else if (key == "repeats") repeats = parse_uint<std::size_t>(key, value);
  else if (key == "repeat_iterations") repeat_iterations = parse_uint<std::uint64_t>(key, value);
  else if (key == "alpha") alpha = parse_double(key, value);
  else if (key == "jobs") jobs = parse_uint<unsigned>(key, value);
  else if (key == "svg") svg = parse_bool(key, value);
  else if (key == "out") out = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

MutationSchedule ExperimentConfig::make_schedule(std::optional<double> decay_override) const {
  switch (schedule) {
    case ScheduleKind::exponential:
      return MutationSchedule::exponential(r0, r_end, decay_override.value_or(decay));
    case ScheduleKind::linear_clamped:
      return MutationSchedule::linear_clamped(kappa_start, tau, epsilon, r_end);
    case ScheduleKind::constant:
      break;
  }
  return MutationSchedule::constant(r0);
}

GaConfig ExperimentConfig::ga_config(std::uint64_t ga_seed,
                                     std::optional<double> decay_override) const {
  GaConfig g;
  g.population_size = population;
  g.offspring_per_iteration = offspring;
  g.n_modes = n_modes;
  g.schedule = make_schedule(decay_override);
  g.replacement = replacement;
  g.mutation = mutation;
  g.max_iterations = iterations;
  g.seed = ga_seed;
  g.stop_at = stop_at;
  g.workers = workers;
  return g;
}

HardwareProfile ExperimentConfig::hardware_profile() const { return resolve_profile(profile); }

void ExperimentConfig::validate() const {
  try {
    if (n_outputs < 1 || n_modes < 1) throw ConfigError("n_outputs and n_modes must be >= 1");
    if (target_channel >= n_outputs) throw ConfigError("target_channel must be < n_outputs");
    if (baseline_samples < 1) throw ConfigError("baseline_samples must be >= 1");
    if (noise_sigma < 0.0 || noise_rel < 0.0) throw ConfigError("noise levels must be >= 0");
    if (noise_sigma > 0.0 && noise_rel > 0.0) {
      throw ConfigError("set at most one of noise_sigma and noise_rel");
    }
    if (gain && !(*gain > 0.0)) throw ConfigError("gain must be > 0");
    if (!(gain_headroom > 0.0 && gain_headroom <= 1.0)) {
      throw ConfigError("gain_headroom must be in (0, 1]");
    }
    if (gain_baseline_fraction && !(*gain_baseline_fraction > 0.0 && *gain_baseline_fraction <= 1.0)) {
      throw ConfigError("gain_baseline_fraction must be in (0, 1]");
    }
    DetectorModel det;
    det.noise_sigma = noise_sigma;
    det.adc_bits = adc_bits;
    det.adc_full_scale = adc_full_scale;
    det.samples_per_measurement = samples_per_measurement;
    det.validate();
    ga_config(1).validate();
    for (double d : decays) {
      if (!(d > 0.0)) throw ConfigError("decays must all be > 0");
    }
    if (decays.empty()) throw ConfigError("decays must be nonempty");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (repeat_iterations < 1) throw ConfigError("repeat_iterations must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    hardware_profile();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      cfg.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  return parse_config(in);
}

std::string write_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto d = [](double v) { return format_double(v); };
  o << "n_outputs=" << c.n_outputs << '\n'
    << "n_modes=" << c.n_modes << '\n'
    << "target_channel=" << c.target_channel << '\n'
    << "seed=" << c.seed << '\n'
    << "baseline_samples=" << c.baseline_samples << '\n'
    << "noise_sigma=" << d(c.noise_sigma) << '\n'
    << "noise_rel=" << d(c.noise_rel) << '\n'
    << "adc_bits=" << c.adc_bits << '\n'
    << "adc_full_scale=" << d(c.adc_full_scale) << '\n'
    << "samples_per_measurement=" << c.samples_per_measurement << '\n'
    << "gain=" << (c.gain ? d(*c.gain) : "auto") << '\n'
    << "gain_headroom=" << d(c.gain_headroom) << '\n'
    << "gain_baseline_fraction="
    << (c.gain_baseline_fraction ? d(*c.gain_baseline_fraction) : "none") << '\n'
    << "population=" << c.population << '\n'
    << "offspring=" << c.offspring << '\n'
    << "replacement="
    << (c.replacement == Replacement::replace_worst ? "replace-worst" : "elitist-merge") << '\n'
    << "mutation=" << (c.mutation == MutationStyle::redraw ? "redraw" : "flip") << '\n'
    << "schedule=" << schedule_name(c.schedule) << '\n'
    << "r0=" << d(c.r0) << '\n'
    << "r_end=" << d(c.r_end) << '\n'
    << "decay=" << d(c.decay) << '\n'
    << "kappa_start=" << c.kappa_start << '\n'
    << "tau=" << c.tau << '\n'
    << "epsilon=" << c.epsilon << '\n'
    << "iterations=" << c.iterations << '\n'
    << "stop_at=" << (c.stop_at ? std::to_string(*c.stop_at) : "none") << '\n'
    << "workers=" << c.workers << '\n'
    << "profile=" << c.profile << '\n'
    << "decays=";
  for (std::size_t i = 0; i < c.decays.size(); ++i) o << (i ? "," : "") << d(c.decays[i]);
  o << '\n'
    << "repeats=" << c.repeats << '\n'
    << "repeat_iterations=" << c.repeat_iterations << '\n'
    << "alpha=" << d(c.alpha) << '\n'
    << "jobs=" << c.jobs << '\n'
    << "svg=" << (c.svg ? "true" : "false") << '\n'
    << "out=" << c.out << '\n';
  return o.str();
}

HardwareProfile resolve_profile(const std::string& name_or_path) {
  for (const auto& n : builtin_profile_names()) {
    if (n == name_or_path) return builtin_profile(n);
  }
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec)) {
    std::ifstream in(name_or_path);
    if (!in) throw IoError("cannot read profile '" + name_or_path + "'");
    try {
      return read_profile(in);
    } catch (const std::exception& e) {
      throw ConfigError("profile '" + name_or_path + "': " + e.what());
    }
  }
  try {
    builtin_profile(name_or_path);
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown hardware profile '" + name_or_path + "'");
}

}  // namespace gafocus
