#include "gafocus/timing.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <type_traits>

namespace gafocus {

void HardwareProfile::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
  };
  if (flat_iteration_ms) {
    positive(*flat_iteration_ms, "flat_iteration_ms");
    positive(init_us, "init_us");
    return;
  }
  positive(core_clock_ns, "core_clock_ns");
  positive(chunk_gen_ns, "chunk_gen_ns");
  positive(adc_accumulate_us, "adc_accumulate_us");
  positive(ranking_delay_us, "ranking_delay_us");
  positive(init_us, "init_us");
  if (offspring_mask_us) positive(*offspring_mask_us, "offspring_mask_us");
  if (offspring_total_us) positive(*offspring_total_us, "offspring_total_us");
  if (chunk_bits == 0 || mask_pixels == 0 || mask_pixels % chunk_bits != 0) {
    throw std::invalid_argument("chunk_bits must divide mask_pixels");
  }
  if (population == 0) throw std::invalid_argument("population must be >= 1");
}

std::vector<std::string> builtin_profile_names() {
  return {"virtex5", "ultrascale-plus", "pc-matlab"};
}

HardwareProfile builtin_profile(const std::string& name) {
  HardwareProfile p;
  p.name = name;
  if (name == "virtex5") {
    // DDR-backed parent reads: 80 ns per 128-bit chunk, 420 us measured per mask.
    p.chunk_gen_ns = 80.0;
    p.offspring_mask_us = 420.0;
    p.offspring_total_us = 500.0;
    return p;
  }
  if (name == "ultrascale-plus") {
    // Parents held on chip: 10 ns per chunk.
    p.chunk_gen_ns = 10.0;
    return p;
  }
  if (name == "pc-matlab") {
    p.flat_iteration_ms = 1200.0;
    return p;
  }
  std::string known;
  for (const auto& n : builtin_profile_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::out_of_range("unknown hardware profile '" + name + "' (available: " + known + ")");
}

HardwareProfile derived_mode(HardwareProfile p) {
  p.offspring_mask_us.reset();
  p.offspring_total_us.reset();
  return p;
}

namespace {

const char* const kFieldNames[] = {
    "name", "core_clock_ns", "chunk_bits", "chunk_gen_ns", "mask_pixels",
    "offspring_mask_us", "adc_accumulate_us", "ranking_delay_us", "init_us",
    "population", "offspring_total_us", "flat_iteration_ms"};

}  // namespace

HardwareProfile read_profile(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("profile line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    bool known = false;
    for (const char* f : kFieldNames) known = known || key == f;
    if (!known) {
      throw std::runtime_error("profile line " + std::to_string(line_no) + ": unknown field '" +
                               key + "'");
    }
    kv[key] = line.substr(eq + 1);
  }

  HardwareProfile p;
  auto num = [&](const std::string& key, auto& out) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      std::size_t used = 0;
      using T = std::decay_t<decltype(out)>;
      if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::optional<double>>) {
        out = std::stod(it->second, &used);
      } else {
        out = static_cast<T>(std::stoull(it->second, &used));
      }
      if (used != it->second.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw std::runtime_error("profile field '" + key + "' has a malformed value '" +
                               it->second + "'");
    }
  };
  if (auto it = kv.find("name"); it != kv.end()) p.name = it->second;
  num("core_clock_ns", p.core_clock_ns);
  num("chunk_bits", p.chunk_bits);
  num("chunk_gen_ns", p.chunk_gen_ns);
  num("mask_pixels", p.mask_pixels);
  num("offspring_mask_us", p.offspring_mask_us);
  num("adc_accumulate_us", p.adc_accumulate_us);
  num("ranking_delay_us", p.ranking_delay_us);
  num("init_us", p.init_us);
  num("population", p.population);
  num("offspring_total_us", p.offspring_total_us);
  num("flat_iteration_ms", p.flat_iteration_ms);
  p.validate();
  return p;
}

void write_profile(std::ostream& out, const HardwareProfile& p) {
  out << "name=" << p.name << '\n'
      << "core_clock_ns=" << p.core_clock_ns << '\n'
      << "chunk_bits=" << p.chunk_bits << '\n'
      << "chunk_gen_ns=" << p.chunk_gen_ns << '\n'
      << "mask_pixels=" << p.mask_pixels << '\n';
  if (p.offspring_mask_us) out << "offspring_mask_us=" << *p.offspring_mask_us << '\n';
  out << "adc_accumulate_us=" << p.adc_accumulate_us << '\n'
      << "ranking_delay_us=" << p.ranking_delay_us << '\n'
      << "init_us=" << p.init_us << '\n'
      << "population=" << p.population << '\n';
  if (p.offspring_total_us) out << "offspring_total_us=" << *p.offspring_total_us << '\n';
  if (p.flat_iteration_ms) out << "flat_iteration_ms=" << *p.flat_iteration_ms << '\n';
}

Duration mask_generation_time(const HardwareProfile& p) {
  if (p.offspring_mask_us) return us(*p.offspring_mask_us);
  return ns(static_cast<double>(p.chunks_per_mask()) * p.chunk_gen_ns);
}

Duration offspring_time(const HardwareProfile& p) {
  return mask_generation_time(p) + us(p.adc_accumulate_us) + us(p.ranking_delay_us);
}

Duration iteration_time(Duration per_offspring, std::uint32_t population) {
  return per_offspring * static_cast<double>(population);
}

Duration iteration_time(const HardwareProfile& p) {
  if (p.flat_iteration_ms) return ms(*p.flat_iteration_ms);
  const Duration per_offspring = p.offspring_total_us ? us(*p.offspring_total_us) : offspring_time(p);
  return iteration_time(per_offspring, p.population);
}

Duration total_time(const HardwareProfile& p, std::uint64_t iterations) {
  return us(p.init_us) + iteration_time(p) * static_cast<double>(iterations);
}

double speedup(Duration a, Duration b) {
  if (!(a.count() > 0.0) || !(b.count() > 0.0)) {
    throw std::invalid_argument("speedup needs positive durations");
  }
  return a / b;
}

double speedup(const HardwareProfile& a, const HardwareProfile& b) {
  return speedup(iteration_time(a), iteration_time(b));
}

TimingReport timing_report(const HardwareProfile& p, std::uint64_t iterations) {
  p.validate();
  TimingReport r;
  r.profile = p.name;
  r.iterations = iterations;
  const Duration iter = iteration_time(p);
  if (!p.flat_iteration_ms) {
    r.mask_generation_us = to_us(mask_generation_time(p));
    r.per_offspring_us = to_us(offspring_time(p));
    r.measurement_rate_hz = static_cast<double>(p.population) / to_s(iter);
    r.mask_speedup_vs_virtex5 =
        speedup(mask_generation_time(derived_mode(builtin_profile("virtex5"))),
                mask_generation_time(derived_mode(p)));
  } else {
    r.measurement_rate_hz = 0.0;
  }
  r.per_iteration_ms = to_ms(iter);
  r.total_s = to_s(total_time(p, iterations));
  r.speedup_vs_pc = speedup(iteration_time(builtin_profile("pc-matlab")), iter);
  return r;
}

}  // namespace gafocus
