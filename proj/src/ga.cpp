#include "gafocus/ga.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace gafocus {

// ---------------------------------------------------------------- schedules

double rate_exponential(std::int64_t k, double r0, double r_end, double decay) {
  return (r0 - r_end) * std::exp(-static_cast<double>(k) / decay) + r_end;
}

double rate_linear_clamped(std::int64_t k, std::int64_t kappa_start, std::int64_t tau,
                           std::int64_t epsilon, double r_end) {
  const std::int64_t numerator = kappa_start - (k - 1) * tau;
  const double r = static_cast<double>(numerator) / static_cast<double>(epsilon);
  return r > r_end ? r : r_end;
}

MutationSchedule MutationSchedule::exponential(double r0, double r_end, double decay) {
  if (!(r_end > 0.0 && r_end <= r0 && r0 <= 1.0)) {
    throw std::invalid_argument("exponential schedule needs 0 < R_end <= R0 <= 1");
  }
  if (!(decay > 0.0)) throw std::invalid_argument("decay factor D must be > 0");
  MutationSchedule s;
  s.kind_ = ScheduleKind::exponential;
  s.r0_ = r0;
  s.r_end_ = r_end;
  s.decay_ = decay;
  return s;
}

MutationSchedule MutationSchedule::linear_clamped(std::int64_t kappa_start, std::int64_t tau,
                                                  std::int64_t epsilon, double r_end) {
  if (epsilon <= 0) throw std::invalid_argument("epsilon must be > 0");
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  const double r0 = static_cast<double>(kappa_start) / static_cast<double>(epsilon);
  if (!(r_end > 0.0 && r_end <= r0 && r0 <= 1.0)) {
    throw std::invalid_argument("linear schedule needs 0 < R_end <= kappa_start/epsilon <= 1");
  }
  MutationSchedule s;
  s.kind_ = ScheduleKind::linear_clamped;
  s.r0_ = r0;
  s.r_end_ = r_end;
  s.kappa_start_ = kappa_start;
  s.tau_ = tau;
  s.epsilon_ = epsilon;
  return s;
}

MutationSchedule MutationSchedule::constant(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("constant rate must be in (0, 1]");
  MutationSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.r0_ = rate;
  s.r_end_ = rate;
  return s;
}

double MutationSchedule::rate(std::int64_t k) const {
  switch (kind_) {
    case ScheduleKind::exponential:
      return rate_exponential(k, r0_, r_end_, decay_);
    case ScheduleKind::linear_clamped:
      return rate_linear_clamped(k, kappa_start_, tau_, epsilon_, r_end_);
    case ScheduleKind::constant:
      break;
  }
  return r0_;
}

double MutationSchedule::rate_at_iteration(std::uint64_t iteration) const {
  if (iteration < 1) throw std::invalid_argument("GA iterations are 1-based");
  return rate(first_index() + static_cast<std::int64_t>(iteration) - 1);
}

FixedRate MutationSchedule::fixed_rate_at_iteration(std::uint64_t iteration) const {
  return FixedRate::from_fraction(rate_at_iteration(iteration));
}

void GaConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("population size must be >= 2");
  if (offspring_per_iteration < 1 || offspring_per_iteration > population_size) {
    throw std::invalid_argument("offspring per iteration must be in [1, population size]");
  }
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (stop_at && *stop_at < 1) throw std::invalid_argument("stop_at must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

// ---------------------------------------------------------------- operators

void rank(std::vector<Individual>& members) {
  std::stable_sort(members.begin(), members.end(), [](const Individual& a, const Individual& b) {
    return a.fitness.value_or(0) > b.fitness.value_or(0);
  });
}

std::pair<std::size_t, std::size_t> select_parents(const Population& pop, RandomSource& rng) {
  const std::size_t p = pop.size();
  if (p < 2) throw std::logic_error("parent selection needs at least two members");
  // Index i (rank i + 1) carries weight p - i.
  auto pick = [&](std::uint64_t total, std::size_t skip) {
    std::uint64_t u = rng.uniform_below(total);
    for (std::size_t i = 0; i < p; ++i) {
      if (i == skip) continue;
      const std::uint64_t w = p - i;
      if (u < w) return i;
      u -= w;
    }
    return p - 1;  // unreachable: weights sum to total
  };
  const std::uint64_t total = std::uint64_t{p} * (p + 1) / 2;
  const std::size_t first = pick(total, p);
  const std::size_t second = pick(total - (p - first), first);
  return {first, second};
}

Mask crossover(const Mask& a, const Mask& b, RandomSource& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: parent length mismatch");
  const BitVector tmpl = rng.next_bits(a.size());
  BitVector child(a.size());
  auto out = child.words();
  const auto wa = a.bits().words();
  const auto wb = b.bits().words();
  const auto wt = tmpl.words();
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = (wa[w] & wt[w]) | (wb[w] & ~wt[w]);
  return Mask(std::move(child));
}

Mask mutate(const Mask& m, FixedRate rate, RandomSource& rng, MutationStyle style) {
  const BitVector sites = bernoulli_select(rng, m.size(), rate);
  Mask out = m;
  const auto words = sites.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits != 0) {
      const std::size_t i = 64 * w + static_cast<std::size_t>(std::countr_zero(bits));
      if (style == MutationStyle::redraw) {
        out.set(i, rng.next_bit());
      } else {
        out.set(i, !out[i]);
      }
      bits &= bits - 1;
    }
  }
  return out;
}

Mask mutate(const Mask& m, double rate, RandomSource& rng, MutationStyle style) {
  return mutate(m, FixedRate::from_fraction(rate), rng, style);
}

std::vector<double> evaluate_intensities(const TransmissionMatrix& tm,
                                         const std::vector<const Mask*>& masks,
                                         unsigned workers) {
  std::vector<double> out(masks.size());
  const std::size_t n = masks.size();
  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = target_intensity(tm, *masks[i]);
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) out[i] = target_intensity(tm, *masks[i]);
    });
  }
  pool.clear();  // joins
  return out;
}

// ---------------------------------------------------------------- engine

GaEngine::GaEngine(GaConfig cfg, const TransmissionMatrix& medium, DetectorModel detector)
    : cfg_(std::move(cfg)), medium_(&medium), detector_(detector), rng_(cfg_.seed) {
  cfg_.validate();
  detector_.validate();
  if (cfg_.n_modes != medium.n_modes()) {
    throw std::invalid_argument("GA n_modes " + std::to_string(cfg_.n_modes) +
                                " does not match medium n_modes " +
                                std::to_string(medium.n_modes()));
  }
  std::vector<Mask> masks;
  masks.reserve(cfg_.population_size);
  for (std::size_t i = 0; i < cfg_.population_size; ++i) {
    masks.push_back(random_mask(rng_, cfg_.n_modes));
  }
  pop_.capacity = cfg_.population_size;
  pop_.members = measure_batch(std::move(masks));
  rank(pop_.members);
}

std::vector<Individual> GaEngine::measure_batch(std::vector<Mask> masks) {
  std::vector<const Mask*> view;
  view.reserve(masks.size());
  for (const auto& m : masks) view.push_back(&m);
  const auto intensities = evaluate_intensities(*medium_, view, cfg_.workers);

  std::vector<Individual> out;
  out.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    ++measurements_;
    const Measurement reading = measure(detector_, intensities[i], rng_, measurements_);
    out.push_back({std::move(masks[i]), reading.digitized, intensities[i], 0});
  }
  return out;
}

IterationResult GaEngine::step() {
  const std::uint64_t k = iteration_ + 1;
  const FixedRate rate = cfg_.schedule.fixed_rate_at_iteration(k);

  std::vector<Mask> children;
  children.reserve(cfg_.offspring_per_iteration);
  for (std::size_t j = 0; j < cfg_.offspring_per_iteration; ++j) {
    const auto [pa, pb] = select_parents(pop_, rng_);
    Mask child = crossover(pop_.members[pa].mask, pop_.members[pb].mask, rng_);
    children.push_back(mutate(child, rate, rng_, cfg_.mutation));
  }
  std::vector<Individual> offspring = measure_batch(std::move(children));

  for (auto& m : pop_.members) ++m.age;
  std::vector<Individual>& members = pop_.members;
  if (cfg_.replacement == Replacement::replace_worst) {
    members.resize(members.size() - offspring.size());
  }
  for (auto& o : offspring) members.push_back(std::move(o));
  rank(members);
  members.resize(pop_.capacity);

  iteration_ = k;
  return {k, *pop_.best().fitness, pop_.best().intensity, rate, measurements_};
}

// ---------------------------------------------------------------- run

RunTrace run(const GaConfig& cfg, const TransmissionMatrix& medium,
             const DetectorModel& detector, const RunOptions& options) {
  if (!(options.baseline > 0.0)) throw std::invalid_argument("run: baseline must be > 0");
  if (options.profile) options.profile->validate();

  GaEngine engine(cfg, medium, detector);
  RunTrace trace;
  trace.baseline = options.baseline;
  trace.zeta_source = ZetaSource::intensity;

  auto model_time = [&](std::uint64_t k) -> std::optional<double> {
    if (!options.profile) return std::nullopt;
    return to_us(total_time(*options.profile, k));
  };

  const Individual& first = engine.population().best();
  trace.initial = TraceRecord{0,
                              *first.fitness,
                              first.intensity,
                              enhancement(first.intensity, options.baseline),
                              cfg.schedule.fixed_rate_at_iteration(1).numerator,
                              engine.measurements(),
                              model_time(0)};

  const std::uint64_t last = std::min(cfg.max_iterations, cfg.stop_at.value_or(cfg.max_iterations));
  trace.records.reserve(last);
  for (std::uint64_t k = 1; k <= last; ++k) {
    const IterationResult r = engine.step();
    trace.records.push_back({r.iteration, r.best_fitness, r.best_intensity,
                             enhancement(r.best_intensity, options.baseline), r.rate.numerator,
                             r.measurements, model_time(r.iteration)});
  }
  return trace;
}

}  // namespace gafocus
