#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bcms/model.hpp"
#include "bcms/occupancy.hpp"
#include "bcms/scenario.hpp"
#include "bcms/solver.hpp"

namespace bcms {

/// Counter-based random stream (splitmix64). Streams are keyed by
/// (seed, path index), so parallel simulation reproduces bit-identically
/// regardless of thread scheduling.
class RandomStream {
 public:
  static RandomStream for_path(std::uint64_t seed, std::uint64_t path_index) {
    RandomStream s;
    s.state_ = scramble(scramble(seed) ^ (path_index + 0x9E3779B97F4A7C15ULL));
    return s;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw strictly inside (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential waiting time; strictly positive.
  double next_exponential(double rate) {
    return -std::log(next_uniform()) / rate;
  }

 private:
  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_ = 0;
};

struct TransitionEvent {
  double time = 0.0;
  State from = State::NoCancer;
  State to = State::NoCancer;
};

/// One sampled life history: the ordered transitions of a single woman up
/// to the horizon or an absorbing state, whichever comes first.
struct LifeHistory {
  State start = State::NoCancer;
  double horizon = 5.0;
  std::vector<TransitionEvent> events;

  State state_at(double t) const {
    State s = start;
    for (const auto& e : events) {
      if (e.time > t) break;
      s = e.to;
    }
    return s;
  }
};

struct SimulationConfig {
  long long n_paths = 10000;
  std::uint64_t seed = 1;
  State start = State::NoCancer;
  AgeBand band = AgeBand::A65_69;
  ParameterSet params;
  ScenarioOverlay scenario;
  double horizon = 5.0;

  void validate() const {
    if (n_paths < 1) throw std::domain_error("n_paths must be at least 1");
    if (is_absorbing(start)) throw std::domain_error("start state must not be absorbing");
    if (!(horizon > 0.0) || horizon > 10.0)
      throw std::domain_error("horizon must lie in (0, 10] years");
    params.validate();
  }
};

namespace detail {

/// Per-config sampling context: resolved rates, overlay boundaries and the
/// dominating bound for the duration-hazard thinning.
struct Sampler {
  Rates rates;
  std::vector<double> boundaries;  // overlay jump times inside (0, horizon)
  double horizon;
  double thinning_bound;  // >= duration hazard everywhere on [0, 10]

  explicit Sampler(const SimulationConfig& cfg)
      : rates(Rates::resolve(cfg.band, cfg.params, cfg.scenario)), horizon(cfg.horizon) {
    for (double b : cfg.scenario.breakpoints())
      if (b > 0.0 && b < horizon) boundaries.push_back(b);
    std::sort(boundaries.begin(), boundaries.end());
    // margin covers hazard variation between scan points of max_rate()
    thinning_bound = rates.hazard13.max_rate() * (1.0 + 1e-3) + 1e-4;
    for (double z = 0.0; z <= DurationHazard::kMaxDuration; z += 1e-3)
      if (rates.hazard13.rate(z) > thinning_bound)
        throw std::runtime_error("thinning bound does not dominate the hazard");
  }

  double next_boundary(double t) const {
    for (double b : boundaries)
      if (b > t + 1e-15) return b;
    return horizon;
  }

  LifeHistory sample(const SimulationConfig& cfg, std::uint64_t path_index) const {
    RandomStream rng = RandomStream::for_path(cfg.seed, path_index);
    LifeHistory history;
    history.start = cfg.start;
    history.horizon = horizon;

    State s = cfg.start;
    double t = 0.0;
    double entry = 0.0;  // duration clock resets on every transition
    while (t < horizon && !is_absorbing(s)) {
      const double seg_end = next_boundary(t);
      const double m = rates.mu04 * rates.mortality_multiplier(0.5 * (t + seg_end));
      switch (s) {
        case State::NoCancer: {
          const double mu01 =
              rates.alpha * rates.diagnosis_multiplier(0.5 * (t + seg_end)) * rates.mu_star;
          const double total = rates.mu_star + m;
          const double dt = rng.next_exponential(total);
          if (t + dt >= seg_end) {
            t = seg_end;
            break;
          }
          t += dt;
          const double u = rng.next_uniform() * total;
          const State to = u < mu01                  ? State::PreMetObserved
                           : u < rates.mu_star       ? State::PreMetUnobserved
                                                     : State::DeadOther;
          history.events.push_back({t, s, to});
          s = to;
          entry = t;
          break;
        }
        case State::PreMetObserved:
        case State::PreMetUnobserved: {
          // thinning against a constant bound; the accepted fraction uses
          // the exact duration hazard at the proposal time
          const double scale = s == State::PreMetUnobserved ? 1.0 / rates.beta : 1.0;
          const double bound = thinning_bound * scale + m;
          const double dt = rng.next_exponential(bound);
          if (t + dt >= seg_end) {
            t = seg_end;
            break;
          }
          t += dt;
          const double h13 = rates.hazard13.rate(t - entry) * scale;
          const double u = rng.next_uniform() * bound;
          if (u < h13) {
            history.events.push_back({t, s, State::MetObserved});
            s = State::MetObserved;
            entry = t;
          } else if (u < h13 + m) {
            history.events.push_back({t, s, State::DeadOther});
            s = State::DeadOther;
          }
          // otherwise the proposal is thinned away: no transition
          break;
        }
        case State::MetObserved: {
          const double total = m + rates.mu35;
          const double dt = rng.next_exponential(total);
          if (t + dt >= seg_end) {
            t = seg_end;
            break;
          }
          t += dt;
          const State to =
              rng.next_uniform() * total < rates.mu35 ? State::DeadCancer : State::DeadOther;
          history.events.push_back({t, s, to});
          s = to;
          break;
        }
        default:
          throw std::logic_error("absorbing state reached the sampling loop");
      }
    }
    return history;
  }
};

}  // namespace detail

/// Sample the life history of one path; deterministic in (seed, path index).
inline LifeHistory sample_history(const SimulationConfig& cfg, std::uint64_t path_index) {
  cfg.validate();
  return detail::Sampler(cfg).sample(cfg, path_index);
}

/// Empirical occupancy estimate with binomial standard errors.
struct OccupancyEstimate {
  std::vector<double> times;
  std::vector<std::array<double, kNumStates>> frequency;
  std::vector<std::array<double, kNumStates>> standard_error;
  long long n_paths = 0;
};

inline OccupancyEstimate estimate_occupancy(const SimulationConfig& cfg,
                                            std::span<const double> times,
                                            unsigned n_threads = 0) {
  cfg.validate();
  for (double t : times)
    if (t < 0.0 || t > cfg.horizon + 1e-12)
      throw std::domain_error("evaluation times must lie within the horizon");
  const detail::Sampler sampler(cfg);

  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(
      std::min<long long>(n_threads, std::max<long long>(1, cfg.n_paths / 1024 + 1)));

  using Counts = std::vector<std::array<long long, kNumStates>>;
  std::vector<Counts> partial(n_threads,
                              Counts(times.size(), std::array<long long, kNumStates>{}));
  auto worker = [&](unsigned w) {
    Counts& counts = partial[w];
    for (long long i = w; i < cfg.n_paths; i += n_threads) {
      const LifeHistory h = sampler.sample(cfg, static_cast<std::uint64_t>(i));
      for (std::size_t k = 0; k < times.size(); ++k)
        ++counts[k][static_cast<int>(h.state_at(times[k]))];
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_threads; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& th : pool) th.join();

  OccupancyEstimate est;
  est.times.assign(times.begin(), times.end());
  est.n_paths = cfg.n_paths;
  est.frequency.resize(times.size());
  est.standard_error.resize(times.size());
  const auto n = static_cast<double>(cfg.n_paths);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (unsigned w = 1; w < n_threads; ++w)
      for (int s = 0; s < kNumStates; ++s) partial[0][k][s] += partial[w][k][s];
    for (int s = 0; s < kNumStates; ++s) {
      const double p = static_cast<double>(partial[0][k][s]) / n;
      est.frequency[k][s] = p;
      est.standard_error[k][s] = std::sqrt(p * (1.0 - p) / n);
    }
  }
  return est;
}

}  // namespace bcms
