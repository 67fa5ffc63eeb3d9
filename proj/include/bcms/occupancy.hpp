#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcms/model.hpp"

namespace bcms {

/// State-occupancy probabilities on a time grid for one
/// (start state, band, scenario, model kind) combination. At t = 0 the
/// vector is the indicator of the start state; the death components are
/// non-decreasing and every vector sums to one.
struct OccupancyCurve {
  State start = State::NoCancer;
  AgeBand band = AgeBand::A65_69;
  std::string scenario_id = "pre";
  ModelKind kind = ModelKind::Markov;
  std::vector<double> times;
  std::vector<std::array<double, kNumStates>> prob;

  std::size_t index_of(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
    if (it == times.end() || std::abs(*it - t) > 1e-9)
      throw std::domain_error("time is not on the occupancy grid");
    return static_cast<std::size_t>(it - times.begin());
  }

  const std::array<double, kNumStates>& at(double t) const {
    return prob[index_of(t)];
  }

  double probability(State j, double t) const {
    return at(t)[static_cast<int>(j)];
  }
};

/// Largest componentwise difference between two curves over their shared
/// grid times. Certifies step adequacy when the second curve was solved on
/// a refined grid; identical solves give exactly zero.
inline double convergence_probe(const OccupancyCurve& a, const OccupancyCurve& b) {
  double worst = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    while (j < b.times.size() && b.times[j] < a.times[i] - 1e-9) ++j;
    if (j == b.times.size()) break;
    if (std::abs(b.times[j] - a.times[i]) > 1e-9) continue;
    for (int s = 0; s < kNumStates; ++s)
      worst = std::max(worst, std::abs(a.prob[i][s] - b.prob[j][s]));
  }
  return worst;
}

}  // namespace bcms
