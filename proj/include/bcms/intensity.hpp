#pragma once

#include <stdexcept>

#include "bcms/model.hpp"
#include "bcms/scenario.hpp"

namespace bcms {

/// Fully resolved transition intensity mu^{ij}(band, t, z) in events per
/// person-year: baseline rate x parameterisation (alpha split, beta ratio,
/// mu35 scale) x scenario multiplier active at calendar time t.
///
/// t is calendar time since 2020-01-01, z is duration in the current state.
/// The onset split preserves mu01 + mu02 == mu* exactly under every overlay,
/// and the progression and cancer-death intensities are scenario-free.
inline double evaluate_intensity(State from, State to, AgeBand band, double t,
                                 double z, const ParameterSet& params,
                                 const ScenarioOverlay& scenario) {
  if (!is_edge(from, to))
    throw std::domain_error("not a transition of the model graph");
  if (t < 0.0) throw std::domain_error("calendar time must be non-negative");
  if (z < 0.0) throw std::domain_error("duration must be non-negative");
  params.validate();

  const IntensityRow& row = params.table.row(band);
  const int group = overlay_group(band);
  const double mu_star = onset_decomposition(params.alpha, row.onset_observed).mu_star;

  switch (static_cast<int>(from) * 10 + static_cast<int>(to)) {
    case 1: {  // 0 -> 1, scenario may suppress diagnosis
      return params.alpha * scenario.diagnosis_multiplier(t) * mu_star;
    }
    case 2: {  // 0 -> 2 absorbs whatever diagnosis misses
      const double mu01 = params.alpha * scenario.diagnosis_multiplier(t) * mu_star;
      return mu_star - mu01;
    }
    case 4:   // 0 -> 4
    case 14:  // 1 -> 4
    case 24:  // 2 -> 4
    case 34:  // 3 -> 4, all share the scaled other-cause rate
      return row.dead_other * scenario.mortality_multiplier(group, t);
    case 13:  // 1 -> 3, duration-dependent, scenario-free
      return params.metastasis_hazard().rate(z);
    case 23:  // 2 -> 3 = (1 -> 3) / beta
      return params.metastasis_hazard().rate(z) / params.beta;
    case 35:  // 3 -> 5, scenario-free
      return row.cancer_death * params.mu35_scale;
    default:
      throw std::domain_error("not a transition of the model graph");
  }
}

}  // namespace bcms
