#include <gtest/gtest.h>

#include <cmath>

#include "bcms/outcomes.hpp"
#include "bcms/scenario.hpp"
#include "bcms/solver.hpp"

namespace bcms {
namespace {

ParameterSet params_of(ModelKind kind, double alpha = 0.6, double beta = 1.0 / 7.0,
                       double scale = 1.0) {
  ParameterSet p;
  p.kind = kind;
  p.alpha = alpha;
  p.beta = beta;
  p.mu35_scale = scale;
  return p;
}

const ScenarioOverlay kPre = builtin_overlay(ScenarioId::PrePandemic);

TEST(NetSurvival, FiveYearFromTreatedState) {
  const OccupancyCurve c =
      solve(State::PreMetObserved, AgeBand::A65_69, params_of(ModelKind::Markov), kPre,
            GridConfig{}.with_horizon(10.0));
  EXPECT_NEAR(ons_survival(c, 5.0), 95.57, 0.05);
  EXPECT_DOUBLE_EQ(ons_survival(c, 0.0), 100.0);
}

TEST(NetSurvival, OneYearFromMetastaticMatchesClosedForm) {
  const OccupancyCurve c = solve(State::MetObserved, AgeBand::A65_69,
                                 params_of(ModelKind::Markov), kPre, GridConfig{});
  // constant-rate closed form: (1 - p34 - p35) / (1 - p34)
  const double total = 0.00878 + 0.28060;
  const double gone = 1.0 - std::exp(-total);
  const double p34 = 0.00878 / total * gone;
  const double p35 = 0.28060 / total * gone;
  const double expected = 100.0 * (1.0 - p34 - p35) / (1.0 - p34);
  EXPECT_NEAR(ons_survival(c, 1.0), expected, 1e-8);
  EXPECT_NEAR(ons_survival(c, 1.0), 75.45, 0.05);
}

TEST(NetSurvival, FlagsDegenerateDenominator) {
  OccupancyCurve c;
  c.start = State::PreMetObserved;
  c.times = {0.0, 1.0};
  c.prob = {{0, 1, 0, 0, 0, 0}, {0, 0, 0, 0, 1.0, 0}};
  EXPECT_THROW(ons_survival(c, 1.0), std::runtime_error);
  c.start = State::NoCancer;
  EXPECT_THROW(ons_survival(c, 0.0), std::domain_error);
}

TEST(AdjustedSurvival, MetastaticTenYearIsPureExponential) {
  // with other-cause exits zeroed the metastatic state drains at mu35 only
  const double s = adjusted_survival(State::MetObserved, AgeBand::A65_69,
                                     params_of(ModelKind::Markov), kPre, GridConfig{}, 10.0);
  EXPECT_NEAR(s, 100.0 * std::exp(-2.8060), 1e-6);
  EXPECT_NEAR(s, 6.04, 0.05);
}

TEST(AdjustedSurvival, TreatedFiveYearSemiMarkov) {
  EXPECT_NEAR(adjusted_survival(State::PreMetObserved, AgeBand::A65_69,
                                params_of(ModelKind::SemiMarkov), kPre, GridConfig{}, 5.0),
              93.85, 0.10);
}

TEST(AdjustedSurvival, BoundaryIsFull) {
  EXPECT_DOUBLE_EQ(adjusted_survival(State::MetObserved, AgeBand::A80_84,
                                     params_of(ModelKind::Markov), kPre, GridConfig{}, 0.0),
                   100.0);
}

TEST(SurvivalProperties, MeasuresAgreeAtZeroAndDivergeMonotonically) {
  for (ModelKind kind : {ModelKind::Markov, ModelKind::SemiMarkov}) {
    const GridConfig cfg = GridConfig{}.with_horizon(10.0);
    const OccupancyCurve c =
        solve(State::PreMetObserved, AgeBand::A75_79, params_of(kind), kPre, cfg);
    double prev_ons = 100.0, prev_adj = 100.0, prev_gap = 0.0;
    for (double t : {1.0, 5.0, 10.0}) {
      const double ons = ons_survival(c, t);
      const double adj = adjusted_survival(State::PreMetObserved, AgeBand::A75_79,
                                           params_of(kind), kPre, cfg, t);
      ASSERT_GE(ons, 0.0);
      ASSERT_LE(ons, 100.0);
      ASSERT_LE(ons, prev_ons);
      ASSERT_LE(adj, prev_adj);
      const double gap = std::abs(adj - ons);
      ASSERT_GE(gap, prev_gap - 1e-9);
      prev_ons = ons;
      prev_adj = adj;
      prev_gap = gap;
    }
  }
}

TEST(SurvivalProperties, UntreatedAlwaysWorseThanTreated) {
  for (ModelKind kind : {ModelKind::Markov, ModelKind::SemiMarkov}) {
    const GridConfig cfg = GridConfig{}.with_horizon(10.0);
    for (AgeBand band : all_bands()) {
      const OccupancyCurve c1 =
          solve(State::PreMetObserved, band, params_of(kind), kPre, cfg);
      const OccupancyCurve c2 =
          solve(State::PreMetUnobserved, band, params_of(kind), kPre, cfg);
      for (double t : {1.0, 5.0, 10.0})
        ASSERT_LT(ons_survival(c2, t), ons_survival(c1, t));
    }
  }
}

TEST(ExcessDeaths, HeadlineScenarioOne) {
  const auto s1 = builtin_overlay(ScenarioId::S1);
  const OccupancyCurve pre =
      solve(State::NoCancer, AgeBand::A65_69, params_of(ModelKind::Markov), kPre, GridConfig{});
  const OccupancyCurve shocked =
      solve(State::NoCancer, AgeBand::A65_69, params_of(ModelKind::Markov), s1, GridConfig{});
  const double other = excess_deaths(pre, shocked, State::DeadOther, 5.0);
  EXPECT_NEAR(other, 363.0, 5.0);
  EXPECT_NEAR(other, 362.65, 0.5);  // frozen from the step-converged solve
  EXPECT_NEAR(years_of_life_lost(other, AgeBand::A65_69), 7003.0, 15.0);
}

TEST(ExcessDeaths, HeadlineScenarioTwoCancerDeaths) {
  const auto s2 = builtin_overlay(ScenarioId::S2);
  for (auto [kind, expected_excess, expected_yll] :
       {std::tuple{ModelKind::Markov, 8.0, 152.0},
        std::tuple{ModelKind::SemiMarkov, 10.0, 193.0}}) {
    const OccupancyCurve pre =
        solve(State::NoCancer, AgeBand::A65_69, params_of(kind), kPre, GridConfig{});
    const OccupancyCurve shocked =
        solve(State::NoCancer, AgeBand::A65_69, params_of(kind), s2, GridConfig{});
    const double excess = excess_deaths(pre, shocked, State::DeadCancer, 5.0);
    EXPECT_NEAR(excess, expected_excess, 1.0);
    EXPECT_NEAR(years_of_life_lost(excess, AgeBand::A65_69), expected_yll, 5.0);
  }
}

TEST(ExcessDeaths, SelfDifferenceIsZero) {
  const OccupancyCurve pre =
      solve(State::NoCancer, AgeBand::A70_74, params_of(ModelKind::Markov), kPre, GridConfig{});
  EXPECT_EQ(excess_deaths(pre, pre, State::DeadOther, 5.0), 0.0);
  EXPECT_EQ(excess_deaths(pre, pre, State::DeadCancer, 5.0), 0.0);
}

TEST(ExcessDeaths, RejectsMismatchedCurves) {
  const auto s1 = builtin_overlay(ScenarioId::S1);
  const OccupancyCurve a =
      solve(State::NoCancer, AgeBand::A65_69, params_of(ModelKind::Markov), kPre, GridConfig{});
  const OccupancyCurve b =
      solve(State::NoCancer, AgeBand::A70_74, params_of(ModelKind::Markov), s1, GridConfig{});
  EXPECT_THROW(excess_deaths(a, b, State::DeadOther, 5.0), std::domain_error);
  const OccupancyCurve c =
      solve(State::MetObserved, AgeBand::A65_69, params_of(ModelKind::Markov), s1, GridConfig{});
  EXPECT_THROW(excess_deaths(a, c, State::DeadOther, 5.0), std::domain_error);
  EXPECT_THROW(excess_deaths(a, a, State::NoCancer, 5.0), std::domain_error);
}

TEST(ExcessDeaths, CancerSignsFollowScenarioStructure) {
  // S1 only raises competing mortality, so cancer deaths cannot increase;
  // S2's diagnosis dip pushes them up for the main bands
  const auto s1 = builtin_overlay(ScenarioId::S1);
  const auto s2 = builtin_overlay(ScenarioId::S2);
  for (ModelKind kind : {ModelKind::Markov, ModelKind::SemiMarkov}) {
    for (AgeBand band : {AgeBand::A65_69, AgeBand::A70_74, AgeBand::A75_79, AgeBand::A80_84}) {
      const OccupancyCurve pre =
          solve(State::NoCancer, band, params_of(kind), kPre, GridConfig{});
      const OccupancyCurve a = solve(State::NoCancer, band, params_of(kind), s1, GridConfig{});
      const OccupancyCurve b = solve(State::NoCancer, band, params_of(kind), s2, GridConfig{});
      EXPECT_LE(excess_deaths(pre, a, State::DeadCancer, 5.0), 0.0);
      EXPECT_GE(excess_deaths(pre, b, State::DeadCancer, 5.0), 0.0);
    }
  }
}

TEST(YearsOfLifeLost, IdentityAndTotal) {
  EXPECT_DOUBLE_EQ(years_of_life_lost(7.87, AgeBand::A65_69), 7.87 * 19.31);
  EXPECT_DOUBLE_EQ(years_of_life_lost(0.0, AgeBand::A85_89), 0.0);
  const std::vector<double> excess{363.0, 607.0, 1012.0, 1700.0, 2255.0};
  double manual = 0.0;
  const LifeTable life = standard_life_table();
  for (int b = 0; b < kNumBands; ++b)
    manual += excess[static_cast<std::size_t>(b)] * life.expectancy[b];
  EXPECT_DOUBLE_EQ(total_years_of_life_lost(excess), manual);
  EXPECT_THROW(total_years_of_life_lost(std::vector<double>{1.0, 2.0}), std::domain_error);
}

TEST(Sweep, VariantGridReproducesSensitivityCells) {
  const auto sets = sensitivity_parameter_sets();
  SweepRequest req;
  for (const auto& s : sets)
    if (s.id == "alpha08" || s.id == "beta10" || s.id == "mu35hi")
      req.parameter_sets.push_back(s);
  req.scenarios = {kPre, builtin_overlay(ScenarioId::S2)};
  req.bands = {AgeBand::A65_69};
  req.with_survival = false;
  const OutcomeReport report = sensitivity_sweep(req);

  auto cancer_excess = [&](const std::string& pset, ModelKind kind) {
    for (const auto& r : report.excess)
      if (r.param_set == pset && r.kind == kind && r.scenario == "s2" &&
          r.cause == State::DeadCancer)
        return r.excess_per_100k;
    throw std::runtime_error("row not found");
  };
  EXPECT_NEAR(cancer_excess("alpha08", ModelKind::Markov), 8.0, 1.0);
  EXPECT_NEAR(cancer_excess("beta10", ModelKind::Markov), 11.0, 1.0);
  EXPECT_NEAR(cancer_excess("mu35hi", ModelKind::SemiMarkov), 12.0, 1.0);

  for (const auto& r : report.excess) {
    EXPECT_FALSE(r.failed) << r.error;
    if (r.scenario == "pre") {
      EXPECT_EQ(r.excess_per_100k, 0.0);
      EXPECT_EQ(r.yll_per_100k, 0.0);
    }
  }
}

TEST(Sweep, EmptyGridRejectedAndFailuresAreFlagged) {
  SweepRequest req;
  EXPECT_THROW(sensitivity_sweep(req), std::domain_error);

  // an unsolvable cell (horizon past the duration domain) must flag rows,
  // not abort the sweep
  req.parameter_sets = {params_of(ModelKind::SemiMarkov)};
  req.scenarios = {kPre};
  req.bands = {AgeBand::A65_69};
  req.grid.step = 0.05;
  req.grid.horizon = 10.0;
  req.survival_horizons = {11.0};
  req.with_excess = false;
  const OutcomeReport report = sensitivity_sweep(req);
  bool any_failed = false;
  for (const auto& r : report.survival) any_failed = any_failed || r.failed;
  EXPECT_TRUE(any_failed);
  for (const auto& r : report.occupancy) EXPECT_FALSE(r.failed);
}

// ---------------------------------------------------------------------------
// Polynomial fitting. Expected values frozen from an independent
// least-squares computation on the built-in duration-rate points.
// ---------------------------------------------------------------------------

TEST(PolynomialFit, DegreeFourReproducesPublishedCurve) {
  const auto points = duration_rate_points();
  const std::vector<double> c = fit_duration_polynomial(points, 4);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_NEAR(fit_rmse(c, points), 0.002265, 5e-5);
  EXPECT_LE(fit_rmse(c, points), 0.003);

  const DurationHazard published = metastasis_duration_hazard();
  double worst = 0.0;
  for (double z = 0.0; z <= 10.0 + 1e-9; z += 0.1)
    worst = std::max(worst, std::abs(polynomial_value(c, z) - published.rate(z)));
  EXPECT_LE(worst, 0.005);
  EXPECT_LE(worst, 5e-4);  // the published coefficients are this fit, printed rounded
  EXPECT_NEAR(polynomial_value(c, 2.0), 0.0368896, 0.005);
}

TEST(PolynomialFit, AlternativeDegrees) {
  const auto points = duration_rate_points();
  const double rmse3 = fit_rmse(fit_duration_polynomial(points, 3), points);
  const double rmse4 = fit_rmse(fit_duration_polynomial(points, 4), points);
  const double rmse7 = fit_rmse(fit_duration_polynomial(points, 7), points);
  EXPECT_GT(rmse3, rmse4);
  EXPECT_GT(rmse4, rmse7);
  EXPECT_NEAR(rmse3, 0.005885, 5e-5);
  EXPECT_NEAR(rmse7, 0.000480, 5e-5);
}

TEST(PolynomialFit, NullFitAndErrorPaths) {
  std::vector<DurationRatePoint> zeros;
  for (int z = 0; z <= 8; ++z) zeros.push_back({static_cast<double>(z), 0.0});
  for (double c : fit_duration_polynomial(zeros, 4)) EXPECT_NEAR(c, 0.0, 1e-12);

  std::vector<DurationRatePoint> few(zeros.begin(), zeros.begin() + 4);
  EXPECT_THROW(fit_duration_polynomial(few, 4), std::domain_error);
  EXPECT_THROW(fit_duration_polynomial(zeros, 5), std::domain_error);
}

}  // namespace
}  // namespace bcms
