#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nupbr/strategies.hpp"

using namespace nupbr;

namespace {

const JumpLaw kTwoPoint = JumpLaw::from_atoms({{0.9, 0.5}, {1.1, 0.5}});

MarketConfig compound(double lambda = 1.0, JumpLaw law = kTwoPoint) {
  MarketConfig cfg;
  cfg.model = ModelKind::CompoundPoisson;
  cfg.lambda = lambda;
  cfg.jump_law = law;
  cfg.seed = 31;
  return cfg;
}

}  // namespace

TEST(Capital, DegenerateLawGivesOneMinusExpMinusOne) {
  EXPECT_NEAR(example3_initial_capital(JumpLaw::degenerate()), 1.0 - std::exp(-1.0), 1e-12);
}

TEST(Capital, TwoPointLaw) {
  const double x = example3_initial_capital(kTwoPoint);
  EXPECT_NEAR(x, 11.0 / 9.0 * (1.0 - std::exp(-10.0 / 11.0)), 1e-15);
  EXPECT_NEAR(x, 0.72980, 1e-5);
}

TEST(Capital, WideLawHasCapitalAboveOne) {
  const JumpLaw wide = JumpLaw::from_atoms({{0.5, 0.5}, {1.5, 0.5}});
  EXPECT_NEAR(example3_capital_formula(wide), 3.0 * (1.0 - std::exp(-2.0 / 3.0)), 1e-15);
  EXPECT_GT(example3_capital_formula(wide), 1.0);
  EXPECT_THROW(example3_initial_capital(wide), ConfigError);
}

TEST(Integrand, StoppedMeansZero) {
  EXPECT_EQ(example3_integrand(0.3, 1.0, kTwoPoint, true), 0.0);
  EXPECT_DOUBLE_EQ(example3_integrand(0.0, 1.0, JumpLaw::degenerate(), false), std::exp(-1.0));
}

TEST(Integrand, PrimitiveMatchesQuadrature) {
  for (double lambda : {1.0, 3.0}) {
    auto f = [&](double t) { return example3_integrand(t, lambda, kTwoPoint, false); };
    const double q = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.1, 0.3, 10, 1e-14);
    EXPECT_NEAR(example3_primitive(0.1, 0.3, lambda, kTwoPoint), q, 1e-13);
  }
}

TEST(ValueProcess, DegenerateJumpingPathEndsAtExactlyOne) {
  const StrategySpec s = example3_strategy(1.0, JumpLaw::degenerate());
  for (double rho : {0.01, 0.3, 0.77, 0.999}) {
    const EventPath p = first_jump_path(1.0, 1.0, rho);
    const ValueProcessRecord r = integrate_value_process_jump(p, s);
    EXPECT_NEAR(r.terminal_value, 1.0, 1e-12) << rho;
    EXPECT_FALSE(r.used_quadrature);
  }
}

TEST(ValueProcess, HitZeroPathEndsAtZero) {
  const StrategySpec s = example3_strategy(1.0, JumpLaw::degenerate());
  const ValueProcessRecord r = integrate_value_process_jump(first_jump_path(1.0, 1.0, 1.4), s);
  EXPECT_NEAR(r.terminal_value, 0.0, 1e-12);
  EXPECT_NEAR(r.gain(), -(1.0 - std::exp(-1.0)), 1e-12);
}

TEST(ValueProcess, PathwiseSuperreplicationTwoPointLaw) {
  const MarketConfig cfg = compound(1.0);
  const StrategySpec s = example3_strategy(cfg.lambda, kTwoPoint);
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const ModelOutput out = simulate(cfg, i);
    const EventPath& p = *out.y_events();
    const ValueProcessRecord r = integrate_value_process_jump(p, s);
    const double claim = out.y_terminal() > 0.0 ? 1.0 : 0.0;
    ASSERT_GE(r.terminal_value, claim - 1e-9) << "path " << i;
    if (claim > 0.0) {
      ASSERT_GE(r.gain(), 1.0 - s.x - 1e-9) << "path " << i;
    }
    ASSERT_TRUE(check_admissibility(r, s.alpha).pass);
  }
}

TEST(ValueProcess, QuadratureFallbackAgreesWithPrimitive) {
  StrategySpec s = example3_strategy(2.0, kTwoPoint);
  StrategySpec q = s;
  q.primitive = nullptr;
  for (double rho : {0.1, 0.45, 0.9}) {
    const EventPath p = first_jump_path(2.0, 1.0, rho, 0.9);
    const ValueProcessRecord a = integrate_value_process_jump(p, s);
    const ValueProcessRecord b = integrate_value_process_jump(p, q);
    EXPECT_TRUE(b.used_quadrature);
    EXPECT_NEAR(a.terminal_value, b.terminal_value, 1e-9);
  }
}

TEST(ValueProcess, PartialHorizon) {
  const StrategySpec s = example3_strategy(1.0, JumpLaw::degenerate());
  const EventPath p = first_jump_path(1.0, 1.0, 0.8);
  const ValueProcessRecord r = integrate_value_process_jump(p, s, 0.5);
  // before the jump V(t) = x - int_0^t H dt = 1 - exp(-(1 - t))
  EXPECT_NEAR(r.terminal_value, 1.0 - std::exp(-0.5), 1e-12);
  EXPECT_THROW(integrate_value_process_jump(p, s, 1.5), DomainError);
}

TEST(ValueProcess, ExtraAssetsCarryZeroHoldings) {
  MarketConfig cfg = compound(1.0);
  cfg.d = 2;
  const StrategySpec s1 = example3_strategy(1.0, kTwoPoint, 1);
  const StrategySpec s2 = example3_strategy(1.0, kTwoPoint, 2);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const ModelOutput out = simulate(cfg, i);
    std::vector<EventPath> assets;
    for (const auto& a : out.s_paths) assets.push_back(std::get<EventPath>(a));
    const double v1 = integrate_value_process_jump(assets.front(), s1).terminal_value;
    const double v2 = integrate_value_process_jump(assets, s2).terminal_value;
    ASSERT_NEAR(v1, v2, 1e-12);
  }
}

TEST(ValueProcess, ZeroStrategyKeepsCapital) {
  const ValueProcessRecord r = integrate_value_process_jump(first_jump_path(1.0, 1.0, 0.2), zero_strategy(0.4));
  EXPECT_DOUBLE_EQ(r.terminal_value, 0.4);
}

TEST(BuyAndHold, ClaimPriceAssetReplicatesIndicator) {
  const double x = 1.0 - std::exp(-1.0);
  for (double rho : {0.3, 1.2}) {
    const SurvivalPricePath sp{first_jump_path(1.0, 1.0, rho), 1.0};
    const ValueProcessRecord r = integrate_buy_and_hold(AssetPath{sp}, 1.0, x);
    EXPECT_NEAR(r.terminal_value, rho < 1.0 ? 1.0 : 0.0, 1e-15);
  }
}

TEST(Admissibility, ThresholdAtAlpha) {
  ValueProcessRecord r;
  r.x = 0.5;
  r.running_minimum = 0.0;
  EXPECT_TRUE(check_admissibility(r, 0.5).pass);
  EXPECT_FALSE(check_admissibility(r, 0.4).pass);
  EXPECT_DOUBLE_EQ(check_admissibility(r, 0.4).min_gain, -0.5);
}

TEST(DeltaHedge, InitialDeltaAndCapital) {
  const TimeHorizon h{1.0, 1001};
  EXPECT_NEAR(example4_delta_hedge(0.0, 1.0, h), 0.48394144903828673, 1e-14);
  EXPECT_NEAR(brownian_hedge_capital(h), 1.0 - 2.0 * normal_cdf(-1.0), 1e-15);
  EXPECT_EQ(example4_delta_hedge(0.5, 0.0, h), 0.0);
  EXPECT_THROW(example4_delta_hedge(1.0, 0.5, h), DomainError);
}

TEST(DeltaHedge, GridHedgeHasSmallMeanError) {
  const TimeHorizon h{1.0, 201};
  std::vector<double> err(20000);
  for (std::size_t i = 0; i < err.size(); ++i) {
    PathStream rng(8, i);
    const GridPath g = stopped_brownian_path(h, rng);
    err[i] = integrate_delta_hedge(g, h).terminal_value - (g.terminal() > 0.0 ? 1.0 : 0.0);
  }
  EXPECT_TRUE(estimate_mean(err).within_se(0.0, 4.0));
}

TEST(DeltaHedge, OnTheFlyMatchesGridHedge) {
  const TimeHorizon h{1.0, 101};
  for (std::uint64_t i = 0; i < 50; ++i) {
    PathStream a(4, i), b(4, i);
    const GridPath g = stopped_brownian_path(h, a);
    const HedgeOutcome o = simulate_delta_hedge(h, b);
    ASSERT_NEAR(o.terminal_value, integrate_delta_hedge(g, h).terminal_value, 1e-12);
    ASSERT_EQ(o.claim, g.terminal() > 0.0 ? 1.0 : 0.0);
  }
}

TEST(DeltaHedge, ErrorShrinksWithRebalancing) {
  const HedgeConvergence c = delta_hedge_convergence(1.0, {10, 100, 1000}, 3000, 5, 1);
  ASSERT_EQ(c.rms.size(), 3u);
  ASSERT_EQ(c.ratios.size(), 2u);
  EXPECT_TRUE(c.decreasing());
  for (double r : c.ratios) EXPECT_GT(r, 1.5);
}

TEST(DeltaHedge, ConvergenceStudyIndependentOfWorkers) {
  const HedgeConvergence a = delta_hedge_convergence(1.0, {10, 100}, 500, 5, 1);
  const HedgeConvergence b = delta_hedge_convergence(1.0, {10, 100}, 500, 5, 4);
  EXPECT_EQ(a.rms, b.rms);
}

TEST(DeltaHedge, ConvergenceStudyRejectsNonNestedGrids) {
  EXPECT_THROW(delta_hedge_convergence(1.0, {30, 100}, 10, 1, 1), std::invalid_argument);
  EXPECT_THROW(delta_hedge_convergence(1.0, {}, 10, 1, 1), std::invalid_argument);
}

TEST(Price, CompleteMarketPrices) {
  MarketConfig cfg = compound(1.0, JumpLaw::degenerate());
  EXPECT_NEAR(superreplication_price_complete(cfg), 1.0 - std::exp(-1.0), 1e-15);
  cfg.model = ModelKind::StoppedBrownian;
  EXPECT_NEAR(superreplication_price_complete(cfg), 1.0 - 2.0 * normal_cdf(-1.0), 1e-15);
}

TEST(Price, IncompleteJumpLawHasNoClosedForm) {
  EXPECT_THROW(superreplication_price_complete(compound()), ConfigError);
}

TEST(Price, UncompensatedRejected) {
  MarketConfig cfg = compound(1.0, JumpLaw::degenerate());
  cfg.compensated = false;
  EXPECT_THROW(superreplication_price_complete(cfg), ConfigError);
}
