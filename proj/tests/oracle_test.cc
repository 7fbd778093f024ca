#include "clocksync/oracle.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "clocksync/errors.h"
#include "clocksync/pmp.h"
#include "test_util.h"

namespace clocksync {
namespace {

ProblemInstance Instance(double alpha, double beta, double noise, double u_max,
                         double r0, double horizon) {
  ProblemInstance inst;
  inst.params.alpha = alpha;
  inst.params.beta = beta;
  inst.params.n_clients = 1;
  inst.params.sigma_sq = noise;
  inst.params.u_max = u_max;
  inst.r0 = r0;
  inst.horizon = horizon;
  return inst;
}

DpConfig Coarse() {
  DpConfig config;
  config.n_time = 400;
  config.n_state = 401;
  return config;
}

TEST(DpControlGridTest, ContainsDistinguishedValues) {
  ModelParams p;
  p.u_max = 2.0;
  p.alpha = 1.0;
  p.beta = 0.7;
  const std::vector<double> grid = DpControlGrid(p, 21);
  const double u_s = ComputeSingularData(p).u_s;
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 2.0);
  EXPECT_NE(std::find(grid.begin(), grid.end(), u_s), grid.end());
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_EQ(grid.size(), 22u);
  p.u_max = 0.5;
  EXPECT_EQ(DpControlGrid(p, 21).size(), 21u);
  p.u_max = 0.0;
  EXPECT_EQ(DpControlGrid(p, 21), std::vector<double>{0.0});
}

TEST(SolveDpTest, ZeroUpperBoundIsExact) {
  const ProblemInstance inst = Instance(1.5, 1, 2, 0, 0.7, 2);
  const DpSolution sol = SolveDp(inst, Coarse());
  const double expected = 1.5 * (0.7 * 2 + 2 * 4 / 2.0);
  EXPECT_NEAR(sol.cost, expected, 1e-12);
  EXPECT_NEAR(sol.grid_value, expected, 1e-9);
}

TEST(SolveDpTest, SingleStepPicksCheapestControl) {
  // Over a tiny step the energy term dominates the state term, so u = 0.
  const ProblemInstance inst = Instance(1, 1, 1, 2, 1, 1e-3);
  DpConfig config = Coarse();
  config.n_time = 1;
  const DpSolution sol = SolveDp(inst, config);
  EXPECT_EQ(sol.control.segments().size(), 1u);
  EXPECT_EQ(sol.control.segments()[0].u, 0.0);
  // With a huge state and free energy the largest control wins.
  const ProblemInstance expensive_state = Instance(1, 1e-9, 1, 2, 1e3, 1.0);
  const DpSolution sol2 = SolveDp(expensive_state, config);
  EXPECT_EQ(sol2.control.segments()[0].u, 2.0);
}

TEST(SolveDpTest, RejectsSmallStateGrid) {
  const ProblemInstance inst = Instance(1, 1, 1, 2, 1, 1);
  DpConfig config = Coarse();
  config.r_max = 1.5;
  EXPECT_THROW(SolveDp(inst, config), InvalidArgument);
  config.r_max = 0.0;
  config.n_state = 1;
  EXPECT_THROW(SolveDp(inst, config), InvalidArgument);
}

TEST(SolveDpTest, ControlIsFeasibleAndCostIsExact) {
  const ProblemInstance inst = Instance(1, 1, 1, 2, 3, 3);
  const DpSolution sol = SolveDp(inst, Coarse());
  EXPECT_NO_THROW(sol.control.Validate(inst.horizon, inst.params.u_max));
  EXPECT_DOUBLE_EQ(sol.cost, Cost(inst, sol.control));
}

TEST(SolveDpTest, AgreesWithSynthesisOnRandomInstances) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 6; ++i) {
    const ProblemInstance inst = testing::RandomInstance(rng, i % 2 == 0);
    const SynthesisResult res = Synthesize(inst);
    const DpSolution sol = SolveDp(inst, DpConfig{});
    EXPECT_LE(std::abs(sol.cost - res.cost), 0.02 * res.cost)
        << "instance " << i;
    // A feasible control cannot beat the optimum.
    EXPECT_GE(sol.cost, res.cost * (1 - 1e-9)) << "instance " << i;
  }
}

TEST(SolveDpTest, GridValueConvergesAtFirstOrder) {
  const ProblemInstance inst = Instance(1, 1, 1, 2, 3, 3);
  const double exact = Synthesize(inst).cost;
  double previous_error = 0.0;
  for (int n : {200, 400, 800}) {
    DpConfig config;
    config.n_time = n;
    config.n_state = n + 1;
    const double error = std::abs(SolveDp(inst, config).grid_value - exact);
    if (previous_error > 0.0) {
      EXPECT_GT(previous_error / error, 1.8);
      EXPECT_LT(previous_error / error, 2.2);
    }
    previous_error = error;
  }
}

TEST(ParametricSearchTest, ZeroFormHasNoParameters) {
  const ProblemInstance inst = Instance(1, 1, 1, 2, 1, 3);
  const ParametricResult res = ParametricSearch(inst, Regime::kZ, 50);
  EXPECT_TRUE(res.switch_times.empty());
  EXPECT_DOUBLE_EQ(res.cost,
                   Cost(inst, PiecewiseControl::Constant(0.0, inst.horizon)));
}

TEST(ParametricSearchTest, SingularFormMatchesSynthesis) {
  const ProblemInstance inst = Instance(1, 1, 1, 2, 1, 3);
  const int grid = 100;
  const ParametricResult res = ParametricSearch(inst, Regime::kS0, grid);
  const SynthesisResult synth = Synthesize(inst);
  ASSERT_EQ(res.switch_times.size(), 1u);
  EXPECT_NEAR(res.switch_times[0], synth.switch_times[0],
              inst.horizon / grid);
  EXPECT_NEAR(res.cost, synth.cost, 1e-9 * synth.cost);
}

TEST(ParametricSearchTest, ThreePieceFormsKeepOrder) {
  const ProblemInstance inst = Instance(1, 1, 1, 0.5, 0.2, 6);
  const ParametricResult res = ParametricSearch(inst, Regime::kBZB, 60);
  ASSERT_EQ(res.switch_times.size(), 2u);
  EXPECT_LE(res.switch_times[0], res.switch_times[1]);
  EXPECT_DOUBLE_EQ(res.cost, Cost(inst, res.control));
}

TEST(ParametricSearchTest, SingularFormNeedsAdmissibleControl) {
  const ProblemInstance inst = Instance(1, 1, 1, 0.5, 1, 3);
  EXPECT_THROW(ParametricSearch(inst, Regime::kZS0, 20), InvalidArgument);
}

TEST(ParametricSearchTest, BestStructureNeverBeatsDpBeyondGridError) {
  std::mt19937_64 rng(62);
  for (int i = 0; i < 6; ++i) {
    const ProblemInstance inst = testing::RandomInstance(rng, i % 2 == 0);
    double best = std::numeric_limits<double>::infinity();
    for (Regime form : AdmissibleStructures(inst.params)) {
      best = std::min(best, ParametricSearch(inst, form, 100).cost);
    }
    DpConfig coarse;
    coarse.n_time = 500;
    coarse.n_state = 501;
    const DpSolution low = SolveDp(inst, coarse);
    const DpSolution high = SolveDp(inst, DpConfig{});
    const double grid_error = std::abs(high.grid_value - low.grid_value);
    EXPECT_GE(best, high.grid_value - grid_error) << "instance " << i;
    EXPECT_LE(best, high.cost * (1 + 1e-9)) << "instance " << i;
  }
}

TEST(AdmissibleStructuresTest, DependsOnSingularAdmissibility) {
  ModelParams p;
  p.u_max = 2;
  EXPECT_EQ(AdmissibleStructures(p).size(), 6u);
  p.u_max = 0.5;
  EXPECT_EQ(AdmissibleStructures(p),
            (std::vector<Regime>{Regime::kZ, Regime::kB0, Regime::kBZB}));
  p.u_max = 0;
  EXPECT_EQ(AdmissibleStructures(p), std::vector<Regime>{Regime::kZ});
}

}  // namespace
}  // namespace clocksync
