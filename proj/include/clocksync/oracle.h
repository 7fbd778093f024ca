#ifndef CLOCKSYNC_ORACLE_H_
#define CLOCKSYNC_ORACLE_H_

// Brute-force solvers used to check the maximum-principle synthesis. They
// share only the closed-form propagation and cost of dynamics.h with it.

#include <vector>

#include "clocksync/dynamics.h"
#include "clocksync/synthesis.h"

namespace clocksync {

struct DpConfig {
  int n_time = 2000;
  int n_state = 2001;
  // Uniform grid on [0, u_max]; u_s is added when admissible.
  int n_control = 21;
  // Upper end of the state grid; <= 0 selects r0 + N sigma^2 T.
  double r_max = 0.0;
};

struct DpSolution {
  // Exact cost of `control` (a feasible control, so an upper bound on the
  // optimum up to round-off).
  double cost = 0.0;
  // Value function at (t = 0, r0), interpolated.
  double grid_value = 0.0;
  PiecewiseControl control;
};

// Backward value iteration on a time x state grid with exact one-step
// transitions and linear interpolation in state; the control is the greedy
// forward rollout. Throws OracleError if the rollout leaves the grid.
DpSolution SolveDp(const ProblemInstance& instance, const DpConfig& config);

// Control grid used by SolveDp.
std::vector<double> DpControlGrid(const ModelParams& params, int n_control);

struct ParametricResult {
  double cost = 0.0;
  std::vector<double> switch_times;
  PiecewiseControl control;
};

// Best control of the given form: exhaustive search over switch times on a
// `grid`-point lattice of [0, T] (t1 <= t2 for three-piece forms), refined
// by golden-section coordinate sweeps. Costs are exact.
ParametricResult ParametricSearch(const ProblemInstance& instance,
                                  Regime structure, int grid);

// Forms available for the parameters: {Z, B0, BZB}, plus the singular forms
// when u_s <= u_max.
std::vector<Regime> AdmissibleStructures(const ModelParams& params);

}  // namespace clocksync

#endif  // CLOCKSYNC_ORACLE_H_
