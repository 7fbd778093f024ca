#ifndef CLOCKSYNC_SYNTHESIS_H_
#define CLOCKSYNC_SYNTHESIS_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clocksync/dynamics.h"
#include "clocksync/pmp.h"

namespace clocksync {

// Structure of an optimal control, read left to right in time.
//   kZ    u = 0 throughout
//   kB0   u_max, then 0
//   kBZB  0, u_max, 0
//   kS0   u_s, then 0
//   kZS0  0, u_s, 0
//   kBS0  u_max, u_s, 0
enum class Regime { kZ, kB0, kBZB, kS0, kZS0, kBS0 };

inline constexpr Regime kAllRegimes[] = {Regime::kZ,   Regime::kB0,
                                         Regime::kBZB, Regime::kS0,
                                         Regime::kZS0, Regime::kBS0};

std::string_view RegimeName(Regime regime);
std::optional<Regime> ParseRegime(std::string_view name);

// Control values of each form, with "S" resolved to u_s.
std::vector<double> RegimeValues(Regime regime, const ModelParams& params);

struct SynthesisResult {
  ProblemInstance instance;
  PiecewiseControl control;
  Regime regime = Regime::kZ;
  std::vector<double> switch_times;
  double cost = 0.0;
  double terminal_r = 0.0;
  Extremal extremal;
  // Non-fatal findings, e.g. more than one terminal state reproducing r0.
  std::vector<std::string> diagnostics;
};

// Optimal control of `instance` by shooting on R(T). Throws
// SynthesisFailure if no terminal state reproduces r0.
SynthesisResult Synthesize(const ProblemInstance& instance);

// Form of the control after dropping segments shorter than 1e-10 T. Throws
// StructureViolation for any sequence outside the optimal forms.
Regime ClassifyControl(const PiecewiseControl& control,
                       const ProblemInstance& instance);
Regime Classify(const SynthesisResult& result);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Labels on a horizon x initial-state grid, row-major in horizon.
struct RegimeMap {
  std::vector<double> horizons;
  std::vector<double> initial_states;
  std::vector<Regime> labels;

  Regime at(size_t i_horizon, size_t j_state) const {
    return labels[i_horizon * initial_states.size() + j_state];
  }
};

// Grid points are equispaced and include both range ends (a single point
// sits at `lo`). Throws SynthesisFailure annotated with the failing cell.
RegimeMap ComputeRegimeMap(const ModelParams& params, Range horizon_range,
                           Range r0_range, int grid_horizons, int grid_states);

}  // namespace clocksync

#endif  // CLOCKSYNC_SYNTHESIS_H_
