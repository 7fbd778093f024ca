#include "clocksync/oracle.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "clocksync/errors.h"
#include "clocksync/pmp.h"

namespace clocksync {
namespace {

// One exact time step under a constant control, affine in the state:
//   r' = decay r + gain,   stage cost = cost_slope r + cost_offset.
struct StepMap {
  double u;
  double decay;
  double gain;
  double cost_slope;
  double cost_offset;
};

StepMap MakeStepMap(double u, double dt, const ModelParams& p) {
  const double x = u * dt;
  const double k = p.NoiseRate();
  return {u, std::exp(-x), k * dt * internal::Phi1(x),
          p.alpha * dt * internal::Phi1(x),
          p.alpha * k * dt * dt * internal::Phi2(x) + p.beta * u * dt};
}

// Linear interpolation on the uniform grid; beyond the last node the last
// cell is extrapolated (only states unreachable from r0 go there).
double Interpolate(const double* values, int n, double h, double r) {
  const double x = r / h;
  int j = static_cast<int>(x);
  if (j >= n - 1) j = n - 2;
  if (j < 0) j = 0;
  const double w = x - j;
  return values[j] + w * (values[j + 1] - values[j]);
}

double GoldenSection(const std::function<double(double)>& f, double lo,
                     double hi, double* best_value) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < 80 && b - a > 1e-13 * std::max(1.0, std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  // Endpoints may beat the interior (the optimum sits on a bound).
  double x = fc < fd ? c : d;
  double fx = std::min(fc, fd);
  for (double e : {lo, hi}) {
    const double fe = f(e);
    if (fe < fx) {
      fx = fe;
      x = e;
    }
  }
  *best_value = fx;
  return x;
}

}  // namespace

std::vector<double> DpControlGrid(const ModelParams& params, int n_control) {
  if (n_control < 2) throw InvalidArgument("n_control must be >= 2");
  std::vector<double> grid;
  if (params.u_max == 0.0) return {0.0};
  for (int i = 0; i < n_control; ++i) {
    grid.push_back(i == n_control - 1 ? params.u_max
                                      : params.u_max * i / (n_control - 1));
  }
  const SingularData singular = ComputeSingularData(params);
  if (singular.admissible &&
      std::find(grid.begin(), grid.end(), singular.u_s) == grid.end()) {
    grid.insert(std::upper_bound(grid.begin(), grid.end(), singular.u_s),
                singular.u_s);
  }
  return grid;
}

DpSolution SolveDp(const ProblemInstance& instance, const DpConfig& config) {
  instance.Validate();
  if (config.n_time < 1) throw InvalidArgument("n_time must be >= 1");
  if (config.n_state < 2) throw InvalidArgument("n_state must be >= 2");
  const ModelParams& p = instance.params;
  const double reach = instance.r0 + p.NoiseRate() * instance.horizon;
  const double r_max = config.r_max > 0.0 ? config.r_max : reach;
  if (r_max < reach * (1.0 - 1e-12)) {
    throw InvalidArgument("r_max must be >= r0 + N sigma^2 T");
  }

  const int n_time = config.n_time;
  const int n_state = config.n_state;
  const double dt = instance.horizon / n_time;
  const double h = r_max / (n_state - 1);
  std::vector<StepMap> steps;
  for (double u : DpControlGrid(p, config.n_control)) {
    steps.push_back(MakeStepMap(u, dt, p));
  }

  // value[k * n_state + i] = cost-to-go from state i h at time k dt.
  std::vector<double> value(static_cast<size_t>(n_time + 1) * n_state, 0.0);
  for (int k = n_time - 1; k >= 0; --k) {
    const double* next = &value[static_cast<size_t>(k + 1) * n_state];
    double* cur = &value[static_cast<size_t>(k) * n_state];
    for (int i = 0; i < n_state; ++i) {
      const double r = i * h;
      double best = std::numeric_limits<double>::infinity();
      for (const StepMap& s : steps) {
        const double candidate = s.cost_slope * r + s.cost_offset +
                                 Interpolate(next, n_state, h,
                                             s.decay * r + s.gain);
        best = std::min(best, candidate);
      }
      cur[i] = best;
    }
  }

  std::vector<double> switches;
  std::vector<double> values;
  double r = instance.r0;
  for (int k = 0; k < n_time; ++k) {
    const double* next = &value[static_cast<size_t>(k + 1) * n_state];
    const StepMap* best_step = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const StepMap& s : steps) {
      const double candidate = s.cost_slope * r + s.cost_offset +
                               Interpolate(next, n_state, h,
                                           s.decay * r + s.gain);
      if (candidate < best) {
        best = candidate;
        best_step = &s;
      }
    }
    r = best_step->decay * r + best_step->gain;
    if (r > r_max * (1.0 + 1e-12)) {
      throw OracleError("DP rollout left the state grid");
    }
    if (values.empty() || values.back() != best_step->u) {
      if (!values.empty()) switches.push_back(instance.horizon * k / n_time);
      values.push_back(best_step->u);
    }
  }

  DpSolution solution;
  solution.control =
      PiecewiseControl::FromSwitchTimes(switches, values, instance.horizon);
  solution.cost = Cost(instance, solution.control);
  solution.grid_value = Interpolate(value.data(), n_state, h, instance.r0);
  return solution;
}

std::vector<Regime> AdmissibleStructures(const ModelParams& params) {
  if (params.u_max == 0.0) return {Regime::kZ};
  std::vector<Regime> out = {Regime::kZ, Regime::kB0, Regime::kBZB};
  if (ComputeSingularData(params).admissible) {
    out.insert(out.end(), {Regime::kS0, Regime::kZS0, Regime::kBS0});
  }
  return out;
}

ParametricResult ParametricSearch(const ProblemInstance& instance,
                                  Regime structure, int grid) {
  instance.Validate();
  if (grid < 2) throw InvalidArgument("grid must be >= 2");
  const ModelParams& p = instance.params;
  const std::vector<double> values = RegimeValues(structure, p);
  for (double u : values) {
    if (u > p.u_max) {
      throw InvalidArgument(std::string("structure ") +
                            std::string(RegimeName(structure)) +
                            " needs u_s <= umax");
    }
  }
  const double horizon = instance.horizon;
  auto evaluate = [&](std::span<const double> switches) {
    return Cost(instance, PiecewiseControl::FromSwitchTimes(switches, values,
                                                            horizon));
  };
  auto finish = [&](std::vector<double> switches, double cost) {
    ParametricResult result;
    result.control =
        PiecewiseControl::FromSwitchTimes(switches, values, horizon);
    result.switch_times = std::move(switches);
    result.cost = cost;
    return result;
  };

  const size_t n_switch = values.size() - 1;
  const double step = horizon / (grid - 1);
  auto node = [&](int i) { return i == grid - 1 ? horizon : step * i; };

  if (n_switch == 0) return finish({}, evaluate({}));

  if (n_switch == 1) {
    int best_i = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const std::array<double, 1> s = {node(i)};
      const double c = evaluate(s);
      if (c < best) {
        best = c;
        best_i = i;
      }
    }
    double refined = best;
    const double t1 = GoldenSection(
        [&](double t) {
          const std::array<double, 1> s = {t};
          return evaluate(s);
        },
        node(std::max(0, best_i - 1)), node(std::min(grid - 1, best_i + 1)),
        &refined);
    if (refined < best) return finish({t1}, refined);
    return finish({node(best_i)}, best);
  }

  // Two switch times, t1 <= t2.
  int best_i = 0;
  int best_j = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    for (int j = i; j < grid; ++j) {
      const std::array<double, 2> s = {node(i), node(j)};
      const double c = evaluate(s);
      if (c < best) {
        best = c;
        best_i = i;
        best_j = j;
      }
    }
  }
  std::array<double, 2> s = {node(best_i), node(best_j)};
  for (int sweep = 0; sweep < 6; ++sweep) {
    for (int coord = 0; coord < 2; ++coord) {
      const double lo = coord == 0 ? std::max(0.0, s[0] - step)
                                   : std::max(s[0], s[1] - step);
      const double hi = coord == 0 ? std::min(s[1], s[0] + step)
                                   : std::min(horizon, s[1] + step);
      if (!(hi > lo)) continue;
      double refined = best;
      const double t = GoldenSection(
          [&](double x) {
            std::array<double, 2> trial = s;
            trial[coord] = x;
            return evaluate(trial);
          },
          lo, hi, &refined);
      if (refined < best) {
        best = refined;
        s[coord] = t;
      }
    }
  }
  return finish({s[0], s[1]}, best);
}

}  // namespace clocksync
