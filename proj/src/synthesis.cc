#include "clocksync/synthesis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clocksync/errors.h"

namespace clocksync {
namespace {

constexpr int kScanPoints = 64;
constexpr int kMaxBisections = 200;
constexpr double kTerminalTolerance = 1e-12;
constexpr double kMergeFraction = 1e-10;

double InitialStateTolerance(double r0) { return 1e-9 * std::max(1.0, r0); }

// Closed-form member of the singular family: 0 or u_max up to the singular
// point, dwell there, then the u = 0 tail whose length r_s / K is fixed by
// psi(T) = 0.
std::optional<Extremal> SingularFamily(const ProblemInstance& instance,
                                       const SingularData& singular,
                                       std::vector<std::string>& diagnostics) {
  const ModelParams& p = instance.params;
  const double k = p.NoiseRate();
  const double r0 = instance.r0;
  const double horizon = instance.horizon;
  const double tail = singular.r_s / k;

  double pre = 0.0;
  ArcKind incoming = ArcKind::kZero;
  if (r0 < singular.r_s) {
    pre = (singular.r_s - r0) / k;
  } else if (r0 > singular.r_s) {
    const double equilibrium = k / p.u_max;
    // With u_max = u_s the bang orbit only approaches r_s asymptotically.
    if (!(singular.r_s > equilibrium)) return std::nullopt;
    pre = std::log((r0 - equilibrium) / (singular.r_s - equilibrium)) /
          p.u_max;
    incoming = ArcKind::kBang;
  }
  double dwell = horizon - tail - pre;
  if (dwell < -kMergeFraction * horizon) return std::nullopt;
  dwell = std::max(0.0, dwell);

  Extremal extremal;
  try {
    extremal = BuildBackwardExtremal(p, 2.0 * singular.r_s, horizon,
                                     {dwell, incoming});
  } catch (const InvalidArgument& e) {
    diagnostics.push_back(std::string("singular family rejected: ") + e.what());
    return std::nullopt;
  }
  if (std::abs(extremal.initial_r() - r0) > InitialStateTolerance(r0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "singular family missed r0: R(0) = " << extremal.initial_r();
    diagnostics.push_back(msg.str());
    return std::nullopt;
  }
  return extremal;
}

struct ShootingSample {
  double terminal_r;
  double residual;  // R(0) - r0
};

ShootingSample Evaluate(const ProblemInstance& instance, double terminal_r) {
  const Extremal e =
      BuildBackwardExtremal(instance.params, terminal_r, instance.horizon);
  return {terminal_r, e.initial_r() - instance.r0};
}

// Bisection inside a sign-change bracket. Keeps going past the terminal
// tolerance while R(0) is still off, since dR(0)/dR(T) can be large on long
// bang arcs.
ShootingSample Bisect(const ProblemInstance& instance, ShootingSample lo,
                      ShootingSample hi) {
  const double target = InitialStateTolerance(instance.r0) * 1e-3;
  for (int i = 0; i < kMaxBisections; ++i) {
    const double mid = 0.5 * (lo.terminal_r + hi.terminal_r);
    if (mid <= lo.terminal_r || mid >= hi.terminal_r) break;
    const ShootingSample m = Evaluate(instance, mid);
    if (m.residual == 0.0) return m;
    if ((m.residual < 0.0) == (lo.residual < 0.0)) {
      lo = m;
    } else {
      hi = m;
    }
    const double width = hi.terminal_r - lo.terminal_r;
    if (width <= kTerminalTolerance * std::max(1.0, hi.terminal_r) &&
        std::min(std::abs(lo.residual), std::abs(hi.residual)) <= target) {
      break;
    }
  }
  return std::abs(lo.residual) <= std::abs(hi.residual) ? lo : hi;
}

Extremal Shoot(const ProblemInstance& instance,
               std::vector<std::string>& diagnostics) {
  const double k = instance.params.NoiseRate();
  const double upper = instance.r0 + k * instance.horizon;
  const double tol = InitialStateTolerance(instance.r0);

  std::vector<ShootingSample> scan;
  scan.reserve(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    scan.push_back(Evaluate(instance, upper * i / (kScanPoints - 1)));
  }

  std::vector<ShootingSample> roots;
  auto add_root = [&](const ShootingSample& s) {
    for (const ShootingSample& r : roots) {
      if (std::abs(r.terminal_r - s.terminal_r) <=
          1e-9 * std::max(1.0, s.terminal_r)) {
        return;
      }
    }
    roots.push_back(s);
  };
  for (int i = 0; i < kScanPoints; ++i) {
    if (std::abs(scan[i].residual) <= tol) add_root(scan[i]);
    if (i + 1 < kScanPoints &&
        (scan[i].residual < 0.0) != (scan[i + 1].residual < 0.0) &&
        std::abs(scan[i].residual) > tol &&
        std::abs(scan[i + 1].residual) > tol) {
      const ShootingSample s = Bisect(instance, scan[i], scan[i + 1]);
      // A bracket across a jump of R(0) converges without hitting r0.
      if (std::abs(s.residual) <= tol) add_root(s);
    }
  }

  if (roots.empty()) {
    SynthesisFailure::Scan payload;
    for (const ShootingSample& s : scan) {
      payload.emplace_back(s.terminal_r, s.residual + instance.r0);
    }
    std::ostringstream msg;
    msg.precision(17);
    msg << "no terminal state reproduces r0 = " << instance.r0
        << " (horizon " << instance.horizon << ")";
    throw SynthesisFailure(msg.str(), std::move(payload));
  }

  const double min_length = kMergeFraction * instance.horizon;
  Extremal best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const ShootingSample& root : roots) {
    Extremal e = BuildBackwardExtremal(instance.params, root.terminal_r,
                                       instance.horizon);
    const double c = Cost(instance, e.ToControl(min_length));
    if (c < best_cost) {
      best_cost = c;
      best = std::move(e);
    }
  }
  if (roots.size() > 1) {
    std::ostringstream msg;
    msg.precision(17);
    msg << roots.size() << " terminal states reproduce r0:";
    for (const ShootingSample& r : roots) msg << ' ' << r.terminal_r;
    diagnostics.push_back(msg.str());
  }
  return best;
}

char Symbol(double u, const ModelParams& params, const SingularData& s) {
  auto same = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
  };
  if (s.admissible && same(u, s.u_s)) return 'S';
  if (u == 0.0) return '0';
  if (params.u_max > 0.0 && same(u, params.u_max)) return 'B';
  return '?';
}

}  // namespace

std::string_view RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kZ:
      return "Z";
    case Regime::kB0:
      return "B0";
    case Regime::kBZB:
      return "BZB";
    case Regime::kS0:
      return "S0";
    case Regime::kZS0:
      return "ZS0";
    case Regime::kBS0:
      return "BS0";
  }
  return "?";
}

std::optional<Regime> ParseRegime(std::string_view name) {
  for (Regime r : kAllRegimes) {
    if (RegimeName(r) == name) return r;
  }
  return std::nullopt;
}

std::vector<double> RegimeValues(Regime regime, const ModelParams& params) {
  const double b = params.u_max;
  const double s = ComputeSingularData(params).u_s;
  switch (regime) {
    case Regime::kZ:
      return {0.0};
    case Regime::kB0:
      return {b, 0.0};
    case Regime::kBZB:
      return {0.0, b, 0.0};
    case Regime::kS0:
      return {s, 0.0};
    case Regime::kZS0:
      return {0.0, s, 0.0};
    case Regime::kBS0:
      return {b, s, 0.0};
  }
  return {};
}

SynthesisResult Synthesize(const ProblemInstance& instance) {
  instance.Validate();
  const ModelParams& params = instance.params;
  const SingularData singular = ComputeSingularData(params);

  SynthesisResult result;
  result.instance = instance;
  std::optional<Extremal> extremal;
  if (singular.admissible && params.u_max > 0.0) {
    extremal = SingularFamily(instance, singular, result.diagnostics);
  }
  if (!extremal) extremal = Shoot(instance, result.diagnostics);

  result.extremal = std::move(*extremal);
  result.control = result.extremal.ToControl(kMergeFraction * instance.horizon);
  result.regime = ClassifyControl(result.control, instance);
  result.switch_times = result.control.SwitchTimes();
  result.cost = Cost(instance, result.control);
  result.terminal_r = result.extremal.terminal_r();
  return result;
}

Regime ClassifyControl(const PiecewiseControl& control,
                       const ProblemInstance& instance) {
  control.Validate(instance.horizon, instance.params.u_max);
  const SingularData singular = ComputeSingularData(instance.params);
  std::vector<double> switches;
  std::vector<double> values;
  for (const ControlSegment& s : control.segments()) {
    if (!values.empty()) switches.push_back(s.t_start);
    values.push_back(s.u);
  }
  const PiecewiseControl merged = PiecewiseControl::FromSwitchTimes(
      switches, values, instance.horizon, kMergeFraction * instance.horizon);

  std::string pattern;
  for (const ControlSegment& s : merged.segments()) {
    const char c = Symbol(s.u, instance.params, singular);
    if (pattern.empty() || pattern.back() != c) pattern.push_back(c);
  }
  if (pattern == "0") return Regime::kZ;
  if (pattern == "B0") return Regime::kB0;
  if (pattern == "0B0") return Regime::kBZB;
  if (pattern == "S0") return Regime::kS0;
  if (pattern == "0S0") return Regime::kZS0;
  if (pattern == "BS0") return Regime::kBS0;
  throw StructureViolation("control pattern '" + pattern +
                           "' is not an optimal form");
}

Regime Classify(const SynthesisResult& result) {
  return ClassifyControl(result.control, result.instance);
}

RegimeMap ComputeRegimeMap(const ModelParams& params, Range horizon_range,
                           Range r0_range, int grid_horizons,
                           int grid_states) {
  params.Validate();
  if (grid_horizons < 1 || grid_states < 1) {
    throw InvalidArgument("grid dimensions must be >= 1");
  }
  if (!(horizon_range.lo > 0 && horizon_range.hi >= horizon_range.lo)) {
    throw InvalidArgument("horizon range must be positive and ordered");
  }
  if (!(r0_range.lo >= 0 && r0_range.hi >= r0_range.lo)) {
    throw InvalidArgument("r0 range must be nonnegative and ordered");
  }
  auto axis = [](Range r, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (n - 1);
    }
    return v;
  };

  RegimeMap map;
  map.horizons = axis(horizon_range, grid_horizons);
  map.initial_states = axis(r0_range, grid_states);
  map.labels.reserve(static_cast<size_t>(grid_horizons) * grid_states);
  for (int i = 0; i < grid_horizons; ++i) {
    for (int j = 0; j < grid_states; ++j) {
      ProblemInstance instance{params, map.initial_states[j], map.horizons[i]};
      try {
        map.labels.push_back(Synthesize(instance).regime);
      } catch (const SynthesisFailure& e) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "regime map cell (" << i << ", " << j << ") T = "
            << map.horizons[i] << " r0 = " << map.initial_states[j] << ": "
            << e.what();
        throw SynthesisFailure(msg.str(), e.scan());
      }
    }
  }
  return map;
}

}  // namespace clocksync
