#include "clocksync/pmp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clocksync/errors.h"

namespace clocksync {
namespace {

// Backward-time roots closer to zero than this are the starting point itself.
constexpr double kMinEventTime = 1e-12;
// No valid extremal has more than a handful of arcs; this only guards
// against a pathological loop.
constexpr int kMaxArcs = 16;

double CurveTolerance(const ModelParams& params) {
  return kSwitchingCurveTolerance * std::max(1.0, params.beta);
}

// Real roots of a x^2 + b x + c = 0 in ascending order (cancellation-free).
std::vector<double> QuadraticRoots(double a, double b, double c) {
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  std::vector<double> roots;
  if (q != 0.0) {
    roots = {q / a, c / q};
  } else {
    roots = {0.0, 0.0};
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// u = 0 arc: -H1 along backward time s is alpha K s^2 - (r alpha + K psi) s
// + (beta + r psi).
struct ZeroArcQuadratic {
  double a, b, c;
};

ZeroArcQuadratic ZeroQuadratic(double r, double psi,
                               const ModelParams& params) {
  const double k = params.NoiseRate();
  return {params.alpha * k, -(r * params.alpha + k * psi),
          params.beta + r * psi};
}

// u = u_max arc: with z = e^{u s}, z H1 = a z^2 + b z + c.
struct BangArcQuadratic {
  double a, b, c;
};

BangArcQuadratic BangQuadratic(double r, double psi,
                               const ModelParams& params) {
  const double u = params.u_max;
  const double k = params.NoiseRate();
  const double state = r - k / u;
  const double adjoint = psi + params.alpha / u;
  return {params.alpha * state / u,
          params.alpha * k / (u * u) - params.beta - state * adjoint,
          -k * adjoint / u};
}

std::optional<SwitchEvent> ZeroArcEvent(double r, double psi, double remaining,
                                        const ModelParams& params) {
  const ZeroArcQuadratic q = ZeroQuadratic(r, psi, params);
  const double vertex = -q.b / (2.0 * q.a);
  const double min_value = q.c - q.b * q.b / (4.0 * q.a);
  if (std::abs(min_value) <= CurveTolerance(params)) {
    if (vertex > kMinEventTime && vertex <= remaining) {
      return SwitchEvent{vertex, true};
    }
    return std::nullopt;
  }
  for (double s : QuadraticRoots(q.a, q.b, q.c)) {
    if (s > kMinEventTime) {
      if (s <= remaining) return SwitchEvent{s, false};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<SwitchEvent> BangArcEvent(double r, double psi, double remaining,
                                        const ModelParams& params) {
  const double u = params.u_max;
  const BangArcQuadratic q = BangQuadratic(r, psi, params);
  auto within = [&](double z) -> std::optional<double> {
    if (!(z > 1.0)) return std::nullopt;
    const double s = std::log(z) / u;
    if (s <= kMinEventTime || s > remaining) return std::nullopt;
    return s;
  };
  if (q.a != 0.0) {
    const double vertex = -q.b / (2.0 * q.a);
    const double min_value = q.c - q.b * q.b / (4.0 * q.a);
    if (vertex > 1.0 &&
        std::abs(min_value / vertex) <= CurveTolerance(params)) {
      if (auto s = within(vertex)) return SwitchEvent{*s, true};
      return std::nullopt;
    }
  }
  for (double z : QuadraticRoots(q.a, q.b, q.c)) {
    if (z > 1.0) {
      if (auto s = within(z)) return SwitchEvent{*s, false};
      // The root lies beyond the horizon or within round-off of the start.
      if (std::log(z) / u > kMinEventTime) return std::nullopt;
    }
  }
  return std::nullopt;
}

// Start point already on the curve: one root is the start itself, the other
// follows from the sum of roots.
std::optional<SwitchEvent> EventFromCurve(double r, double psi, double u,
                                          double remaining,
                                          const ModelParams& params) {
  if (u == 0.0) {
    const ZeroArcQuadratic q = ZeroQuadratic(r, psi, params);
    const double s = -q.b / q.a;
    if (s > kMinEventTime && s <= remaining) return SwitchEvent{s, false};
    return std::nullopt;
  }
  const BangArcQuadratic q = BangQuadratic(r, psi, params);
  if (q.a == 0.0) return std::nullopt;
  const double z = -q.b / q.a - 1.0;
  if (!(z > 1.0)) return std::nullopt;
  const double s = std::log(z) / u;
  if (s > kMinEventTime && s <= remaining) return SwitchEvent{s, false};
  return std::nullopt;
}

ExtremalArc MakeArc(ArcKind kind, double u, double t_start, double t_end,
                    PhasePoint end, const ModelParams& params) {
  const double k = params.NoiseRate();
  const double alpha = params.alpha;
  const double d = t_end - t_start;
  ExtremalArc arc;
  arc.kind = kind;
  arc.u = u;
  arc.t_start = t_start;
  arc.t_end = t_end;
  arc.r_end = end.r;
  arc.psi_end = end.psi;
  switch (kind) {
    case ArcKind::kZero:
      arc.r_start = end.r - k * d;
      arc.psi_start = end.psi - alpha * d;
      arc.line_offset = end.psi - alpha / k * end.r;
      break;
    case ArcKind::kBang: {
      const double state_end = end.r - k / u;
      const double adjoint_end = end.psi + alpha / u;
      arc.state_coeff = state_end * std::exp(u * d);
      arc.adjoint_coeff = adjoint_end * std::exp(-u * d);
      arc.r_start = arc.state_coeff + k / u;
      arc.psi_start = arc.adjoint_coeff - alpha / u;
      arc.orbit_invariant = u * u * std::abs(state_end * adjoint_end);
      break;
    }
    case ArcKind::kSingular:
      arc.r_start = end.r;
      arc.psi_start = end.psi;
      break;
  }
  return arc;
}

}  // namespace

double Hamiltonian(double r, double psi, double u, const ModelParams& params) {
  return -(params.alpha * r + params.beta * u) +
         psi * (-u * r + params.NoiseRate());
}

double SwitchingFunction(double r, double psi, const ModelParams& params) {
  return -params.beta - r * psi;
}

SwitchingDerivatives SwitchingFunctionDerivatives(double r, double psi,
                                                  const ModelParams& params) {
  const double k = params.NoiseRate();
  return {-k * psi - params.alpha * r, params.alpha * r - k * psi};
}

SingularData ComputeSingularData(const ModelParams& params) {
  const double k = params.NoiseRate();
  SingularData data;
  data.r_s = std::sqrt(k * params.beta / params.alpha);
  data.psi_s = -std::sqrt(params.alpha * params.beta / k);
  data.u_s = std::sqrt(params.alpha * k / params.beta);
  data.admissible = data.u_s <= params.u_max;
  return data;
}

PhasePoint ExtremalArc::StateAt(double t, const ModelParams& params) const {
  const double back = std::clamp(t_end - t, 0.0, duration());
  switch (kind) {
    case ArcKind::kZero:
      return {r_end - params.NoiseRate() * back, psi_end - params.alpha * back};
    case ArcKind::kBang: {
      const double k_over_u = params.NoiseRate() / u;
      const double alpha_over_u = params.alpha / u;
      return {(r_end - k_over_u) * std::exp(u * back) + k_over_u,
              (psi_end + alpha_over_u) * std::exp(-u * back) - alpha_over_u};
    }
    case ArcKind::kSingular:
      return {r_end, psi_end};
  }
  return {r_end, psi_end};
}

const ExtremalArc& Extremal::ArcAt(double t) const {
  if (arcs_.empty()) throw InvalidArgument("empty extremal");
  auto it = std::upper_bound(
      arcs_.begin(), arcs_.end(), t,
      [](double value, const ExtremalArc& a) { return value < a.t_end; });
  if (it == arcs_.end()) return arcs_.back();
  return *it;
}

PhasePoint Extremal::StateAt(double t, const ModelParams& params) const {
  return ArcAt(t).StateAt(t, params);
}

PiecewiseControl Extremal::ToControl(double min_length) const {
  std::vector<double> switches;
  std::vector<double> values;
  for (size_t i = 0; i < arcs_.size(); ++i) {
    if (i > 0) switches.push_back(arcs_[i].t_start);
    values.push_back(arcs_[i].u);
  }
  return PiecewiseControl::FromSwitchTimes(switches, values, horizon_,
                                           min_length);
}

std::optional<SwitchEvent> NextEventBackward(double r, double psi, double u,
                                             double remaining,
                                             const ModelParams& params) {
  if (!(remaining >= 0)) throw InvalidArgument("remaining must be >= 0");
  if (std::abs(SwitchingFunction(r, psi, params)) <= CurveTolerance(params)) {
    throw AtSwitchingCurve("start point lies on the switching curve");
  }
  if (u == 0.0) return ZeroArcEvent(r, psi, remaining, params);
  if (u == params.u_max) return BangArcEvent(r, psi, remaining, params);
  throw InvalidArgument("event detection needs u = 0 or u = umax");
}

Extremal BuildBackwardExtremal(const ModelParams& params, double terminal_r,
                               double horizon, const BackwardOptions& options) {
  if (!(terminal_r >= 0)) throw InvalidArgument("terminal_r must be >= 0");
  if (!(horizon > 0)) throw InvalidArgument("horizon must be > 0");
  if (!(options.singular_dwell >= 0)) {
    throw InvalidArgument("singular_dwell must be >= 0");
  }
  if (options.incoming == ArcKind::kSingular) {
    throw InvalidArgument("incoming branch must be kZero or kBang");
  }
  const SingularData singular = ComputeSingularData(params);
  const double u_max = params.u_max;

  std::vector<ExtremalArc> reversed;
  double t = horizon;
  PhasePoint point{terminal_r, 0.0};
  ArcKind kind = ArcKind::kZero;
  bool on_curve = false;
  bool captured = false;

  while (t > 0.0) {
    if (static_cast<int>(reversed.size()) >= kMaxArcs) {
      throw std::logic_error("backward extremal did not terminate");
    }
    if (u_max == 0.0) kind = ArcKind::kZero;
    const double u = kind == ArcKind::kZero ? 0.0 : u_max;

    std::optional<SwitchEvent> event;
    if (u_max > 0.0) {
      event = on_curve ? EventFromCurve(point.r, point.psi, u, t, params)
                       : NextEventBackward(point.r, point.psi, u, t, params);
    }
    bool capture = false;
    if (event && event->tangential) {
      // A touch of the curve by a u = 0 orbit happens exactly at the
      // singular point; it is a capture only if the singular control is
      // admissible, otherwise the orbit just grazes the curve.
      if (kind == ArcKind::kZero && singular.admissible && !captured) {
        capture = true;
      } else {
        event.reset();
      }
    }

    const double dt = event ? std::min(event->dt, t) : t;
    ExtremalArc arc = MakeArc(kind, u, t - dt, t, point, params);
    if (capture) {
      arc.r_start = singular.r_s;
      arc.psi_start = singular.psi_s;
    }
    reversed.push_back(arc);
    t -= dt;
    point = {arc.r_start, arc.psi_start};
    if (!event || t <= 0.0) break;

    if (capture) {
      captured = true;
      const double dwell = std::min(options.singular_dwell, t);
      if (dwell > 0.0) {
        reversed.push_back(MakeArc(ArcKind::kSingular, singular.u_s, t - dwell,
                                   t, point, params));
        t -= dwell;
      }
      kind = options.incoming;
    } else {
      kind = kind == ArcKind::kZero ? ArcKind::kBang : ArcKind::kZero;
    }
    on_curve = true;
  }

  if (options.singular_dwell > 0.0 && !captured) {
    throw InvalidArgument(
        "singular_dwell > 0 but the orbit never reaches the singular point");
  }
  std::reverse(reversed.begin(), reversed.end());
  reversed.front().t_start = 0.0;
  return Extremal(std::move(reversed), horizon);
}

}  // namespace clocksync
