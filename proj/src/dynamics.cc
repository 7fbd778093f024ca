#include "clocksync/dynamics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "clocksync/errors.h"

namespace clocksync {
namespace {

constexpr double kSeriesThreshold = 1e-12;

double BoundaryTolerance(double horizon) {
  return 1e-12 * std::max(1.0, horizon);
}

void RequireFinite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be finite");
  }
}

}  // namespace

namespace internal {

double Phi1(double x) {
  if (x < kSeriesThreshold) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

double Phi2(double x) {
  if (x < 0.1) {
    // sum_k (-x)^k / (k + 2)!
    double term = 0.5;
    double sum = 0.5;
    for (int k = 1; k <= 9; ++k) {
      term *= -x / (k + 2);
      sum += term;
    }
    return sum;
  }
  return (x + std::expm1(-x)) / (x * x);
}

}  // namespace internal

void ModelParams::Validate() const {
  RequireFinite(alpha, "alpha");
  RequireFinite(beta, "beta");
  RequireFinite(sigma_sq, "sigma2");
  RequireFinite(u_max, "umax");
  RequireFinite(drift, "v");
  if (!(alpha > 0)) throw InvalidArgument("alpha must be > 0");
  if (!(beta > 0)) throw InvalidArgument("beta must be > 0");
  if (n_clients < 1) throw InvalidArgument("n must be >= 1");
  if (!(sigma_sq > 0)) throw InvalidArgument("sigma2 must be > 0");
  if (!(u_max >= 0)) throw InvalidArgument("umax must be >= 0");
}

void ProblemInstance::Validate() const {
  params.Validate();
  RequireFinite(r0, "r0");
  RequireFinite(horizon, "horizon");
  if (!(r0 >= 0)) throw InvalidArgument("r0 must be >= 0");
  if (!(horizon > 0)) throw InvalidArgument("horizon must be > 0");
}

PiecewiseControl PiecewiseControl::Constant(double u, double horizon) {
  return PiecewiseControl({{0.0, horizon, u}});
}

PiecewiseControl PiecewiseControl::FromSwitchTimes(
    std::span<const double> switch_times, std::span<const double> values,
    double horizon, double min_length) {
  if (values.size() != switch_times.size() + 1) {
    throw InvalidArgument("need exactly one value per interval");
  }
  std::vector<double> bounds = {0.0};
  for (double t : switch_times) {
    bounds.push_back(std::clamp(t, bounds.back(), horizon));
  }
  bounds.push_back(horizon);

  std::vector<ControlSegment> segments;
  for (size_t i = 0; i < values.size(); ++i) {
    const double length = bounds[i + 1] - bounds[i];
    if (length <= 0.0 || length <= min_length) continue;
    if (!segments.empty() && segments.back().u == values[i]) {
      segments.back().t_end = bounds[i + 1];
    } else {
      segments.push_back({bounds[i], bounds[i + 1], values[i]});
    }
  }
  if (segments.empty()) return Constant(values.back(), horizon);
  // Dropped slivers go to the preceding segment.
  segments.front().t_start = 0.0;
  for (size_t k = 1; k < segments.size(); ++k) {
    segments[k - 1].t_end = segments[k].t_start;
  }
  segments.back().t_end = horizon;
  return PiecewiseControl(std::move(segments));
}

double PiecewiseControl::ValueAt(double t) const {
  if (segments_.empty()) throw InvalidControl("empty control");
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double value, const ControlSegment& s) { return value < s.t_end; });
  if (it == segments_.end()) return segments_.back().u;
  return it->u;
}

std::vector<double> PiecewiseControl::SwitchTimes() const {
  std::vector<double> times;
  for (size_t i = 1; i < segments_.size(); ++i) {
    times.push_back(segments_[i].t_start);
  }
  return times;
}

void PiecewiseControl::Validate(double horizon, double u_max) const {
  if (segments_.empty()) throw InvalidControl("control has no segments");
  const double tol = BoundaryTolerance(horizon);
  if (std::abs(segments_.front().t_start) > tol) {
    throw InvalidControl("control must start at t = 0");
  }
  if (std::abs(segments_.back().t_end - horizon) > tol) {
    throw InvalidControl("control must end at t = T (" +
                         std::to_string(horizon) + ")");
  }
  for (size_t i = 0; i < segments_.size(); ++i) {
    const ControlSegment& s = segments_[i];
    if (!(s.t_start < s.t_end)) {
      throw InvalidControl("segment " + std::to_string(i) +
                           " has non-positive length");
    }
    if (!(s.u >= 0.0 && s.u <= u_max)) {
      throw InvalidControl("segment " + std::to_string(i) + " value " +
                           std::to_string(s.u) + " outside [0, umax]");
    }
    if (i > 0 && std::abs(s.t_start - segments_[i - 1].t_end) > tol) {
      throw InvalidControl("segments " + std::to_string(i - 1) + " and " +
                           std::to_string(i) + " are not contiguous");
    }
  }
}

double PropagateR(double r_start, double u, double dt,
                  const ModelParams& params) {
  if (!(dt >= 0)) throw InvalidArgument("dt must be >= 0");
  if (!(u >= 0 && u <= params.u_max)) {
    throw InvalidArgument("control value outside [0, umax]");
  }
  const double k = params.NoiseRate();
  if (u == 0.0) return r_start + k * dt;
  // (r - K/u) e^{-u dt} + K/u, rearranged to avoid the K/u cancellation.
  const double x = u * dt;
  return r_start * std::exp(-x) + k * dt * internal::Phi1(x);
}

double SegmentCost(double r_start, double u, double dt,
                   const ModelParams& params) {
  if (!(dt >= 0)) throw InvalidArgument("dt must be >= 0");
  if (!(u >= 0 && u <= params.u_max)) {
    throw InvalidArgument("control value outside [0, umax]");
  }
  const double k = params.NoiseRate();
  const double x = u * dt;
  const double state_integral =
      r_start * dt * internal::Phi1(x) + k * dt * dt * internal::Phi2(x);
  return params.alpha * state_integral + params.beta * u * dt;
}

std::vector<TrajectorySample> IntegrateControl(const ProblemInstance& instance,
                                               const PiecewiseControl& control,
                                               int samples_per_segment) {
  if (samples_per_segment < 1) {
    throw InvalidArgument("samples_per_segment must be >= 1");
  }
  control.Validate(instance.horizon, instance.params.u_max);
  std::vector<TrajectorySample> out;
  out.reserve(control.segments().size() * samples_per_segment + 1);
  double r = instance.r0;
  for (const ControlSegment& s : control.segments()) {
    const double length = s.t_end - s.t_start;
    for (int k = 0; k < samples_per_segment; ++k) {
      const double tau = length * k / samples_per_segment;
      out.push_back({s.t_start + tau,
                     PropagateR(r, s.u, tau, instance.params), s.u,
                     std::nullopt});
    }
    r = PropagateR(r, s.u, length, instance.params);
  }
  out.push_back({instance.horizon, r, control.segments().back().u,
                 std::nullopt});
  return out;
}

std::vector<TrajectorySample> SampleTrajectory(const ProblemInstance& instance,
                                               const PiecewiseControl& control,
                                               std::span<const double> times) {
  control.Validate(instance.horizon, instance.params.u_max);
  std::vector<TrajectorySample> out;
  out.reserve(times.size());
  const auto& segments = control.segments();
  size_t seg = 0;
  double r_seg_start = instance.r0;
  double prev = 0.0;
  for (double t : times) {
    if (t < prev || t < 0 || t > instance.horizon + BoundaryTolerance(
                                                        instance.horizon)) {
      throw InvalidArgument("sample times must be sorted within [0, T]");
    }
    prev = t;
    while (seg + 1 < segments.size() && t >= segments[seg].t_end) {
      const ControlSegment& s = segments[seg];
      r_seg_start =
          PropagateR(r_seg_start, s.u, s.t_end - s.t_start, instance.params);
      ++seg;
    }
    const ControlSegment& s = segments[seg];
    const double tau = std::max(0.0, t - s.t_start);
    out.push_back({t, PropagateR(r_seg_start, s.u, tau, instance.params), s.u,
                   std::nullopt});
  }
  return out;
}

double TerminalR(const ProblemInstance& instance,
                 const PiecewiseControl& control) {
  control.Validate(instance.horizon, instance.params.u_max);
  double r = instance.r0;
  for (const ControlSegment& s : control.segments()) {
    r = PropagateR(r, s.u, s.t_end - s.t_start, instance.params);
  }
  return r;
}

double Cost(const ProblemInstance& instance, const PiecewiseControl& control) {
  control.Validate(instance.horizon, instance.params.u_max);
  double r = instance.r0;
  double total = 0.0;
  for (const ControlSegment& s : control.segments()) {
    const double dt = s.t_end - s.t_start;
    total += SegmentCost(r, s.u, dt, instance.params);
    r = PropagateR(r, s.u, dt, instance.params);
  }
  return total;
}

}  // namespace clocksync
