#ifndef CLOCKSYNC_DYNAMICS_H_
#define CLOCKSYNC_DYNAMICS_H_

// Scalar desynchronization model
//
//   dR/dt = -u(t) R(t) + N sigma^2,   R(0) = R0,   0 <= u(t) <= u_max,
//
// with running cost alpha R + beta u. Everything here is closed form: the
// state under a constant control is either affine (u = 0) or exponential
// (u > 0), and the cost integral over a constant-control segment has an
// exact antiderivative.

#include <optional>
#include <span>
#include <vector>

namespace clocksync {

struct ModelParams {
  double alpha = 1.0;     // weight of desynchronization
  double beta = 1.0;      // weight of transmission energy
  int n_clients = 1;      // N
  double sigma_sq = 1.0;  // per-client noise variance rate
  double u_max = 1.0;     // upper control bound
  double drift = 1.0;     // common clock rate v, only seen by the simulator

  // N * sigma^2, the only noise combination entering the ODE.
  double NoiseRate() const { return n_clients * sigma_sq; }

  // Throws InvalidArgument naming the offending field.
  void Validate() const;
};

struct ProblemInstance {
  ModelParams params;
  double r0 = 0.0;
  double horizon = 1.0;

  void Validate() const;
};

struct ControlSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double u = 0.0;

  bool operator==(const ControlSegment&) const = default;
};

// Ordered constant-control segments partitioning [0, T].
class PiecewiseControl {
 public:
  PiecewiseControl() = default;
  explicit PiecewiseControl(std::vector<ControlSegment> segments)
      : segments_(std::move(segments)) {}

  static PiecewiseControl Constant(double u, double horizon);

  // Builds segments from switch times 0 < t_1 < ... < T and one value per
  // interval. Intervals shorter than `min_length` are dropped and equal
  // neighbours are merged.
  static PiecewiseControl FromSwitchTimes(std::span<const double> switch_times,
                                          std::span<const double> values,
                                          double horizon,
                                          double min_length = 0.0);

  const std::vector<ControlSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double horizon() const {
    return segments_.empty() ? 0.0 : segments_.back().t_end;
  }

  // Right-continuous value; the last segment also owns t = T.
  double ValueAt(double t) const;

  // Interior segment boundaries.
  std::vector<double> SwitchTimes() const;

  // Throws InvalidControl unless the segments are contiguous, cover
  // [0, horizon], have positive length and values in [0, u_max].
  void Validate(double horizon, double u_max) const;

  bool operator==(const PiecewiseControl&) const = default;

 private:
  std::vector<ControlSegment> segments_;
};

struct TrajectorySample {
  double t = 0.0;
  double r = 0.0;
  double u = 0.0;
  std::optional<double> psi;
};

// R after `dt` time units of constant control `u` starting from `r_start`.
// Exact; throws InvalidArgument for dt < 0 or u outside [0, u_max].
double PropagateR(double r_start, double u, double dt,
                  const ModelParams& params);

// Integral of alpha R + beta u over one constant-control segment.
double SegmentCost(double r_start, double u, double dt,
                   const ModelParams& params);

// Samples the state at every segment boundary plus `samples_per_segment - 1`
// equispaced interior points per segment.
std::vector<TrajectorySample> IntegrateControl(const ProblemInstance& instance,
                                               const PiecewiseControl& control,
                                               int samples_per_segment);

// State at arbitrary sorted times in [0, T].
std::vector<TrajectorySample> SampleTrajectory(const ProblemInstance& instance,
                                               const PiecewiseControl& control,
                                               std::span<const double> times);

double TerminalR(const ProblemInstance& instance,
                 const PiecewiseControl& control);

// J(u) = int_0^T (alpha R + beta u) dt, exact per segment.
double Cost(const ProblemInstance& instance, const PiecewiseControl& control);

namespace internal {
// (1 - e^{-x}) / x and (x - 1 + e^{-x}) / x^2 without cancellation, x >= 0.
double Phi1(double x);
double Phi2(double x);
}  // namespace internal

}  // namespace clocksync

#endif  // CLOCKSYNC_DYNAMICS_H_
