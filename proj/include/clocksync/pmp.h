#ifndef CLOCKSYNC_PMP_H_
#define CLOCKSYNC_PMP_H_

// Maximum-principle machinery for the scalar clock-synchronization problem.
//
// With the normal multiplier fixed to one the Hamiltonian is
//
//   H(R, psi, u) = -(alpha R + beta u) + psi (-u R + N sigma^2)
//                = H0(R, psi) + u H1(R, psi),   H1 = -beta - R psi,
//
// the adjoint obeys dpsi/dt = alpha + u psi with psi(T) = 0, and the maximum
// condition picks u = 0 where H1 < 0 and u = u_max where H1 > 0. Extremals
// are built backward from (R(T), 0); on every constant-control arc the
// (R, psi) orbit has a closed form, so switching times are roots of a
// quadratic instead of the output of a step-and-check integrator.

#include <optional>
#include <vector>

#include "clocksync/dynamics.h"

namespace clocksync {

// Absolute tolerance on |H1| / max(1, beta) for "on the switching curve".
inline constexpr double kSwitchingCurveTolerance = 1e-12;

struct SingularData {
  double r_s = 0.0;    // sqrt(N sigma^2 beta / alpha)
  double psi_s = 0.0;  // -sqrt(alpha beta / (N sigma^2))
  double u_s = 0.0;    // sqrt(alpha N sigma^2 / beta)
  bool admissible = false;  // u_s <= u_max
};

struct PhasePoint {
  double r = 0.0;
  double psi = 0.0;
};

double Hamiltonian(double r, double psi, double u, const ModelParams& params);

// H1 = -beta - r psi.
double SwitchingFunction(double r, double psi, const ModelParams& params);

struct SwitchingDerivatives {
  double h1_dot = 0.0;    // dH1/dt along the extremal (no u dependence)
  double lc_coeff = 0.0;  // coefficient of u in d^2 H1 / dt^2
};

SwitchingDerivatives SwitchingFunctionDerivatives(double r, double psi,
                                                  const ModelParams& params);

SingularData ComputeSingularData(const ModelParams& params);

enum class ArcKind { kZero, kBang, kSingular };

// One constant-control piece of an extremal. Constants are expressed in the
// arc-local time tau = t - t_start:
//   u = 0:      psi - (alpha / K) R = line_offset
//   u = u_max:  R = state_coeff e^{-u tau} + K / u,
//               psi = adjoint_coeff e^{u tau} - alpha / u,
//               |alpha + psi u| |K - u R| = orbit_invariant
//   singular:   (R, psi) frozen at the singular point.
struct ExtremalArc {
  ArcKind kind = ArcKind::kZero;
  double u = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double r_start = 0.0;
  double psi_start = 0.0;
  double r_end = 0.0;
  double psi_end = 0.0;
  double line_offset = 0.0;
  double state_coeff = 0.0;
  double adjoint_coeff = 0.0;
  double orbit_invariant = 0.0;

  double duration() const { return t_end - t_start; }

  // State inside the arc, evaluated from the end point (the construction
  // anchor, which is the well-conditioned direction for both R and psi).
  PhasePoint StateAt(double t, const ModelParams& params) const;
};

class Extremal {
 public:
  Extremal() = default;
  Extremal(std::vector<ExtremalArc> arcs, double horizon)
      : arcs_(std::move(arcs)), horizon_(horizon) {}

  // Arcs in forward-time order.
  const std::vector<ExtremalArc>& arcs() const { return arcs_; }
  double horizon() const { return horizon_; }
  double terminal_r() const { return arcs_.empty() ? 0.0 : arcs_.back().r_end; }
  double initial_r() const {
    return arcs_.empty() ? 0.0 : arcs_.front().r_start;
  }

  const ExtremalArc& ArcAt(double t) const;
  PhasePoint StateAt(double t, const ModelParams& params) const;
  double ControlAt(double t) const { return ArcAt(t).u; }

  // Piecewise control of the extremal; arcs no longer than `min_length`
  // are absorbed into their neighbours.
  PiecewiseControl ToControl(double min_length) const;

 private:
  std::vector<ExtremalArc> arcs_;
  double horizon_ = 0.0;
};

struct SwitchEvent {
  double dt = 0.0;          // backward time to the switching curve
  bool tangential = false;  // double root: the orbit only touches the curve
};

// Smallest backward time in (0, remaining] after which the orbit of constant
// control `u` (0 or u_max) starting at (r, psi) meets H1 = 0. Returns nullopt
// when there is no crossing within `remaining`. Throws AtSwitchingCurve if
// (r, psi) already lies on the curve and InvalidArgument for other u.
std::optional<SwitchEvent> NextEventBackward(double r, double psi, double u,
                                             double remaining,
                                             const ModelParams& params);

struct BackwardOptions {
  // Time spent at the singular point once the orbit reaches it.
  double singular_dwell = 0.0;
  // Control used backward from the singular point (before it in forward
  // time): kZero or kBang.
  ArcKind incoming = ArcKind::kZero;
};

// Extremal on [0, horizon] with R(T) = terminal_r and psi(T) = 0, built
// backward with the maximum-condition feedback. Throws InvalidArgument if a
// positive dwell is requested but the orbit never reaches the singular point.
Extremal BuildBackwardExtremal(const ModelParams& params, double terminal_r,
                               double horizon,
                               const BackwardOptions& options = {});

}  // namespace clocksync

#endif  // CLOCKSYNC_PMP_H_
