#ifndef CLOCKSYNC_NETSIM_H_
#define CLOCKSYNC_NETSIM_H_

// Monte Carlo model of the network behind the desynchronization ODE: a server
// with a perfect clock (dx_1/dt = v) and N clients whose clocks diffuse as
// dx_j = v dt + sigma dW_j. Each client receives synchronization messages as
// an independent Poisson stream of rate u(t); on receipt its clock is set to
// the server clock. The expected unnormalized sum of squared offsets then
// obeys dR/dt = -u R + N sigma^2.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "clocksync/dynamics.h"

namespace clocksync {

struct SimConfig {
  double dt = 1e-3;  // Euler-Maruyama step, <= T / 100
  int runs = 1000;
  std::uint64_t seed = 0;
  std::vector<double> checkpoints;  // sorted, within [0, T]
  // Gaussian initial offsets with matched second moment instead of equal
  // offsets sqrt(r0 / N).
  bool gaussian_initial_offsets = false;
  // Worker threads; 0 uses the hardware concurrency. Results do not depend
  // on it.
  int threads = 1;
};

struct NodeState {
  double server_clock = 0.0;
  std::vector<double> offsets;  // client clock minus server clock

  double ClientClock(size_t client) const {
    return server_clock + offsets[client];
  }
  double SquaredDesynchronization() const;
};

// A single replication of the network.
class ClockNetwork {
 public:
  ClockNetwork(const ModelParams& params, const PiecewiseControl& control,
               std::uint64_t seed);

  // Sets t = 0, the server clock to 0 and the client offsets so that their
  // squared sum is r0. All randomness that reaches `observation_times` (the
  // sync stream and the Wiener path at sync and observation times) is drawn
  // here, so states observed there do not depend on the step size.
  void Reset(double r0, bool gaussian_offsets,
             std::span<const double> observation_times = {});

  // Advances to `t_target` in steps of at most `dt`. Synchronization events
  // are placed at their exact times inside a step.
  void AdvanceTo(double t_target, double dt);

  // Applies a synchronization message to one client.
  void Synchronize(size_t client);

  double time() const { return time_; }
  const NodeState& state() const { return state_; }
  std::int64_t sync_events() const { return sync_events_; }

 private:
  // Pre-drawn point of a client's Wiener path; `mark` >= 0 flags a candidate
  // sync event with its thinning variate.
  struct PathPoint {
    double t;
    double w;
    double mark;
  };

  struct Client {
    std::vector<PathPoint> skeleton;
    size_t next = 0;        // first skeleton point after `t`
    double t = 0.0;         // time of the latest path value
    double w = 0.0;         // W(t)
    double w_ref = 0.0;     // W at the last reset (or t = 0)
    double base = 0.0;      // offset at the last reset (or t = 0)
  };

  void Step(double t_next);
  void ExtendPath(Client& c, double t);

  const ModelParams params_;
  const PiecewiseControl control_;
  std::mt19937_64 event_rng_;
  std::mt19937_64 path_rng_;
  std::mt19937_64 bridge_rng_;
  std::normal_distribution<double> path_normal_{0.0, 1.0};
  std::normal_distribution<double> bridge_normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  double time_ = 0.0;
  NodeState state_;
  std::vector<Client> clients_;
  std::int64_t sync_events_ = 0;
};

struct CheckpointStat {
  double t = 0.0;
  double empirical_r = 0.0;  // mean over runs of the squared offset sum
  double std_error = 0.0;
};

struct RunSummary {
  double terminal_r = 0.0;
  double server_clock = 0.0;
  std::int64_t sync_events = 0;
};

struct SimResult {
  std::vector<CheckpointStat> checkpoints;
  std::vector<RunSummary> runs;
};

// Per-run generator seed derived from the master seed.
std::uint64_t RunSeed(std::uint64_t master, std::uint64_t run);

SimResult Simulate(const ProblemInstance& instance,
                   const PiecewiseControl& control, const SimConfig& config);

// (empirical_r - ode_r) / std_error per checkpoint. `ode` must be sampled at
// the checkpoint times.
std::vector<double> CompareToOde(const SimResult& sim,
                                 const std::vector<TrajectorySample>& ode);

// Order-fixed pairwise sum.
double PairwiseSum(const double* values, size_t n);

}  // namespace clocksync

#endif  // CLOCKSYNC_NETSIM_H_
