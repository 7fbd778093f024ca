#include "clocksync/netsim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "clocksync/errors.h"

namespace clocksync {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void ValidateConfig(const ProblemInstance& instance, const SimConfig& config) {
  if (!(config.dt > 0)) throw InvalidArgument("dt must be > 0");
  if (config.dt > instance.horizon / 100.0) {
    throw InvalidArgument("dt must be <= T / 100");
  }
  if (config.runs < 1) throw InvalidArgument("runs must be >= 1");
  if (config.threads < 0) throw InvalidArgument("threads must be >= 0");
  double prev = 0.0;
  for (double t : config.checkpoints) {
    if (!(t >= prev && t <= instance.horizon)) {
      throw InvalidArgument("checkpoints must be sorted within [0, T]");
    }
    prev = t;
  }
}

}  // namespace

double NodeState::SquaredDesynchronization() const {
  double sum = 0.0;
  for (double y : offsets) sum += y * y;
  return sum;
}

ClockNetwork::ClockNetwork(const ModelParams& params,
                           const PiecewiseControl& control, std::uint64_t seed)
    : params_(params),
      control_(control),
      event_rng_(SplitMix64(seed)),
      path_rng_(SplitMix64(seed + 1)),
      bridge_rng_(SplitMix64(seed + 2)) {
  state_.offsets.assign(params.n_clients, 0.0);
  clients_.resize(params.n_clients);
}

void ClockNetwork::Reset(double r0, bool gaussian_offsets,
                         std::span<const double> observation_times) {
  time_ = 0.0;
  sync_events_ = 0;
  state_.server_clock = 0.0;
  path_normal_.reset();
  bridge_normal_.reset();
  const double horizon = control_.horizon();
  const double per_client = r0 / params_.n_clients;
  for (size_t j = 0; j < clients_.size(); ++j) {
    Client& c = clients_[j];
    c = Client{};
    c.base = gaussian_offsets ? std::sqrt(per_client) * path_normal_(path_rng_)
                              : std::sqrt(per_client);
    state_.offsets[j] = c.base;

    // Candidate events of the rate-u_max stream with their thinning
    // variates, then the observation times.
    if (params_.u_max > 0.0) {
      std::exponential_distribution<double> gap(params_.u_max);
      for (double t = gap(event_rng_); t < horizon; t += gap(event_rng_)) {
        c.skeleton.push_back({t, 0.0, uniform_(event_rng_)});
      }
    }
    for (double t : observation_times) {
      if (t > 0.0) c.skeleton.push_back({t, 0.0, -1.0});
    }
    std::stable_sort(c.skeleton.begin(), c.skeleton.end(),
                     [](const PathPoint& a, const PathPoint& b) {
                       return a.t < b.t;
                     });
    double t_prev = 0.0;
    double w = 0.0;
    for (PathPoint& point : c.skeleton) {
      w += std::sqrt(point.t - t_prev) * path_normal_(path_rng_);
      point.w = w;
      t_prev = point.t;
    }
  }
}

// Moves the path of `c` to time t, which lies before the next skeleton
// point: a Brownian-bridge draw towards that point, or a free increment past
// the last one.
void ClockNetwork::ExtendPath(Client& c, double t) {
  if (t <= c.t) return;
  if (c.next < c.skeleton.size()) {
    const PathPoint& ahead = c.skeleton[c.next];
    const double span = ahead.t - c.t;
    const double var = (t - c.t) * (ahead.t - t) / span;
    c.w += (t - c.t) / span * (ahead.w - c.w) +
           std::sqrt(var) * bridge_normal_(bridge_rng_);
  } else {
    c.w += std::sqrt(t - c.t) * bridge_normal_(bridge_rng_);
  }
  c.t = t;
}

void ClockNetwork::Synchronize(size_t client) {
  Client& c = clients_.at(client);
  c.base = 0.0;
  c.w_ref = c.w;
  state_.offsets[client] = 0.0;
  ++sync_events_;
}

void ClockNetwork::Step(double t_next) {
  const double sigma = std::sqrt(params_.sigma_sq);
  for (size_t j = 0; j < clients_.size(); ++j) {
    Client& c = clients_[j];
    // Skeleton points inside the step, in time order. Candidate events are
    // thinned from rate u_max down to rate u(t).
    while (c.next < c.skeleton.size() && c.skeleton[c.next].t <= t_next) {
      const PathPoint& point = c.skeleton[c.next++];
      c.t = point.t;
      c.w = point.w;
      if (point.mark >= 0.0 &&
          point.mark * params_.u_max < control_.ValueAt(point.t)) {
        c.base = 0.0;
        c.w_ref = point.w;
        ++sync_events_;
      }
    }
    ExtendPath(c, t_next);
    state_.offsets[j] = c.base + sigma * (c.w - c.w_ref);
  }
  time_ = t_next;
  state_.server_clock = params_.drift * time_;
}

void ClockNetwork::AdvanceTo(double t_target, double dt) {
  if (!(dt > 0)) throw InvalidArgument("dt must be > 0");
  while (time_ < t_target) {
    // Land exactly on t_target instead of leaving a round-off sliver.
    const double next =
        t_target - time_ <= dt * (1.0 + 1e-9) ? t_target : time_ + dt;
    Step(next);
  }
}

std::uint64_t RunSeed(std::uint64_t master, std::uint64_t run) {
  return SplitMix64(master ^ SplitMix64(run + 0x632be59bd9b4e019ULL));
}

double PairwiseSum(const double* values, size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const size_t half = n / 2;
  return PairwiseSum(values, half) + PairwiseSum(values + half, n - half);
}

SimResult Simulate(const ProblemInstance& instance,
                   const PiecewiseControl& control, const SimConfig& config) {
  instance.Validate();
  control.Validate(instance.horizon, instance.params.u_max);
  ValidateConfig(instance, config);

  const size_t n_check = config.checkpoints.size();
  const size_t runs = config.runs;
  // samples[c * runs + run]
  std::vector<double> samples(n_check * runs);
  SimResult result;
  result.runs.resize(runs);

  auto simulate_range = [&](size_t begin, size_t end) {
    for (size_t run = begin; run < end; ++run) {
      ClockNetwork net(instance.params, control, RunSeed(config.seed, run));
      net.Reset(instance.r0, config.gaussian_initial_offsets,
                config.checkpoints);
      for (size_t c = 0; c < n_check; ++c) {
        net.AdvanceTo(config.checkpoints[c], config.dt);
        samples[c * runs + run] = net.state().SquaredDesynchronization();
      }
      net.AdvanceTo(instance.horizon, config.dt);
      result.runs[run] = {net.state().SquaredDesynchronization(),
                          net.state().server_clock, net.sync_events()};
    }
  };

  size_t threads = config.threads == 0 ? std::thread::hardware_concurrency()
                                       : static_cast<size_t>(config.threads);
  threads = std::clamp<size_t>(threads, 1, runs);
  if (threads == 1) {
    simulate_range(0, runs);
  } else {
    std::vector<std::thread> workers;
    const size_t chunk = (runs + threads - 1) / threads;
    for (size_t w = 0; w < threads; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(runs, begin + chunk);
      if (begin < end) workers.emplace_back(simulate_range, begin, end);
    }
    for (std::thread& t : workers) t.join();
  }

  std::vector<double> deviations(runs);
  for (size_t c = 0; c < n_check; ++c) {
    const double* s = &samples[c * runs];
    const double mean = PairwiseSum(s, runs) / runs;
    double std_error = 0.0;
    if (runs > 1) {
      for (size_t i = 0; i < runs; ++i) {
        deviations[i] = (s[i] - mean) * (s[i] - mean);
      }
      const double variance = PairwiseSum(deviations.data(), runs) / (runs - 1);
      std_error = std::sqrt(variance / runs);
    }
    result.checkpoints.push_back({config.checkpoints[c], mean, std_error});
  }
  return result;
}

std::vector<double> CompareToOde(const SimResult& sim,
                                 const std::vector<TrajectorySample>& ode) {
  if (sim.checkpoints.size() != ode.size()) {
    throw InvalidArgument("ODE samples do not match the checkpoints");
  }
  std::vector<double> z;
  z.reserve(ode.size());
  for (size_t i = 0; i < ode.size(); ++i) {
    const CheckpointStat& c = sim.checkpoints[i];
    if (std::abs(c.t - ode[i].t) > 1e-12 * std::max(1.0, c.t)) {
      throw InvalidArgument("ODE sample time does not match checkpoint " +
                            std::to_string(i));
    }
    const double diff = c.empirical_r - ode[i].r;
    if (c.std_error > 0.0) {
      z.push_back(diff / c.std_error);
    } else if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(ode[i].r))) {
      // Deterministic checkpoint (t = 0 with equal offsets).
      z.push_back(0.0);
    } else {
      z.push_back(std::copysign(std::numeric_limits<double>::infinity(), diff));
    }
  }
  return z;
}

}  // namespace clocksync
