#include "commands.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "clocksync/control_io.h"
#include "clocksync/dynamics.h"
#include "clocksync/errors.h"
#include "clocksync/netsim.h"
#include "clocksync/oracle.h"
#include "clocksync/synthesis.h"

namespace clocksync::cli {
namespace {

// Everything a subcommand may need; each command reads its own subset.
struct RunSpec {
  ProblemInstance instance;
  std::string out;

  // synthesize
  std::string trajectory_out;
  int samples = 201;

  // regime-map
  std::string grid = "100x100";
  std::string t_range = "0.05:5";
  std::string r0_range = "0:5";

  // simulate
  std::string control_file;
  std::optional<double> constant_u;
  int runs = 20000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  std::string checkpoints;
  bool gaussian_offsets = false;
  int threads = 1;

  // verify
  std::string instances_file;
  DpConfig dp;
  double tolerance = 0.02;
  double perturb_switch = 0.0;
};

void AddModelOptions(CLI::App* cmd, RunSpec& spec, bool with_instance) {
  ModelParams& p = spec.instance.params;
  cmd->add_option("--alpha", p.alpha, "weight of desynchronization");
  cmd->add_option("--beta", p.beta, "weight of transmission energy");
  cmd->add_option("--n", p.n_clients, "number of clients");
  cmd->add_option("--sigma2", p.sigma_sq, "per-client noise variance rate");
  cmd->add_option("--umax", p.u_max, "upper bound of the control");
  cmd->add_option("--v", p.drift, "common clock rate");
  if (with_instance) {
    cmd->add_option("--r0", spec.instance.r0, "initial desynchronization");
    cmd->add_option("--horizon", spec.instance.horizon, "time horizon T");
  }
}

Range ParseRange(const std::string& text, const char* name) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument(std::string(name) + " must look like lo:hi");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw InvalidArgument(std::string(name) + " must look like lo:hi");
  }
}

std::pair<int, int> ParseGrid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const int nt = std::stoi(text.substr(0, x));
    const int nr = std::stoi(text.substr(x + 1));
    if (nt < 1 || nr < 1) throw std::invalid_argument(text);
    return {nt, nr};
  } catch (const std::exception&) {
    throw InvalidArgument("grid must look like NTxNR with positive sizes");
  }
}

std::vector<double> ParseCheckpoints(const std::string& text, double horizon) {
  if (text.empty()) {
    std::vector<double> v;
    for (int i = 0; i <= 10; ++i) v.push_back(i == 10 ? horizon : horizon * i / 10);
    return v;
  }
  std::vector<double> v;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidArgument("checkpoints: cannot parse '" + item + "'");
    }
  }
  return v;
}

int Synthesize(const RunSpec& spec, std::ostream& out) {
  const SynthesisResult result = clocksync::Synthesize(spec.instance);
  WriteFileAtomic(spec.out, SynthesisDocument(result));
  if (!spec.trajectory_out.empty()) {
    WriteFileAtomic(spec.trajectory_out, TrajectoryCsv(result, spec.samples));
  }
  out << "regime " << RegimeName(result.regime) << " cost "
      << FormatNumber(result.cost) << "\n";
  return 0;
}

int RegimeMapCommand(const RunSpec& spec, std::ostream& out) {
  const auto [nt, nr] = ParseGrid(spec.grid);
  const RegimeMap map =
      ComputeRegimeMap(spec.instance.params, ParseRange(spec.t_range, "t-range"),
                       ParseRange(spec.r0_range, "r0-range"), nt, nr);
  WriteFileAtomic(spec.out, RegimeMapCsv(map));
  out << "wrote " << map.labels.size() << " cells\n";
  return 0;
}

int SimulateCommand(const RunSpec& spec, const CLI::App& cmd,
                    std::ostream& out) {
  ProblemInstance instance = spec.instance;
  PiecewiseControl control;
  if (!spec.control_file.empty()) {
    const ControlDocument doc =
        ParseControlDocument(ReadFile(spec.control_file));
    // Explicit flags override the document.
    ProblemInstance merged = doc.instance;
    auto take = [&](const char* flag, auto& dst, const auto& src) {
      if (cmd.count(flag) > 0) dst = src;
    };
    take("--alpha", merged.params.alpha, instance.params.alpha);
    take("--beta", merged.params.beta, instance.params.beta);
    take("--n", merged.params.n_clients, instance.params.n_clients);
    take("--sigma2", merged.params.sigma_sq, instance.params.sigma_sq);
    take("--umax", merged.params.u_max, instance.params.u_max);
    take("--v", merged.params.drift, instance.params.drift);
    take("--r0", merged.r0, instance.r0);
    instance = merged;
    control = doc.control;
  } else if (spec.constant_u) {
    control = PiecewiseControl::Constant(*spec.constant_u, instance.horizon);
  } else {
    throw InvalidArgument("simulate needs --control or --u");
  }
  instance.Validate();

  SimConfig config;
  config.dt = spec.dt;
  config.runs = spec.runs;
  config.seed = spec.seed;
  config.checkpoints = ParseCheckpoints(spec.checkpoints, instance.horizon);
  config.gaussian_initial_offsets = spec.gaussian_offsets;
  config.threads = spec.threads;

  const SimResult sim = clocksync::Simulate(instance, control, config);
  const std::vector<TrajectorySample> ode =
      SampleTrajectory(instance, control, config.checkpoints);
  const std::vector<double> z = CompareToOde(sim, ode);
  WriteFileAtomic(spec.out, SimulationCsv(sim, ode, z));
  double worst = 0.0;
  for (double v : z) worst = std::max(worst, std::abs(v));
  out << "max |z| " << FormatNumber(worst) << "\n";
  return 0;
}

int VerifyCommand(const RunSpec& spec, std::ostream& out) {
  const std::vector<ProblemInstance> instances =
      ParseInstanceList(ReadFile(spec.instances_file));
  std::string report =
      "index,alpha,beta,n,sigma2,umax,r0,horizon,regime,synth_cost,dp_cost,"
      "rel_gap,status\n";
  int passed = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    const ProblemInstance& inst = instances[i];
    const SynthesisResult result = clocksync::Synthesize(inst);
    double synth_cost = result.cost;
    if (spec.perturb_switch != 0.0 && !result.switch_times.empty()) {
      std::vector<double> shifted = result.switch_times;
      for (double& t : shifted) {
        t = std::clamp(t + spec.perturb_switch * inst.horizon, 0.0,
                       inst.horizon);
      }
      std::vector<double> values;
      for (const ControlSegment& s : result.control.segments()) {
        values.push_back(s.u);
      }
      synth_cost = Cost(inst, PiecewiseControl::FromSwitchTimes(
                                  shifted, values, inst.horizon));
    }
    const DpSolution dp = SolveDp(inst, spec.dp);
    const double gap = std::abs(synth_cost - dp.cost) / std::abs(dp.cost);
    const bool ok = gap <= spec.tolerance;
    passed += ok ? 1 : 0;
    const ModelParams& p = inst.params;
    report += std::to_string(i) + "," + FormatNumber(p.alpha) + "," +
              FormatNumber(p.beta) + "," + std::to_string(p.n_clients) + "," +
              FormatNumber(p.sigma_sq) + "," + FormatNumber(p.u_max) + "," +
              FormatNumber(inst.r0) + "," + FormatNumber(inst.horizon) + "," +
              std::string(RegimeName(result.regime)) + "," +
              FormatNumber(synth_cost) + "," + FormatNumber(dp.cost) + "," +
              FormatNumber(gap) + "," + (ok ? "pass" : "fail") + "\n";
  }
  const int failed = static_cast<int>(instances.size()) - passed;
  report += "# summary passed=" + std::to_string(passed) +
            " failed=" + std::to_string(failed) +
            " total=" + std::to_string(instances.size()) + "\n";
  WriteFileAtomic(spec.out, report);
  out << "passed " << passed << "/" << instances.size() << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Optimal synchronization schedules for a single-server sensor "
               "network"};
  app.require_subcommand(1);
  RunSpec spec;

  CLI::App* synth = app.add_subcommand("synthesize", "optimal control of one "
                                       "instance");
  AddModelOptions(synth, spec, true);
  synth->get_option("--r0")->required();
  synth->get_option("--horizon")->required();
  synth->add_option("--out", spec.out, "result document (JSON)")->required();
  synth->add_option("--trajectory", spec.trajectory_out,
                    "trajectory table t,r,psi,u");
  synth->add_option("--samples", spec.samples, "trajectory sample count")
      ->check(CLI::Range(2, 10000000));

  CLI::App* map = app.add_subcommand("regime-map", "structure of the optimal "
                                     "control over a (T, r0) grid");
  AddModelOptions(map, spec, false);
  map->add_option("--grid", spec.grid, "grid size NTxNR");
  map->add_option("--t-range", spec.t_range, "horizon range lo:hi");
  map->add_option("--r0-range", spec.r0_range, "initial state range lo:hi");
  map->add_option("--out", spec.out, "output table T,r0,label")->required();

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo check of the "
                                     "ODE for a given control");
  AddModelOptions(sim, spec, true);
  sim->add_option("--control", spec.control_file, "control document");
  sim->add_option("--u", spec.constant_u, "constant control instead of a "
                  "document");
  sim->add_option("--runs", spec.runs, "Monte Carlo replications");
  sim->add_option("--dt", spec.dt, "Euler-Maruyama step");
  sim->add_option("--seed", spec.seed, "master seed");
  sim->add_option("--checkpoints", spec.checkpoints,
                  "comma separated checkpoint times (default 11 equispaced)");
  sim->add_flag("--gaussian-offsets", spec.gaussian_offsets,
                "Gaussian initial offsets");
  sim->add_option("--threads", spec.threads, "worker threads (0 = all)");
  sim->add_option("--out", spec.out, "output table")->required();

  CLI::App* verify = app.add_subcommand("verify", "compare synthesis against "
                                        "the dynamic-programming oracle");
  verify->add_option("--instances", spec.instances_file, "instance list CSV")
      ->required();
  verify->add_option("--dp-time", spec.dp.n_time, "DP time steps");
  verify->add_option("--dp-state", spec.dp.n_state, "DP state grid points");
  verify->add_option("--dp-control", spec.dp.n_control,
                     "DP control grid points");
  verify->add_option("--tolerance", spec.tolerance, "relative cost gap");
  verify->add_option("--perturb-switch", spec.perturb_switch,
                     "shift switch times by this fraction of T before "
                     "comparing (sensitivity check)");
  verify->add_option("--out", spec.out, "report file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    spec.instance.Validate();
    if (synth->parsed()) return Synthesize(spec, out);
    if (map->parsed()) return RegimeMapCommand(spec, out);
    if (sim->parsed()) return SimulateCommand(spec, *sim, out);
    if (verify->parsed()) return VerifyCommand(spec, out);
  } catch (const SynthesisFailure& e) {
    err << "synthesis failure: " << e.what() << "\n";
    for (const auto& [terminal_r, r_initial] : e.scan()) {
      err << "  R(T) = " << FormatNumber(terminal_r)
          << "  R(0) = " << FormatNumber(r_initial) << "\n";
    }
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace clocksync::cli
