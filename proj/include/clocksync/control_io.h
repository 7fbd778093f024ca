#ifndef CLOCKSYNC_CONTROL_IO_H_
#define CLOCKSYNC_CONTROL_IO_H_

// File formats of the command-line tool.
//
// Control document (JSON, version "1"):
//   {"version": "1",
//    "instance": {"alpha", "beta", "n", "sigma2", "umax", "v", "r0",
//                 "horizon"},
//    "segments": [{"t_start", "t_end", "u"}, ...],
//    ... optional synthesis fields (regime, switch_times, cost, ...)}
//
// Tables are comma separated with a single header row; numbers use 17
// significant digits.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "clocksync/dynamics.h"
#include "clocksync/netsim.h"
#include "clocksync/synthesis.h"
#include "json.hpp"

namespace clocksync {

inline constexpr std::string_view kControlDocumentVersion = "1";

std::string FormatNumber(double value);

// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content);
std::string ReadFile(const std::filesystem::path& path);

struct ControlDocument {
  ProblemInstance instance;
  PiecewiseControl control;
};

nlohmann::json InstanceToJson(const ProblemInstance& instance);
ProblemInstance InstanceFromJson(const nlohmann::json& j);

nlohmann::json ControlDocumentToJson(const ProblemInstance& instance,
                                     const PiecewiseControl& control);
// Throws InvalidArgument for a malformed or inconsistent document.
ControlDocument ParseControlDocument(std::string_view text);

// Control document plus regime, switch times, cost, terminal state and the
// singular data.
std::string SynthesisDocument(const SynthesisResult& result);

// Columns t, r, psi, u on `samples` equispaced times plus every switch time.
std::string TrajectoryCsv(const SynthesisResult& result, int samples);

// Columns T, r0, label, row-major in T.
std::string RegimeMapCsv(const RegimeMap& map);

// Columns t, empirical_r, std_error, ode_r, z.
std::string SimulationCsv(const SimResult& sim,
                          const std::vector<TrajectorySample>& ode,
                          const std::vector<double>& z);

// Instance list with header alpha,beta,n,sigma2,umax,r0,horizon[,v] (any
// column order). Blank lines and lines starting with '#' are skipped.
std::vector<ProblemInstance> ParseInstanceList(std::string_view text);

}  // namespace clocksync

#endif  // CLOCKSYNC_CONTROL_IO_H_
