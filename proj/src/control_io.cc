#include "clocksync/control_io.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "clocksync/errors.h"
#include "clocksync/pmp.h"

namespace clocksync {
namespace {

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

double ParseDouble(const std::string& text, const std::string& field) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("field '" + field + "': cannot parse '" + text +
                          "' as a number");
  }
}

template <typename T>
T Require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw InvalidArgument(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(std::string("field '") + key + "' has wrong type");
  }
}

}  // namespace

std::string FormatNumber(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json InstanceToJson(const ProblemInstance& instance) {
  const ModelParams& p = instance.params;
  return {{"alpha", p.alpha},   {"beta", p.beta}, {"n", p.n_clients},
          {"sigma2", p.sigma_sq}, {"umax", p.u_max}, {"v", p.drift},
          {"r0", instance.r0},  {"horizon", instance.horizon}};
}

ProblemInstance InstanceFromJson(const nlohmann::json& j) {
  ProblemInstance instance;
  instance.params.alpha = Require<double>(j, "alpha");
  instance.params.beta = Require<double>(j, "beta");
  instance.params.n_clients = Require<int>(j, "n");
  instance.params.sigma_sq = Require<double>(j, "sigma2");
  instance.params.u_max = Require<double>(j, "umax");
  instance.params.drift = j.contains("v") ? Require<double>(j, "v") : 1.0;
  instance.r0 = Require<double>(j, "r0");
  instance.horizon = Require<double>(j, "horizon");
  instance.Validate();
  return instance;
}

nlohmann::json ControlDocumentToJson(const ProblemInstance& instance,
                                     const PiecewiseControl& control) {
  nlohmann::json segments = nlohmann::json::array();
  for (const ControlSegment& s : control.segments()) {
    segments.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"u", s.u}});
  }
  return {{"version", kControlDocumentVersion},
          {"instance", InstanceToJson(instance)},
          {"segments", segments}};
}

ControlDocument ParseControlDocument(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("control document: ") + e.what());
  }
  if (Require<std::string>(j, "version") != kControlDocumentVersion) {
    throw InvalidArgument("control document: unsupported version");
  }
  ControlDocument doc;
  doc.instance = InstanceFromJson(Require<nlohmann::json>(j, "instance"));
  const nlohmann::json segments = Require<nlohmann::json>(j, "segments");
  if (!segments.is_array()) throw InvalidArgument("'segments' must be a list");
  std::vector<ControlSegment> parsed;
  for (const nlohmann::json& s : segments) {
    parsed.push_back({Require<double>(s, "t_start"), Require<double>(s, "t_end"),
                      Require<double>(s, "u")});
  }
  doc.control = PiecewiseControl(std::move(parsed));
  try {
    doc.control.Validate(doc.instance.horizon, doc.instance.params.u_max);
  } catch (const InvalidControl& e) {
    throw InvalidArgument(std::string("control document: ") + e.what());
  }
  return doc;
}

std::string SynthesisDocument(const SynthesisResult& result) {
  nlohmann::json j = ControlDocumentToJson(result.instance, result.control);
  const SingularData s = ComputeSingularData(result.instance.params);
  j["regime"] = std::string(RegimeName(result.regime));
  j["switch_times"] = result.switch_times;
  j["cost"] = result.cost;
  j["terminal_r"] = result.terminal_r;
  j["singular"] = {{"r_s", s.r_s},
                   {"psi_s", s.psi_s},
                   {"u_s", s.u_s},
                   {"admissible", s.admissible}};
  j["diagnostics"] = result.diagnostics;
  return j.dump(2) + "\n";
}

std::string TrajectoryCsv(const SynthesisResult& result, int samples) {
  if (samples < 2) throw InvalidArgument("samples must be >= 2");
  const double horizon = result.instance.horizon;
  std::vector<double> times;
  for (int i = 0; i < samples; ++i) {
    times.push_back(i == samples - 1 ? horizon : horizon * i / (samples - 1));
  }
  times.insert(times.end(), result.switch_times.begin(),
               result.switch_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const std::vector<TrajectorySample> states =
      SampleTrajectory(result.instance, result.control, times);
  std::string out = "t,r,psi,u\n";
  for (const TrajectorySample& s : states) {
    const double psi =
        result.extremal.StateAt(s.t, result.instance.params).psi;
    out += FormatNumber(s.t) + "," + FormatNumber(s.r) + "," +
           FormatNumber(psi) + "," + FormatNumber(s.u) + "\n";
  }
  return out;
}

std::string RegimeMapCsv(const RegimeMap& map) {
  std::string out = "T,r0,label\n";
  for (size_t i = 0; i < map.horizons.size(); ++i) {
    for (size_t j = 0; j < map.initial_states.size(); ++j) {
      out += FormatNumber(map.horizons[i]) + "," +
             FormatNumber(map.initial_states[j]) + "," +
             std::string(RegimeName(map.at(i, j))) + "\n";
    }
  }
  return out;
}

std::string SimulationCsv(const SimResult& sim,
                          const std::vector<TrajectorySample>& ode,
                          const std::vector<double>& z) {
  std::string out = "t,empirical_r,std_error,ode_r,z\n";
  for (size_t i = 0; i < sim.checkpoints.size(); ++i) {
    const CheckpointStat& c = sim.checkpoints[i];
    out += FormatNumber(c.t) + "," + FormatNumber(c.empirical_r) + "," +
           FormatNumber(c.std_error) + "," + FormatNumber(ode[i].r) + "," +
           FormatNumber(z[i]) + "\n";
  }
  return out;
}

std::vector<ProblemInstance> ParseInstanceList(std::string_view text) {
  std::vector<ProblemInstance> instances;
  std::istringstream in{std::string(text)};
  std::string line;
  std::map<std::string, size_t> columns;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::vector<std::string> fields = SplitCsvLine(line);
    if (columns.empty()) {
      for (size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
      for (const char* key :
           {"alpha", "beta", "n", "sigma2", "umax", "r0", "horizon"}) {
        if (!columns.contains(key)) {
          throw InvalidArgument(std::string("instance list: missing column '") +
                                key + "'");
        }
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      throw InvalidArgument("instance list line " + std::to_string(line_no) +
                            ": expected " + std::to_string(columns.size()) +
                            " fields");
    }
    auto get = [&](const std::string& key) {
      return ParseDouble(fields[columns.at(key)], key);
    };
    ProblemInstance instance;
    instance.params.alpha = get("alpha");
    instance.params.beta = get("beta");
    const double n = get("n");
    if (n != std::floor(n) || n < 1 || n > 1e9) {
      throw InvalidArgument("field 'n' must be a positive integer");
    }
    instance.params.n_clients = static_cast<int>(n);
    instance.params.sigma_sq = get("sigma2");
    instance.params.u_max = get("umax");
    instance.params.drift = columns.contains("v") ? get("v") : 1.0;
    instance.r0 = get("r0");
    instance.horizon = get("horizon");
    instance.Validate();
    instances.push_back(instance);
  }
  return instances;
}

}  // namespace clocksync
