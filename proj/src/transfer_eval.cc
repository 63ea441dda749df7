// Copyright 2026 The auvsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "auvsim/transfer_eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace auvsim {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string FileSafe(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' ||
                    c == '+' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::string SeriesFileName(const std::string& policy,
                           const std::string& scenario,
                           const std::string& command) {
  return FileSafe(policy) + "__" + FileSafe(scenario) + "__" +
         FileSafe(command) + ".csv";
}

nlohmann::json Number(double v) {
  // JSON has no infinity; failed commands serialize as null.
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

CommandSuite CommandSuite::Default() {
  CommandSuite suite;
  const char* axes[3] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    for (double sign : {1.0, -1.0}) {
      Command c;
      c.name = std::string(sign > 0 ? "+" : "-") + axes[i];
      c.position[i] = sign * 1.0;
      suite.commands.push_back(c);
    }
  }
  const char* rotations[3] = {"roll", "pitch", "yaw"};
  for (int i = 0; i < 3; ++i) {
    for (double sign : {1.0, -1.0}) {
      Command c;
      c.name = std::string(sign > 0 ? "+" : "-") + rotations[i];
      c.orientation =
          UnitQuat::FromAxisAngle(Vec3::Unit(i), sign * 60.0 * kDeg);
      suite.commands.push_back(c);
    }
  }
  return suite;
}

void CommandSuite::Validate() const {
  for (const Command& c : commands) {
    if (!(c.duration > 0.0) || !std::isfinite(c.duration)) {
      throw std::invalid_argument("command '" + c.name +
                                  "' must have a positive duration");
    }
    if (!c.position.allFinite()) {
      throw std::invalid_argument("command '" + c.name +
                                  "' has a non-finite setpoint");
    }
  }
}

EvalScenario EvalScenario::Nominal(const VehicleParams& base) {
  return {"nominal", base};
}

EvalScenario EvalScenario::Shifted(const VehicleParams& base) {
  EvalScenario s{"shifted", base};
  s.params.cob_offset = Vec3(0.2, 0.0, 0.0);
  s.params.volume = base.volume - 1.5e-3;
  return s;
}

PolicyController::PolicyController(PolicyNet net) : net_(std::move(net)) {
  if (net_.shape().obs_dim != kObservationSize ||
      net_.shape().act_dim != kNumThrusters) {
    throw std::invalid_argument(
        "policy maps " + std::to_string(net_.shape().obs_dim) + " -> " +
        std::to_string(net_.shape().act_dim) + "; expected " +
        std::to_string(kObservationSize) + " -> " +
        std::to_string(kNumThrusters));
  }
}

Action PolicyController::Act(const Observation& obs) const {
  const auto flat = obs.Flatten();
  const PolicyNet::Output out = net_.Forward(flat);
  Action a;
  for (int i = 0; i < kNumThrusters; ++i) {
    a[i] = std::clamp(out.mean(i, 0), -1.0, 1.0);
  }
  return a;
}

UnitQuat SmoothSetpoint(const UnitQuat& q_current, const UnitQuat& q_goal,
                        double t_frac) {
  if (t_frac >= 1.0) return q_goal;
  return QuatSlerp(q_current, q_goal, std::max(0.0, t_frac));
}

CommandResult RunCommand(const Controller& controller,
                         const EvalScenario& scenario, const Command& command,
                         const EvalOptions& options) {
  const EnvConfig& env = options.env;
  const Pose goal{command.position, command.orientation};
  VehicleEnv vehicle(env, scenario.params, RigidBodyState{}, goal);

  CommandResult result;
  result.command = command.name;
  const double period = env.control_period();
  const int steps =
      static_cast<int>(std::ceil(command.duration / period - 1e-9));
  result.series.reserve(std::max(steps, 0));

  double pos_sum = 0.0;
  double ang_sum = 0.0;
  for (int k = 0; k < steps; ++k) {
    const RigidBodyState& s = vehicle.state();
    const Pose shown{goal.position,
                     SmoothSetpoint(s.orientation, goal.orientation,
                                    options.setpoint_slerp)};
    const Action action =
        controller.Act(MakeObservation(s, shown, env.max_offset));
    const VehicleEnv::StepOutcome out = vehicle.Step(action);
    if (out.diverged) {
      result.failed = true;
      break;
    }
    EvalSample sample;
    sample.time = (k + 1) * period;
    sample.offset = BodyFrameOffset(vehicle.state(), goal.position);
    sample.angle =
        QuatAngleBetween(goal.orientation, vehicle.state().orientation);
    for (int i = 0; i < kNumThrusters; ++i) {
      sample.action[i] = std::clamp(action[i], -1.0, 1.0);
    }
    sample.reward = out.reward;
    pos_sum += sample.offset.squaredNorm();
    ang_sum += sample.angle * sample.angle;
    result.series.push_back(sample);
  }
  if (result.failed) {
    result.positional_mse = std::numeric_limits<double>::infinity();
    result.angular_mse = std::numeric_limits<double>::infinity();
  } else if (steps > 0) {
    result.positional_mse = pos_sum / steps;
    result.angular_mse = ang_sum / steps;
  }
  return result;
}

void Aggregate(EvalEntry& entry) {
  entry.positional_mse = 0.0;
  entry.angular_mse = 0.0;
  entry.failed_commands = 0;
  for (const CommandResult& c : entry.commands) {
    entry.positional_mse += c.positional_mse;
    entry.angular_mse += c.angular_mse;
    entry.failed_commands += c.failed ? 1 : 0;
  }
  if (!entry.commands.empty()) {
    entry.positional_mse /= static_cast<double>(entry.commands.size());
    entry.angular_mse /= static_cast<double>(entry.commands.size());
  }
}

const EvalEntry* EvalReport::Find(const std::string& policy,
                                  const std::string& scenario) const {
  for (const EvalEntry& e : entries) {
    if (e.policy == policy && e.scenario == scenario) return &e;
  }
  return nullptr;
}

EvalReport RunSuite(const std::vector<NamedController>& policies,
                    const std::vector<EvalScenario>& scenarios,
                    const CommandSuite& suite, const EvalOptions& options) {
  suite.Validate();
  options.env.Validate();
  for (const EvalScenario& s : scenarios) s.params.Validate();

  EvalReport report;
  report.suite = suite;
  const int num_commands = static_cast<int>(suite.commands.size());
  for (const NamedController& p : policies) {
    for (const EvalScenario& s : scenarios) {
      EvalEntry e;
      e.policy = p.name;
      e.scenario = s.name;
      e.commands.resize(num_commands);
      report.entries.push_back(std::move(e));
    }
  }

  const int num_scenarios = static_cast<int>(scenarios.size());
  const int jobs = static_cast<int>(report.entries.size()) * num_commands;
  auto run = [&](int job) {
    const int entry = job / num_commands;
    const int cmd = job % num_commands;
    const NamedController& p = policies[entry / num_scenarios];
    const EvalScenario& s = scenarios[entry % num_scenarios];
    report.entries[entry].commands[cmd] =
        RunCommand(*p.controller, s, suite.commands[cmd], options);
  };
  if (options.workers <= 1) {
    for (int j = 0; j < jobs; ++j) run(j);
  } else {
    tbb::task_arena arena(options.workers);
    arena.execute([&] { tbb::parallel_for(0, jobs, run); });
  }
  for (EvalEntry& e : report.entries) Aggregate(e);
  return report;
}

std::string SeriesCsvHeader() {
  std::string h = "t,offset_x,offset_y,offset_z,quat_angle";
  for (int i = 0; i < kNumThrusters; ++i) h += ",action_" + std::to_string(i);
  return h + ",reward";
}

void WriteSeriesCsv(std::ostream& out, const std::vector<EvalSample>& series) {
  out << SeriesCsvHeader() << "\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << sep;
  };
  for (const EvalSample& s : series) {
    put(s.time, ',');
    put(s.offset.x(), ',');
    put(s.offset.y(), ',');
    put(s.offset.z(), ',');
    put(s.angle, ',');
    for (double a : s.action) put(a, ',');
    put(s.reward, '\n');
  }
}

void WriteSeriesCsv(const std::filesystem::path& path,
                    const std::vector<EvalSample>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  WriteSeriesCsv(out, series);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void WriteReport(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "series");
  nlohmann::json j;
  for (const Command& c : report.suite.commands) {
    j["suite"].push_back({{"name", c.name},
                          {"position", {c.position.x(), c.position.y(),
                                        c.position.z()}},
                          {"orientation",
                           {c.orientation.w(), c.orientation.x(),
                            c.orientation.y(), c.orientation.z()}},
                          {"duration", c.duration}});
  }
  j["entries"] = nlohmann::json::array();
  for (const EvalEntry& e : report.entries) {
    nlohmann::json je = {{"policy", e.policy},
                         {"scenario", e.scenario},
                         {"angular_mse", Number(e.angular_mse)},
                         {"positional_mse", Number(e.positional_mse)},
                         {"failed_commands", e.failed_commands}};
    je["commands"] = nlohmann::json::array();
    for (const CommandResult& c : e.commands) {
      const std::string file = SeriesFileName(e.policy, e.scenario, c.command);
      WriteSeriesCsv(dir / "series" / file, c.series);
      je["commands"].push_back({{"command", c.command},
                                {"failed", c.failed},
                                {"angular_mse", Number(c.angular_mse)},
                                {"positional_mse", Number(c.positional_mse)},
                                {"steps", c.series.size()},
                                {"series", "series/" + file}});
    }
    j["entries"].push_back(std::move(je));
  }
  std::ofstream out(dir / "report.json");
  if (!out) throw std::runtime_error("cannot write report.json");
  out << j.dump(2) << "\n";
}

std::string FormatReportTable(const EvalReport& report) {
  std::vector<std::string> policies;
  std::vector<std::string> scenarios;
  for (const EvalEntry& e : report.entries) {
    if (std::find(policies.begin(), policies.end(), e.policy) ==
        policies.end()) {
      policies.push_back(e.policy);
    }
    if (std::find(scenarios.begin(), scenarios.end(), e.scenario) ==
        scenarios.end()) {
      scenarios.push_back(e.scenario);
    }
  }
  size_t width = 12;
  for (const std::string& p : policies) width = std::max(width, p.size() + 2);

  std::ostringstream out;
  char buf[64];
  for (const std::string& s : scenarios) {
    out << "scenario: " << s << "\n";
    std::snprintf(buf, sizeof(buf), "%-16s", "");
    out << buf;
    for (const std::string& p : policies) {
      std::snprintf(buf, sizeof(buf), "%*s", static_cast<int>(width),
                    p.c_str());
      out << buf;
    }
    out << "\n";
    for (int row = 0; row < 2; ++row) {
      std::snprintf(buf, sizeof(buf), "%-16s",
                    row == 0 ? "Angular MSE" : "Positional MSE");
      out << buf;
      for (const std::string& p : policies) {
        const EvalEntry* e = report.Find(p, s);
        const double v = e == nullptr ? NAN
                         : row == 0   ? e->angular_mse
                                      : e->positional_mse;
        if (std::isfinite(v)) {
          std::snprintf(buf, sizeof(buf), "%*.4f", static_cast<int>(width), v);
        } else {
          std::snprintf(buf, sizeof(buf), "%*s", static_cast<int>(width),
                        e == nullptr ? "-" : "failed");
        }
        out << buf;
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace auvsim
