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

// Setpoint-tracking evaluation of trained controllers under nominal and
// perturbed vehicle parameters.

#ifndef AUVSIM_TRANSFER_EVAL_H_
#define AUVSIM_TRANSFER_EVAL_H_

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "auvsim/environment.h"
#include "auvsim/policy.h"

namespace auvsim {

struct Command {
  std::string name;
  Vec3 position = Vec3::Zero();  // world-frame setpoint
  UnitQuat orientation;
  double duration = 5.0;  // s
};

struct CommandSuite {
  std::vector<Command> commands;

  // +-1 m along x, y, z and +-60 deg about roll, pitch, yaw; 5 s each.
  static CommandSuite Default();
  void Validate() const;
};

struct EvalScenario {
  std::string name;
  VehicleParams params;

  static EvalScenario Nominal(const VehicleParams& base);
  // COB 0.2 m ahead of the COM, 1.5 L less displaced volume.
  static EvalScenario Shifted(const VehicleParams& base);
};

class Controller {
 public:
  virtual ~Controller() = default;
  // Must be safe to call concurrently.
  virtual Action Act(const Observation& obs) const = 0;
};

class ZeroController : public Controller {
 public:
  Action Act(const Observation&) const override { return {}; }
};

// Deterministic mean action of a trained policy, clamped to [-1, 1].
class PolicyController : public Controller {
 public:
  explicit PolicyController(PolicyNet net);
  Action Act(const Observation& obs) const override;
  const PolicyNet& net() const { return net_; }

 private:
  PolicyNet net_;
};

struct NamedController {
  std::string name;
  std::shared_ptr<const Controller> controller;
};

struct EvalOptions {
  EnvConfig env;  // dt, decimation, observation clip and reward weights
  // Fraction of the way from the current to the commanded orientation that
  // is shown to the policy each step; 1 disables smoothing.
  double setpoint_slerp = 1.0;
  int workers = 1;
};

// slerp(q_current, q_goal, min(1, t_frac)); exactly q_goal for t_frac >= 1.
UnitQuat SmoothSetpoint(const UnitQuat& q_current, const UnitQuat& q_goal,
                        double t_frac);

struct EvalSample {
  double time = 0.0;              // s since command start
  Vec3 offset = Vec3::Zero();     // body frame, unclipped
  double angle = 0.0;             // rad to the commanded orientation
  Action action{};
  double reward = 0.0;
};

struct CommandResult {
  std::string command;
  bool failed = false;
  double positional_mse = 0.0;  // mean |offset|^2, m^2
  double angular_mse = 0.0;     // mean angle^2, rad^2
  std::vector<EvalSample> series;
};

// Starts at the origin, upright and at rest, with the scenario parameters,
// and runs the controller at the control rate for the command duration.
CommandResult RunCommand(const Controller& controller,
                         const EvalScenario& scenario, const Command& command,
                         const EvalOptions& options);

struct EvalEntry {
  std::string policy;
  std::string scenario;
  std::vector<CommandResult> commands;
  double positional_mse = 0.0;  // mean over commands
  double angular_mse = 0.0;
  int failed_commands = 0;
};

struct EvalReport {
  CommandSuite suite;
  std::vector<EvalEntry> entries;  // policy-major, scenario-minor

  const EvalEntry* Find(const std::string& policy,
                        const std::string& scenario) const;
};

// Mean of per-command MSEs; infinite when any command failed.
void Aggregate(EvalEntry& entry);

EvalReport RunSuite(const std::vector<NamedController>& policies,
                    const std::vector<EvalScenario>& scenarios,
                    const CommandSuite& suite, const EvalOptions& options);

// Columns: t, offset_x, offset_y, offset_z, quat_angle, action_0..action_5,
// reward. Values are written with 17 significant digits.
void WriteSeriesCsv(std::ostream& out, const std::vector<EvalSample>& series);
void WriteSeriesCsv(const std::filesystem::path& path,
                    const std::vector<EvalSample>& series);
std::string SeriesCsvHeader();

// report.json plus series/<policy>__<scenario>__<command>.csv.
void WriteReport(const EvalReport& report, const std::filesystem::path& dir);

// Angular and positional MSE rows per scenario, one column per policy.
std::string FormatReportTable(const EvalReport& report);

}  // namespace auvsim

#endif  // AUVSIM_TRANSFER_EVAL_H_
