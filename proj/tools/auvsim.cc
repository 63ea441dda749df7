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

// auvsim command-line tool: train, eval, rollout, validate-config.

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auvsim/checkpoint.h"
#include "auvsim/config.h"
#include "auvsim/ppo.h"
#include "auvsim/transfer_eval.h"

namespace fs = std::filesystem;
using namespace auvsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path OutputRoot() {
  const char* env = std::getenv("AUVSIM_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// Exclusive ownership of an output directory for the life of the process.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw UsageError(dir.string() +
                       " is in use by another auvsim process (remove " +
                       path_.string() + " if it is stale)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteCurve(const fs::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  out << "iteration,mean_reward,std_reward\n";
  for (const CurvePoint& p : curve) {
    out << p.iteration << "," << Fmt(p.mean_reward) << ","
        << Fmt(p.std_reward) << "\n";
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

RunConfig LoadOrDefault(const std::string& path) {
  if (path.empty()) {
    RunConfig cfg;
    cfg.Resolve();
    return cfg;
  }
  return LoadConfig(path);
}

// Upright, neutrally buoyant and with the COB directly above the COM.
EvalScenario NeutralScenario(const VehicleParams& base) {
  EvalScenario s{"neutral", base};
  s.params.volume = base.mass / base.water_density;
  s.params.cob_offset = Vec3(0.0, 0.0, base.cob_offset.z());
  return s;
}

std::vector<EvalScenario> Scenarios(const std::string& file,
                                    const VehicleParams& base) {
  if (!file.empty()) return LoadScenarios(file, base);
  return {EvalScenario::Nominal(base), EvalScenario::Shifted(base)};
}

std::shared_ptr<const Controller> LoadController(const std::string& spec) {
  if (spec == "zero") return std::make_shared<ZeroController>();
  Checkpoint ckpt = LoadCheckpoint(spec);
  RequireShape(ckpt, PolicyShape{}, spec);
  return std::make_shared<PolicyController>(std::move(ckpt.net));
}

std::string PolicyName(const std::string& spec) {
  if (spec == "zero") return "zero";
  const fs::path p(spec);
  const std::string parent = p.parent_path().filename().string();
  return parent.empty() ? p.stem().string() : parent;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string output;
  std::optional<std::string> dr;
  std::optional<uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> envs;
  std::optional<int> workers;
};

int RunTrain(const TrainArgs& a) {
  RunConfig cfg = LoadOrDefault(a.config);
  if (a.dr) cfg.dr_preset = *a.dr;
  if (a.seed) cfg.seed = *a.seed;
  if (a.iterations) cfg.ppo.iterations = *a.iterations;
  if (a.envs) cfg.ppo.num_envs = *a.envs;
  if (a.workers) cfg.env.workers = *a.workers;
  cfg.Resolve();

  fs::path dir;
  if (!a.output.empty()) {
    dir = a.output;
  } else if (!cfg.output_dir.empty()) {
    dir = cfg.output_dir;
  } else {
    dir = OutputRoot() /
          ("train-" + cfg.dr_preset + "-seed" + std::to_string(cfg.seed));
  }
  cfg.output_dir = dir.string();
  DirLock lock(dir);
  WriteText(dir / "config.yaml", DumpConfig(cfg));
  const uint64_t hash = ConfigHash(cfg);

  auto progress = [&](const CurvePoint& p) {
    if (p.iteration % 10 == 0 || p.iteration + 1 == cfg.ppo.iterations) {
      std::fprintf(stderr, "iter %4d  mean_reward %9.4f  std %8.4f\n",
                   p.iteration, p.mean_reward, p.std_reward);
    }
  };
  try {
    const TrainResult result = Train(cfg.ppo, cfg.env, cfg.seed, progress);
    SaveCheckpoint({result.net, cfg.seed, hash}, dir / "checkpoint.bin");
    WriteCurve(dir / "reward_curve.csv", result.curve);
    if (result.env_divergences > 0) {
      std::cerr << result.env_divergences
                << " environment episodes diverged and were reset\n";
    }
  } catch (const TrainingAborted& e) {
    SaveCheckpoint({e.partial().net, cfg.seed, hash}, dir / "checkpoint.bin");
    WriteCurve(dir / "reward_curve.csv", e.partial().curve);
    std::cerr << "training diverged: " << e.what()
              << "\nlast good checkpoint written to " << dir.string() << "\n";
    return kExitDiverged;
  }
  std::cout << dir.string() << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::vector<std::string> names;
  std::string scenarios;
  std::string config;
  std::string output;
  std::optional<int> workers;
};

int RunEval(const EvalArgs& a) {
  if (a.checkpoints.empty()) throw UsageError("eval needs at least one checkpoint");
  if (!a.names.empty() && a.names.size() != a.checkpoints.size()) {
    throw UsageError("--names must give one name per checkpoint");
  }
  const RunConfig cfg = LoadOrDefault(a.config);
  const std::vector<EvalScenario> scenarios =
      Scenarios(a.scenarios, cfg.env.vehicle);

  std::vector<NamedController> policies;
  for (size_t i = 0; i < a.checkpoints.size(); ++i) {
    std::string name =
        a.names.empty() ? PolicyName(a.checkpoints[i]) : a.names[i];
    for (const NamedController& p : policies) {
      if (p.name == name) name += "_" + std::to_string(i);
    }
    policies.push_back({name, LoadController(a.checkpoints[i])});
  }

  EvalOptions options;
  options.env = cfg.env;
  options.setpoint_slerp = cfg.eval_setpoint_slerp;
  options.workers = a.workers ? *a.workers : cfg.env.workers;
  if (options.workers < 1) throw UsageError("--workers must be >= 1");

  const fs::path dir =
      a.output.empty() ? OutputRoot() / "eval" : fs::path(a.output);
  DirLock lock(dir);
  const EvalReport report =
      RunSuite(policies, scenarios, CommandSuite::Default(), options);
  WriteReport(report, dir);
  std::cout << FormatReportTable(report);
  return kExitOk;
}

// -------------------------------------------------------------- rollout

struct RolloutArgs {
  std::string checkpoint;
  std::vector<double> setpoint{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  double duration = 5.0;
  std::string scenario = "nominal";
  std::string scenarios;
  std::string config;
  std::string output;
};

int RunRollout(const RolloutArgs& a) {
  if (a.setpoint.size() != 6) {
    throw UsageError("--setpoint takes x y z roll pitch yaw");
  }
  if (!(a.duration >= 0.0) || !std::isfinite(a.duration)) {
    throw UsageError("--duration must be a finite non-negative number");
  }
  const RunConfig cfg = LoadOrDefault(a.config);
  const VehicleParams& base = cfg.env.vehicle;

  std::optional<EvalScenario> scenario;
  if (!a.scenarios.empty()) {
    for (EvalScenario& s : LoadScenarios(a.scenarios, base)) {
      if (s.name == a.scenario) scenario = std::move(s);
    }
  } else if (a.scenario == "nominal") {
    scenario = EvalScenario::Nominal(base);
  } else if (a.scenario == "shifted") {
    scenario = EvalScenario::Shifted(base);
  } else if (a.scenario == "neutral") {
    scenario = NeutralScenario(base);
  }
  if (!scenario) throw UsageError("unknown scenario '" + a.scenario + "'");

  const auto controller = LoadController(a.checkpoint);
  constexpr double kDeg = std::numbers::pi / 180.0;
  Command command;
  command.name = "rollout";
  command.position = Vec3(a.setpoint[0], a.setpoint[1], a.setpoint[2]);
  command.orientation = UnitQuat::FromRollPitchYaw(
      a.setpoint[3] * kDeg, a.setpoint[4] * kDeg, a.setpoint[5] * kDeg);
  command.duration = a.duration;

  EvalOptions options;
  options.env = cfg.env;
  options.setpoint_slerp = cfg.eval_setpoint_slerp;
  const CommandResult result =
      RunCommand(*controller, *scenario, command, options);

  if (a.output.empty() || a.output == "-") {
    WriteSeriesCsv(std::cout, result.series);
  } else {
    const fs::path out(a.output);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    WriteSeriesCsv(out, result.series);
  }
  if (result.failed) {
    std::cerr << "rollout diverged after " << result.series.size()
              << " steps\n";
    return kExitDiverged;
  }
  return kExitOk;
}

// ------------------------------------------------------ validate-config

int RunValidate(const std::string& path) {
  const RunConfig cfg = LoadConfig(path);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(ConfigHash(cfg)));
  std::cout << path << ": ok (hash " << hash << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched underwater-vehicle simulator, PPO trainer and "
               "transfer evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a PPO policy");
  train_cmd->add_option("--config,-c", train.config, "YAML config file");
  train_cmd->add_option("--output,-o", train.output,
                        "Output directory (default: "
                        "$AUVSIM_OUTPUT_ROOT/train-<dr>-seed<seed>)");
  train_cmd->add_option("--dr", train.dr, "none | small | large | custom");
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--iterations", train.iterations);
  train_cmd->add_option("--envs", train.envs, "Parallel environments");
  train_cmd->add_option("--workers", train.workers, "Stepping threads");

  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate checkpoints on the command suite");
  eval_cmd->add_option("checkpoints", eval.checkpoints,
                       "checkpoint.bin files, or 'zero' for the zero policy");
  eval_cmd->add_option("--names", eval.names, "Column names for the table")
      ->delimiter(',');
  eval_cmd->add_option("--scenarios,-s", eval.scenarios,
                       "Scenario YAML (default: nominal and shifted)");
  eval_cmd->add_option("--config,-c", eval.config, "Base config");
  eval_cmd->add_option("--output,-o", eval.output,
                       "Output directory (default: $AUVSIM_OUTPUT_ROOT/eval)");
  eval_cmd->add_option("--workers", eval.workers);

  RolloutArgs rollout;
  CLI::App* rollout_cmd =
      app.add_subcommand("rollout", "Log a single setpoint rollout as CSV");
  rollout_cmd->add_option("checkpoint", rollout.checkpoint,
                          "checkpoint.bin, or 'zero'")
      ->required();
  rollout_cmd->add_option("--setpoint", rollout.setpoint,
                          "x y z [m] roll pitch yaw [deg]")
      ->expected(6);
  rollout_cmd->add_option("--duration", rollout.duration, "Seconds");
  rollout_cmd->add_option("--scenario", rollout.scenario,
                          "nominal | shifted | neutral, or a name from "
                          "--scenarios");
  rollout_cmd->add_option("--scenarios", rollout.scenarios, "Scenario YAML");
  rollout_cmd->add_option("--config,-c", rollout.config, "Base config");
  rollout_cmd->add_option("--output,-o", rollout.output,
                          "CSV path (default: stdout)");

  std::string validate_path;
  CLI::App* validate_cmd =
      app.add_subcommand("validate-config", "Check a config file");
  validate_cmd->add_option("config", validate_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return RunTrain(train);
    if (*eval_cmd) return RunEval(eval);
    if (*rollout_cmd) return RunRollout(rollout);
    if (*validate_cmd) return RunValidate(validate_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
