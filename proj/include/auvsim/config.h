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

#ifndef AUVSIM_CONFIG_H_
#define AUVSIM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "auvsim/environment.h"
#include "auvsim/ppo.h"
#include "auvsim/transfer_eval.h"

namespace auvsim {

// A config problem located in its source text. what() reads
// "<source>:<line>:<column>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, int column,
              const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct RunConfig {
  uint64_t seed = 1;
  std::string output_dir;            // empty: derived at run time
  std::string dr_preset = "none";    // none | small | large | custom
  EnvConfig env;                     // includes the vehicle
  PpoConfig ppo;
  double eval_setpoint_slerp = 1.0;  // 1 disables setpoint smoothing

  // Re-derives env.randomization from dr_preset (unless custom) and runs all
  // module validators. Throws ParameterError.
  void Resolve();
};

// Missing keys keep their defaults; unknown keys and invalid values are
// reported with the line they appear on.
RunConfig ParseConfig(const std::string& text,
                      const std::string& source = "<config>");
RunConfig LoadConfig(const std::filesystem::path& path);

// Fully resolved YAML; parsing it again yields an identical config.
std::string DumpConfig(const RunConfig& cfg);

// 64-bit FNV-1a of DumpConfig(cfg).
uint64_t ConfigHash(const RunConfig& cfg);

// Scenario file: a top-level `scenarios` list whose entries carry a `name`
// and optional overrides of the base vehicle (volume, volume_delta,
// cob_offset, cob_offset_delta, mass, water_density).
std::vector<EvalScenario> ParseScenarios(const std::string& text,
                                         const VehicleParams& base,
                                         const std::string& source);
std::vector<EvalScenario> LoadScenarios(const std::filesystem::path& path,
                                        const VehicleParams& base);

}  // namespace auvsim

#endif  // AUVSIM_CONFIG_H_
