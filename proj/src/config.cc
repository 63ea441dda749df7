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

#include "auvsim/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace auvsim {
namespace {

using Handler = std::function<void(const YAML::Node&, const std::string&)>;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const YAML::Mark& mark,
                         const std::string& message) const {
    throw ConfigError(source_, mark.line + 1, mark.column + 1, message);
  }

  // Maps a validator's field path to the closest recorded location.
  [[noreturn]] void FailField(const ParameterError& e) const {
    std::string field = e.field();
    while (!field.empty()) {
      auto it = marks_.find(field);
      if (it != marks_.end()) Fail(it->second, e.what());
      const size_t cut = field.find_last_of(".[");
      field = cut == std::string::npos ? "" : field.substr(0, cut);
    }
    throw ConfigError(source_, 0, 0, e.what());
  }

  void Map(const YAML::Node& node, const std::string& path,
           const std::map<std::string, Handler>& fields) {
    if (!node || node.IsNull()) return;
    if (!node.IsMap()) Fail(node.Mark(), "'" + path + "' must be a mapping");
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      const std::string full = path.empty() ? key : path + "." + key;
      auto it = fields.find(key);
      if (it == fields.end()) Fail(kv.first.Mark(), "unknown key '" + full + "'");
      marks_[full] = kv.second.Mark();
      it->second(kv.second, full);
    }
  }

  double Double(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) Fail(n.Mark(), "'" + path + "' must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::BadConversion&) {
      Fail(n.Mark(), "'" + path + "' must be a number, got '" +
                         n.Scalar() + "'");
    }
  }

  int64_t Int(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) Fail(n.Mark(), "'" + path + "' must be an integer");
    try {
      return n.as<int64_t>();
    } catch (const YAML::BadConversion&) {
      Fail(n.Mark(), "'" + path + "' must be an integer, got '" +
                         n.Scalar() + "'");
    }
  }

  bool Bool(const YAML::Node& n, const std::string& path) const {
    try {
      return n.as<bool>();
    } catch (const YAML::BadConversion&) {
      Fail(n.Mark(), "'" + path + "' must be true or false");
    }
  }

  std::string String(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) Fail(n.Mark(), "'" + path + "' must be a string");
    return n.Scalar();
  }

  Vec3 Vector3(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence() || n.size() != 3) {
      Fail(n.Mark(), "'" + path + "' must be a list of 3 numbers");
    }
    return Vec3(Double(n[0], path), Double(n[1], path), Double(n[2], path));
  }

  Mat3 Inertia(const YAML::Node& n, const std::string& path) const {
    if (n.IsSequence() && n.size() == 3 && n[0].IsScalar()) {
      return Vector3(n, path).asDiagonal();
    }
    if (!n.IsSequence() || n.size() != 3) {
      Fail(n.Mark(), "'" + path +
                         "' must be a 3x3 matrix or a 3-element diagonal");
    }
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = Vector3(n[r], path).transpose();
    return m;
  }

  void Mark(const std::string& path, const YAML::Mark& mark) {
    marks_[path] = mark;
  }

 private:
  std::string source_;
  std::map<std::string, YAML::Mark> marks_;
};

std::string Num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  // Keep a decimal point or exponent so the value reads back as a float.
  if (s.find_first_of(".eEin") == std::string::npos) s += ".0";
  return s;
}

void EmitVec(YAML::Emitter& out, const Vec3& v) {
  out << YAML::Flow << YAML::BeginSeq << Num(v.x()) << Num(v.y())
      << Num(v.z()) << YAML::EndSeq;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, int column,
                         const std::string& message)
    : std::runtime_error(
          line > 0 ? source + ":" + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message
                   : source + ": " + message),
      line_(line),
      column_(column) {}

void RunConfig::Resolve() {
  if (dr_preset != "custom") {
    env.randomization = DomainRandomization::Preset(dr_preset);
  }
  env.Validate();
  ppo.Validate();
  if (!(eval_setpoint_slerp > 0.0 && eval_setpoint_slerp <= 1.0)) {
    throw ParameterError("eval.setpoint_slerp", "must lie in (0, 1]");
  }
}

RunConfig ParseConfig(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
  }

  RunConfig cfg;
  Reader r(source);
  VehicleParams& v = cfg.env.vehicle;
  ThrusterConfig& th = v.thrusters;
  EnvConfig& env = cfg.env;
  PpoConfig& ppo = cfg.ppo;
  std::optional<std::pair<double, YAML::Mark>> explicit_radius;
  std::optional<std::pair<double, YAML::Mark>> explicit_range;

  auto d = [&](double& out) {
    return [&r, &out](const YAML::Node& n, const std::string& p) {
      out = r.Double(n, p);
    };
  };
  auto i32 = [&](int& out) {
    return [&r, &out](const YAML::Node& n, const std::string& p) {
      out = static_cast<int>(r.Int(n, p));
    };
  };

  const std::map<std::string, Handler> thruster_fields = {
      {"rotor_constant", d(th.rotor_constant)},
      {"omega_max", d(th.omega_max)},
      {"pwm_neutral", d(th.pwm_neutral)},
      {"pwm_span", d(th.pwm_span)},
      {"pwm_deadband", d(th.pwm_deadband)},
      {"layout",
       [&](const YAML::Node& n, const std::string& p) {
         if (!n.IsSequence()) r.Fail(n.Mark(), "'" + p + "' must be a list");
         th.mounts.clear();
         for (size_t k = 0; k < n.size(); ++k) {
           const std::string ep = p + "[" + std::to_string(k) + "]";
           r.Mark(ep, n[k].Mark());
           ThrusterMount m;
           r.Map(n[k], ep,
                 {{"position",
                   [&](const YAML::Node& x, const std::string& q) {
                     m.position = r.Vector3(x, q);
                   }},
                  {"direction",
                   [&](const YAML::Node& x, const std::string& q) {
                     m.direction = r.Vector3(x, q);
                     if (m.direction.norm() == 0.0) {
                       r.Fail(x.Mark(), "'" + q + "' must be nonzero");
                     }
                     m.direction.normalize();
                   }}});
           th.mounts.push_back(m);
         }
       }},
  };
  const std::map<std::string, Handler> vehicle_fields = {
      {"mass", d(v.mass)},
      {"inertia",
       [&](const YAML::Node& n, const std::string& p) {
         v.inertia = r.Inertia(n, p);
       }},
      {"volume", d(v.volume)},
      {"cob_offset",
       [&](const YAML::Node& n, const std::string& p) {
         v.cob_offset = r.Vector3(n, p);
       }},
      {"water_density", d(v.water_density)},
      {"water_viscosity", d(v.water_viscosity)},
      {"gravity", d(v.gravity)},
      {"thrusters",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, thruster_fields);
       }},
  };
  const std::map<std::string, Handler> dr_fields = {
      {"preset",
       [&](const YAML::Node& n, const std::string& p) {
         cfg.dr_preset = r.String(n, p);
         if (cfg.dr_preset != "custom") {
           try {
             DomainRandomization::Preset(cfg.dr_preset);
           } catch (const ParameterError& e) {
             r.Fail(n.Mark(), e.what());
           }
         }
       }},
      {"cob_noise_radius",
       [&](const YAML::Node& n, const std::string& p) {
         env.randomization.cob_noise_radius = r.Double(n, p);
         explicit_radius = {env.randomization.cob_noise_radius, n.Mark()};
       }},
      {"volume_noise_range",
       [&](const YAML::Node& n, const std::string& p) {
         env.randomization.volume_noise_range = r.Double(n, p);
         explicit_range = {env.randomization.volume_noise_range, n.Mark()};
       }},
  };
  const std::map<std::string, Handler> weight_fields = {
      {"position", d(env.reward.position)},
      {"orientation", d(env.reward.orientation)},
      {"effort", d(env.reward.effort)},
  };
  const std::map<std::string, Handler> env_fields = {
      {"physics_dt", d(env.physics_dt)},
      {"decimation", i32(env.decimation)},
      {"episode_seconds", d(env.episode_seconds)},
      {"max_offset", d(env.max_offset)},
      {"workers", i32(env.workers)},
      {"reward_weights",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, weight_fields);
       }},
      {"domain_randomization",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, dr_fields);
       }},
  };
  const std::map<std::string, Handler> ppo_fields = {
      {"learning_rate", d(ppo.learning_rate)},
      {"gamma", d(ppo.gamma)},
      {"gae_lambda", d(ppo.gae_lambda)},
      {"clip", d(ppo.clip)},
      {"epochs", i32(ppo.epochs)},
      {"minibatches", i32(ppo.minibatches)},
      {"value_coef", d(ppo.value_coef)},
      {"entropy_coef", d(ppo.entropy_coef)},
      {"max_grad_norm", d(ppo.max_grad_norm)},
      {"iterations", i32(ppo.iterations)},
      {"num_envs", i32(ppo.num_envs)},
      {"steps_per_iteration", i32(ppo.steps_per_iteration)},
      {"hidden", i32(ppo.hidden)},
      {"init_log_std", d(ppo.init_log_std)},
      {"bootstrap_timeouts",
       [&](const YAML::Node& n, const std::string& p) {
         ppo.bootstrap_timeouts = r.Bool(n, p);
       }},
  };
  const std::map<std::string, Handler> eval_fields = {
      {"setpoint_slerp", d(cfg.eval_setpoint_slerp)},
  };
  const std::map<std::string, Handler> root_fields = {
      {"seed",
       [&](const YAML::Node& n, const std::string& p) {
         const int64_t s = r.Int(n, p);
         if (s < 0) r.Fail(n.Mark(), "'seed' must be non-negative");
         cfg.seed = static_cast<uint64_t>(s);
       }},
      {"output_dir",
       [&](const YAML::Node& n, const std::string& p) {
         cfg.output_dir = n.IsNull() ? "" : r.String(n, p);
       }},
      {"vehicle",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, vehicle_fields);
       }},
      {"env",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, env_fields);
       }},
      {"ppo",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, ppo_fields);
       }},
      {"eval",
       [&](const YAML::Node& n, const std::string& p) {
         r.Map(n, p, eval_fields);
       }},
  };
  r.Map(root, "", root_fields);

  if (cfg.dr_preset != "custom") {
    const DomainRandomization preset =
        DomainRandomization::Preset(cfg.dr_preset);
    if (explicit_radius && explicit_radius->first != preset.cob_noise_radius) {
      r.Fail(explicit_radius->second,
             "cob_noise_radius conflicts with preset '" + cfg.dr_preset +
                 "'; use preset: custom");
    }
    if (explicit_range && explicit_range->first != preset.volume_noise_range) {
      r.Fail(explicit_range->second,
             "volume_noise_range conflicts with preset '" + cfg.dr_preset +
                 "'; use preset: custom");
    }
  }
  try {
    cfg.Resolve();
  } catch (const ParameterError& e) {
    r.FailField(e);
  }
  return cfg;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string(), 0, 0, "cannot open config file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.string());
}

std::string DumpConfig(const RunConfig& cfg) {
  const VehicleParams& v = cfg.env.vehicle;
  const ThrusterConfig& th = v.thrusters;
  const EnvConfig& env = cfg.env;
  const PpoConfig& ppo = cfg.ppo;

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "output_dir" << YAML::Value
      << YAML::DoubleQuoted << cfg.output_dir;

  out << YAML::Key << "vehicle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mass" << YAML::Value << Num(v.mass);
  out << YAML::Key << "inertia" << YAML::Value << YAML::BeginSeq;
  for (int row = 0; row < 3; ++row) {
    EmitVec(out, v.inertia.row(row).transpose());
  }
  out << YAML::EndSeq;
  out << YAML::Key << "volume" << YAML::Value << Num(v.volume);
  out << YAML::Key << "cob_offset" << YAML::Value;
  EmitVec(out, v.cob_offset);
  out << YAML::Key << "water_density" << YAML::Value << Num(v.water_density);
  out << YAML::Key << "water_viscosity" << YAML::Value
      << Num(v.water_viscosity);
  out << YAML::Key << "gravity" << YAML::Value << Num(v.gravity);
  out << YAML::Key << "thrusters" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rotor_constant" << YAML::Value
      << Num(th.rotor_constant);
  out << YAML::Key << "omega_max" << YAML::Value << Num(th.omega_max);
  out << YAML::Key << "pwm_neutral" << YAML::Value << Num(th.pwm_neutral);
  out << YAML::Key << "pwm_span" << YAML::Value << Num(th.pwm_span);
  out << YAML::Key << "pwm_deadband" << YAML::Value << Num(th.pwm_deadband);
  out << YAML::Key << "layout" << YAML::Value << YAML::BeginSeq;
  for (const ThrusterMount& m : th.mounts) {
    out << YAML::BeginMap;
    out << YAML::Key << "position" << YAML::Value;
    EmitVec(out, m.position);
    out << YAML::Key << "direction" << YAML::Value;
    EmitVec(out, m.direction);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "env" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "physics_dt" << YAML::Value << Num(env.physics_dt);
  out << YAML::Key << "decimation" << YAML::Value << env.decimation;
  out << YAML::Key << "episode_seconds" << YAML::Value
      << Num(env.episode_seconds);
  out << YAML::Key << "max_offset" << YAML::Value << Num(env.max_offset);
  out << YAML::Key << "workers" << YAML::Value << env.workers;
  out << YAML::Key << "reward_weights" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "position" << YAML::Value << Num(env.reward.position);
  out << YAML::Key << "orientation" << YAML::Value
      << Num(env.reward.orientation);
  out << YAML::Key << "effort" << YAML::Value << Num(env.reward.effort);
  out << YAML::EndMap;
  out << YAML::Key << "domain_randomization" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << cfg.dr_preset;
  out << YAML::Key << "cob_noise_radius" << YAML::Value
      << Num(env.randomization.cob_noise_radius);
  out << YAML::Key << "volume_noise_range" << YAML::Value
      << Num(env.randomization.volume_noise_range);
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "ppo" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "learning_rate" << YAML::Value
      << Num(ppo.learning_rate);
  out << YAML::Key << "gamma" << YAML::Value << Num(ppo.gamma);
  out << YAML::Key << "gae_lambda" << YAML::Value << Num(ppo.gae_lambda);
  out << YAML::Key << "clip" << YAML::Value << Num(ppo.clip);
  out << YAML::Key << "epochs" << YAML::Value << ppo.epochs;
  out << YAML::Key << "minibatches" << YAML::Value << ppo.minibatches;
  out << YAML::Key << "value_coef" << YAML::Value << Num(ppo.value_coef);
  out << YAML::Key << "entropy_coef" << YAML::Value << Num(ppo.entropy_coef);
  out << YAML::Key << "max_grad_norm" << YAML::Value
      << Num(ppo.max_grad_norm);
  out << YAML::Key << "iterations" << YAML::Value << ppo.iterations;
  out << YAML::Key << "num_envs" << YAML::Value << ppo.num_envs;
  out << YAML::Key << "steps_per_iteration" << YAML::Value
      << ppo.steps_per_iteration;
  out << YAML::Key << "hidden" << YAML::Value << ppo.hidden;
  out << YAML::Key << "init_log_std" << YAML::Value << Num(ppo.init_log_std);
  out << YAML::Key << "bootstrap_timeouts" << YAML::Value
      << ppo.bootstrap_timeouts;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "setpoint_slerp" << YAML::Value
      << Num(cfg.eval_setpoint_slerp);
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

uint64_t ConfigHash(const RunConfig& cfg) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : DumpConfig(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<EvalScenario> ParseScenarios(const std::string& text,
                                         const VehicleParams& base,
                                         const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  Reader r(source);
  std::vector<EvalScenario> out;
  r.Map(root, "",
        {{"scenarios", [&](const YAML::Node& list, const std::string& p) {
            if (!list.IsSequence()) {
              r.Fail(list.Mark(), "'scenarios' must be a list");
            }
            for (size_t k = 0; k < list.size(); ++k) {
              const std::string ep = p + "[" + std::to_string(k) + "]";
              EvalScenario s{"", base};
              VehicleParams& v = s.params;
              r.Map(list[k], ep,
                    {{"name",
                      [&](const YAML::Node& n, const std::string& q) {
                        s.name = r.String(n, q);
                      }},
                     {"volume",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.volume = r.Double(n, q);
                      }},
                     {"volume_delta",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.volume += r.Double(n, q);
                      }},
                     {"cob_offset",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.cob_offset = r.Vector3(n, q);
                      }},
                     {"cob_offset_delta",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.cob_offset += r.Vector3(n, q);
                      }},
                     {"mass",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.mass = r.Double(n, q);
                      }},
                     {"water_density",
                      [&](const YAML::Node& n, const std::string& q) {
                        v.water_density = r.Double(n, q);
                      }}});
              if (s.name.empty()) {
                r.Fail(list[k].Mark(), "scenario needs a 'name'");
              }
              try {
                v.Validate();
              } catch (const ParameterError& e) {
                r.Fail(list[k].Mark(),
                       "scenario '" + s.name + "': " + e.what());
              }
              out.push_back(std::move(s));
            }
          }}});
  if (out.empty()) throw ConfigError(source, 0, 0, "no scenarios defined");
  return out;
}

std::vector<EvalScenario> LoadScenarios(const std::filesystem::path& path,
                                        const VehicleParams& base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string(), 0, 0, "cannot open scenarios file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseScenarios(ss.str(), base, path.string());
}

}  // namespace auvsim
