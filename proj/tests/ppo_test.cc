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

#include "auvsim/ppo.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"

namespace auvsim {
namespace {

// Fills a buffer with per-step rewards, values and done flags for
// `rewards.size()` envs.
RolloutBuffer MakeBuffer(const std::vector<std::vector<double>>& rewards,
                         const std::vector<std::vector<double>>& values,
                         const std::vector<std::vector<uint8_t>>& dones) {
  const int envs = static_cast<int>(rewards.size());
  const int steps = static_cast<int>(rewards[0].size());
  RolloutBuffer buf(steps, envs, 1, 1);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd r(envs), v(envs);
    std::vector<uint8_t> d(envs);
    for (int e = 0; e < envs; ++e) {
      r[e] = rewards[e][t];
      v[e] = values[e][t];
      d[e] = dones[e][t];
    }
    buf.Add(Eigen::MatrixXd::Zero(1, envs), Eigen::MatrixXd::Zero(1, envs),
            Eigen::VectorXd::Zero(envs), r, v, d);
  }
  return buf;
}

// A_t = sum_l (gamma lambda)^l delta_{t+l}, truncated at the first done.
double OracleAdvantage(const std::vector<double>& r,
                       const std::vector<double>& v,
                       const std::vector<uint8_t>& d, double bootstrap,
                       double gamma, double lambda, int t) {
  double total = 0.0, weight = 1.0;
  for (int k = t; k < static_cast<int>(r.size()); ++k) {
    const double next = k + 1 < static_cast<int>(r.size()) ? v[k + 1]
                                                           : bootstrap;
    const double delta = r[k] + (d[k] ? 0.0 : gamma * next) - v[k];
    total += weight * delta;
    if (d[k]) break;
    weight *= gamma * lambda;
  }
  return total;
}

TEST_SUITE("ppo") {

TEST_CASE("advantages on hand-built buffers") {
  {
    RolloutBuffer b = MakeBuffer({{1, 1, 1}}, {{0, 0, 0}}, {{0, 0, 1}});
    ComputeGae(b, Eigen::VectorXd::Zero(1), 1.0, 1.0);
    CHECK(b.advantages[0] == 3.0);
    CHECK(b.advantages[1] == 2.0);
    CHECK(b.advantages[2] == 1.0);
  }
  {
    RolloutBuffer b = MakeBuffer({{1}}, {{0}}, {{1}});
    ComputeGae(b, Eigen::VectorXd::Constant(1, 7.0), 0.9, 0.8);
    CHECK(b.advantages[0] == 1.0);
  }
  {
    // r_t = V(s_t) - gamma V(s_t+1) with constant V: zero TD error.
    RolloutBuffer b =
        MakeBuffer({{0, 0, 0, 0, 0}}, {{2, 2, 2, 2, 2}}, {{0, 0, 0, 0, 0}});
    ComputeGae(b, Eigen::VectorXd::Constant(1, 2.0), 1.0, 0.37);
    CHECK(b.advantages.isZero(0.0));
  }
  {
    // Monte-Carlo returns across an episode boundary, two envs.
    const std::vector<std::vector<double>> r{{1, 2, 3, 4, 5}, {0, -1, 2, 0, 1}};
    const std::vector<std::vector<double>> v(2, std::vector<double>(5, 0.0));
    const std::vector<std::vector<uint8_t>> d{{0, 1, 0, 0, 1},
                                              {0, 0, 0, 0, 0}};
    RolloutBuffer b = MakeBuffer(r, v, d);
    ComputeGae(b, Eigen::VectorXd::Zero(2), 1.0, 1.0);
    const double want0[5] = {3, 2, 12, 9, 5};
    const double want1[5] = {2, 2, 3, 1, 1};
    for (int t = 0; t < 5; ++t) {
      CHECK(b.advantages[t * 2] == want0[t]);
      CHECK(b.advantages[t * 2 + 1] == want1[t]);
      CHECK(b.returns[t * 2] == want0[t]);
    }
  }
  {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::vector<double>> r(3, std::vector<double>(5)),
          v(3, std::vector<double>(5));
      std::vector<std::vector<uint8_t>> d(3, std::vector<uint8_t>(5));
      for (int e = 0; e < 3; ++e) {
        for (int t = 0; t < 5; ++t) {
          r[e][t] = n(rng);
          v[e][t] = n(rng);
          d[e][t] = n(rng) > 0.8;
        }
      }
      const Eigen::Vector3d boot(n(rng), n(rng), n(rng));
      RolloutBuffer b = MakeBuffer(r, v, d);
      ComputeGae(b, boot, 0.97, 0.9);
      for (int e = 0; e < 3; ++e) {
        for (int t = 0; t < 5; ++t) {
          const double want =
              OracleAdvantage(r[e], v[e], d[e], boot[e], 0.97, 0.9, t);
          CHECK(std::abs(b.advantages[t * 3 + e] - want) < 1e-12);
          CHECK(std::abs(b.returns[t * 3 + e] - (want + v[e][t])) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("advantage normalization") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(3.0, 7.0);
  Eigen::VectorXd a(1000);
  for (double& x : a) x = n(rng);
  NormalizeAdvantages(a);
  CHECK(std::abs(a.mean()) < 1e-9);
  const double var = a.squaredNorm() / a.size();
  CHECK(std::abs(var - 1.0) < 1e-6);
}

Minibatch OnPolicyBatch(const PolicyNet& net, int size, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const int obs_dim = net.shape().obs_dim;
  const int act = net.shape().act_dim;
  Minibatch mb;
  mb.observations.resize(obs_dim, size);
  for (int i = 0; i < mb.observations.size(); ++i) {
    mb.observations.data()[i] = n(rng);
  }
  const PolicyNet::Output out = net.Forward(mb.observations);
  mb.actions.resize(act, size);
  mb.old_log_probs.resize(size);
  mb.advantages.resize(size);
  mb.returns.resize(size);
  for (int j = 0; j < size; ++j) {
    const SampledAction a = SampleAction(
        std::span<const double>(out.mean.col(j).data(), act),
        std::span<const double>(out.log_std.data(), act), rng);
    for (int d = 0; d < act; ++d) mb.actions(d, j) = a.raw[d];
    mb.old_log_probs[j] = a.log_prob;
    mb.advantages[j] = n(rng);
    mb.returns[j] = n(rng);
  }
  return mb;
}

TEST_CASE("on-policy loss has unit ratio") {
  std::mt19937_64 rng(3);
  const PolicyNet net = PolicyNet::Initialize({5, 3, 8}, 1, -0.3);
  const Minibatch mb = OnPolicyBatch(net, 64, rng);
  PpoConfig cfg;
  Eigen::VectorXd grad;
  const LossStats s = PpoLoss(net, mb, cfg, &grad);
  CHECK(std::abs(s.mean_ratio - 1.0) < 1e-12);
  CHECK(s.clip_fraction == 0.0);
  CHECK(std::abs(s.approx_kl) < 1e-12);

  // With ratio 1 the clipped surrogate gradient equals the plain one,
  // -mean(A * dlogp).
  PpoConfig wide = cfg;
  wide.clip = 0.999;
  Eigen::VectorXd grad_wide;
  PpoLoss(net, mb, wide, &grad_wide);
  CHECK((grad - grad_wide).norm() < 1e-14 * (1.0 + grad.norm()));
}

TEST_CASE("clipped branch, hand-computed") {
  PolicyNet net(PolicyShape{1, 1, 1});
  Eigen::VectorXd& p = net.parameters();
  p << 0.5, 0.0, 1.0, 0.0, 1.0, 0.0,  // actor: mean = tanh(tanh(x/2))
      0.0,                            // log_std
      0.0, 0.0, 0.0, 0.0, 0.0, 1.5;   // critic: constant 1.5
  Minibatch mb;
  mb.observations = Eigen::MatrixXd::Constant(1, 1, 0.8);
  const double mean = std::tanh(std::tanh(0.4));
  mb.actions = Eigen::MatrixXd::Constant(1, 1, mean + 0.5);
  const double log_prob = -0.5 * 0.25 - 0.5 * std::log(2 * std::numbers::pi);
  const double eps = 0.2;
  mb.old_log_probs = Eigen::VectorXd::Constant(1, log_prob - std::log(1 + 2 * eps));
  mb.advantages = Eigen::VectorXd::Constant(1, 2.0);
  mb.returns = Eigen::VectorXd::Constant(1, 0.5);

  PpoConfig cfg;
  cfg.clip = eps;
  Eigen::VectorXd grad;
  const LossStats s = PpoLoss(net, mb, cfg, &grad);
  // min(1.4 * 2, 1.2 * 2) = 2.4; value error (1.5 - 0.5)^2 = 1.
  const double entropy = 0.5 + 0.5 * std::log(2 * std::numbers::pi);
  CHECK(std::abs(s.policy - (-2.4)) < 1e-12);
  CHECK(std::abs(s.value - 1.0) < 1e-12);
  CHECK(std::abs(s.total - (-2.4 + 0.5 * 1.0 - 0.005 * entropy)) < 1e-12);
  CHECK(s.clip_fraction == 1.0);
  // The clipped surrogate is flat in the actor parameters.
  CHECK(grad.head(6).isZero(0.0));
  CHECK(grad[6] == -0.005);
}

double RelativeError(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

void GradientCheck(PolicyShape shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolicyNet net = PolicyNet::Initialize(shape, seed, -0.4);
  // Larger output weights so every layer carries a visible gradient.
  std::normal_distribution<double> n(0.0, 0.5);
  for (double& x : net.parameters()) x = n(rng);
  net.parameters().segment(net.log_std_offset(), shape.act_dim).setConstant(-0.4);

  Minibatch mb = OnPolicyBatch(net, 12, rng);
  // Ratios either well inside or well outside the clip range so no sample
  // sits on a kink of the surrogate.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int j = 0; j < mb.old_log_probs.size(); ++j) {
    const double shift = j % 2 == 0 ? 0.1 * (u(rng) - 0.5) : 0.6 + u(rng);
    mb.old_log_probs[j] += j % 4 == 1 ? -shift : shift;
  }
  PpoConfig cfg;
  Eigen::VectorXd grad;
  PpoLoss(net, mb, cfg, &grad);

  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < net.num_parameters(); ++k) {
    PolicyNet plus = net, minus = net;
    plus.parameters()[k] += h;
    minus.parameters()[k] -= h;
    const double fd = (PpoLoss(plus, mb, cfg, nullptr).total -
                       PpoLoss(minus, mb, cfg, nullptr).total) /
                      (2 * h);
    worst = std::max(worst, RelativeError(grad[k], fd));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("analytic gradient matches finite differences") {
  GradientCheck(PolicyShape{1, 1, 1}, 1);  // 13 parameters
  GradientCheck(PolicyShape{3, 2, 4}, 2);
  GradientCheck(PolicyShape{17, 6, 5}, 3);
}

TEST_CASE("log std gradient vanishes at the clamp") {
  std::mt19937_64 rng(7);
  PolicyNet net = PolicyNet::Initialize({4, 2, 6}, 1, 0.0);
  net.parameters()[net.log_std_offset()] = kMinLogStd - 1.0;
  const Minibatch mb = OnPolicyBatch(net, 16, rng);
  Eigen::VectorXd grad;
  PpoLoss(net, mb, PpoConfig{}, &grad);
  CHECK(grad[net.log_std_offset()] == 0.0);
  CHECK(grad[net.log_std_offset() + 1] != 0.0);
}

TEST_CASE("adam") {
  Adam adam(3);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  adam.Step(p, Eigen::Vector3d(2.0, -0.5, 0.0), 0.1);
  // First step moves each coordinate by lr * g / (|g| + eps).
  CHECK(std::abs(p[0] - (-0.1 * 2.0 / (2.0 + 1e-8))) < 1e-15);
  CHECK(std::abs(p[1] - (0.1 * 0.5 / (0.5 + 1e-8))) < 1e-15);
  CHECK(p[2] == 0.0);

  // Converges on a quadratic.
  Adam a2(1);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 5.0);
  for (int i = 0; i < 5000; ++i) {
    a2.Step(x, 2.0 * (x.array() - 1.0).matrix(), 0.01);
  }
  CHECK(std::abs(x[0] - 1.0) < 1e-3);
}

TEST_CASE("update starts on-policy and clips the gradient") {
  std::mt19937_64 rng(11);
  PolicyNet net = PolicyNet::Initialize({17, 6, 16}, 4, 0.0);
  const int steps = 4, envs = 8;
  RolloutBuffer buf(steps, envs, 17, 6);
  std::normal_distribution<double> n;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd obs(17, envs);
    for (int i = 0; i < obs.size(); ++i) obs.data()[i] = n(rng);
    const PolicyNet::Output out = net.Forward(obs);
    Eigen::MatrixXd act(6, envs);
    Eigen::VectorXd lp(envs), r(envs);
    for (int e = 0; e < envs; ++e) {
      const SampledAction a = SampleAction(
          std::span<const double>(out.mean.col(e).data(), 6),
          std::span<const double>(out.log_std.data(), 6), rng);
      for (int d = 0; d < 6; ++d) act(d, e) = a.raw[d];
      lp[e] = a.log_prob;
      r[e] = n(rng);
    }
    buf.Add(obs, act, lp, r, out.value.transpose(),
            std::vector<uint8_t>(envs, t == steps - 1));
  }
  ComputeGae(buf, Eigen::VectorXd::Zero(envs), 0.99, 0.95);
  NormalizeAdvantages(buf.advantages);

  PpoConfig cfg;
  Adam adam(net.num_parameters());
  const Eigen::VectorXd before = net.parameters();
  const UpdateStats s = PpoUpdate(net, adam, buf, cfg, rng);
  CHECK(std::abs(s.first_ratio - 1.0) < 1e-12);
  CHECK(net.parameters() != before);
  CHECK(std::isfinite(s.policy_loss));

  RolloutBuffer poisoned = buf;
  poisoned.returns[3] = NAN;
  CHECK_THROWS_AS(PpoUpdate(net, adam, poisoned, cfg, rng),
                  TrainingDivergedError);
  CHECK(net.parameters().allFinite());
}

PpoConfig TinyConfig() {
  PpoConfig cfg;
  cfg.num_envs = 8;
  cfg.iterations = 3;
  cfg.hidden = 16;
  cfg.steps_per_iteration = 60;
  return cfg;
}

TEST_CASE("training is reproducible and worker-count independent") {
  EnvConfig env;
  env.randomization = DomainRandomization::Preset("small");
  const PpoConfig cfg = TinyConfig();
  const TrainResult a = Train(cfg, env, 5);
  const TrainResult b = Train(cfg, env, 5);
  env.workers = 3;
  const TrainResult c = Train(cfg, env, 5);
  REQUIRE(a.curve.size() == 3);
  for (size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].mean_reward == b.curve[i].mean_reward);
    CHECK(a.curve[i].std_reward == b.curve[i].std_reward);
    CHECK(a.curve[i].mean_reward == c.curve[i].mean_reward);
    CHECK(std::abs(a.curve[i].update.first_ratio - 1.0) < 1e-12);
  }
  CHECK(a.net == b.net);
  CHECK(a.net == c.net);
  const TrainResult d = Train(cfg, EnvConfig{}, 6);
  CHECK(d.curve[0].mean_reward != a.curve[0].mean_reward);
}

TEST_CASE("zero learning rate leaves the policy untouched") {
  PpoConfig cfg = TinyConfig();
  cfg.learning_rate = 0.0;
  const TrainResult r = Train(cfg, EnvConfig{}, 2);
  CHECK(r.net == PolicyNet::Initialize({17, 6, 16}, 2, cfg.init_log_std));
  // Every episode of the fixed random policy yields a comparable return.
  for (const CurvePoint& p : r.curve) {
    CHECK(std::abs(p.mean_reward - r.curve[0].mean_reward) <
          4 * (r.curve[0].std_reward + p.std_reward) / std::sqrt(8.0));
  }
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.clip = 0.0;
  try {
    cfg.Validate();
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    CHECK(e.field() == "ppo.clip");
  }
  cfg = PpoConfig{};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.Validate(), ParameterError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace auvsim
