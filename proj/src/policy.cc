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

#include "auvsim/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace auvsim {
namespace {

using Eigen::MatrixXd;
using ConstMatMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

Mlp::Mlp(int in, int hidden, int out, int offset)
    : in_(in), hidden_(hidden), out_(out), offset_(offset) {
  w0_ = offset;
  b0_ = w0_ + hidden * in;
  w1_ = b0_ + hidden;
  b1_ = w1_ + hidden * hidden;
  w2_ = b1_ + hidden;
  b2_ = w2_ + out * hidden;
  size_ = b2_ + out - offset;
}

MatrixXd Mlp::Forward(const Eigen::VectorXd& params, const MatrixXd& x,
                      Cache* cache) const {
  const double* p = params.data();
  ConstMatMap w0(p + w0_, hidden_, in_);
  ConstVecMap b0(p + b0_, hidden_);
  ConstMatMap w1(p + w1_, hidden_, hidden_);
  ConstVecMap b1(p + b1_, hidden_);
  ConstMatMap w2(p + w2_, out_, hidden_);
  ConstVecMap b2(p + b2_, out_);

  MatrixXd h1 = w0 * x;
  h1.colwise() += b0;
  h1 = h1.array().tanh();
  MatrixXd h2 = w1 * h1;
  h2.colwise() += b1;
  h2 = h2.array().tanh();
  MatrixXd y = w2 * h2;
  y.colwise() += b2;
  if (cache != nullptr) {
    cache->input = x;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return y;
}

void Mlp::Backward(const Eigen::VectorXd& params, const Cache& cache,
                   const MatrixXd& grad_out, Eigen::VectorXd& grad) const {
  const double* p = params.data();
  double* g = grad.data();
  ConstMatMap w1(p + w1_, hidden_, hidden_);
  ConstMatMap w2(p + w2_, out_, hidden_);

  MatMap(g + w2_, out_, hidden_).noalias() += grad_out * cache.h2.transpose();
  VecMap(g + b2_, out_) += grad_out.rowwise().sum();

  MatrixXd d2 = w2.transpose() * grad_out;
  d2.array() *= 1.0 - cache.h2.array().square();
  MatMap(g + w1_, hidden_, hidden_).noalias() += d2 * cache.h1.transpose();
  VecMap(g + b1_, hidden_) += d2.rowwise().sum();

  MatrixXd d1 = w1.transpose() * d2;
  d1.array() *= 1.0 - cache.h1.array().square();
  MatMap(g + w0_, hidden_, in_).noalias() += d1 * cache.input.transpose();
  VecMap(g + b0_, hidden_) += d1.rowwise().sum();
}

PolicyNet::PolicyNet(PolicyShape shape)
    : shape_(shape),
      actor_(shape.obs_dim, shape.hidden, shape.act_dim, 0),
      log_std_offset_(actor_.size()),
      critic_(shape.obs_dim, shape.hidden, 1, actor_.size() + shape.act_dim),
      params_(Eigen::VectorXd::Zero(actor_.size() + shape.act_dim +
                                    critic_.size())) {
  if (shape.obs_dim < 1 || shape.act_dim < 1 || shape.hidden < 1) {
    throw std::invalid_argument("policy dimensions must be positive");
  }
}

PolicyNet PolicyNet::Initialize(PolicyShape shape, uint64_t seed,
                                double init_log_std) {
  PolicyNet net(shape);
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  auto fill = [&](int offset, int rows, int fan_in, double scale) {
    const double bound = scale / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < rows * fan_in + rows; ++i) {
      net.params_[offset + i] = u(rng);
    }
  };
  for (const Mlp* mlp : {&net.actor_, &net.critic_}) {
    const int h = shape.hidden;
    const bool is_actor = mlp == &net.actor_;
    int offset = mlp->offset();
    fill(offset, h, shape.obs_dim, 1.0);
    offset += h * shape.obs_dim + h;
    fill(offset, h, h, 1.0);
    offset += h * h + h;
    fill(offset, mlp->out(), h, is_actor ? 0.01 : 1.0);
  }
  net.params_.segment(net.log_std_offset_, shape.act_dim)
      .setConstant(std::clamp(init_log_std, kMinLogStd, kMaxLogStd));
  return net;
}

Eigen::VectorXd PolicyNet::LogStd() const {
  return params_.segment(log_std_offset_, shape_.act_dim)
      .cwiseMax(kMinLogStd)
      .cwiseMin(kMaxLogStd);
}

PolicyNet::Output PolicyNet::Forward(const Eigen::MatrixXd& obs) const {
  if (obs.rows() != shape_.obs_dim) {
    throw std::invalid_argument("observation has " +
                                std::to_string(obs.rows()) +
                                " entries, policy expects " +
                                std::to_string(shape_.obs_dim));
  }
  if (!params_.allFinite()) {
    throw TrainingDivergedError("policy parameters are non-finite");
  }
  Output out;
  out.mean = actor_.Forward(params_, obs, nullptr);
  out.log_std = LogStd();
  out.value = critic_.Forward(params_, obs, nullptr);
  if (!out.mean.allFinite() || !out.value.allFinite()) {
    throw TrainingDivergedError("policy outputs are non-finite");
  }
  return out;
}

PolicyNet::Output PolicyNet::Forward(std::span<const double> obs) const {
  return Forward(Eigen::MatrixXd(
      Eigen::Map<const Eigen::MatrixXd>(obs.data(), obs.size(), 1)));
}

double GaussianLogProb(std::span<const double> x, std::span<const double> mean,
                       std::span<const double> log_std) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return lp;
}

SampledAction SampleAction(std::span<const double> mean,
                           std::span<const double> log_std,
                           std::mt19937_64& rng, bool deterministic) {
  SampledAction out;
  out.raw.assign(mean.begin(), mean.end());
  if (!deterministic) {
    std::normal_distribution<double> normal;
    for (size_t i = 0; i < mean.size(); ++i) {
      out.raw[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
    }
  }
  out.clamped.resize(out.raw.size());
  for (size_t i = 0; i < out.raw.size(); ++i) {
    out.clamped[i] = std::clamp(out.raw[i], -1.0, 1.0);
  }
  out.log_prob = GaussianLogProb(out.raw, mean, log_std);
  return out;
}

}  // namespace auvsim
