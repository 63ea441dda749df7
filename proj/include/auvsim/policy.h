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

#ifndef AUVSIM_POLICY_H_
#define AUVSIM_POLICY_H_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace auvsim {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;

class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(const std::string& what)
      : std::runtime_error(what) {}
};

struct PolicyShape {
  int obs_dim = 17;
  int act_dim = 6;
  int hidden = 128;

  bool operator==(const PolicyShape&) const = default;
};

// Flat-parameter view of an in -> hidden -> hidden -> out tanh MLP.
// Parameters are laid out as W0, b0, W1, b1, W2, b2 with each matrix stored
// column-major.
class Mlp {
 public:
  Mlp(int in, int hidden, int out, int offset);

  struct Cache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd h1;  // post-activation
    Eigen::MatrixXd h2;
  };

  int size() const { return size_; }
  int offset() const { return offset_; }
  int out() const { return out_; }

  // x: in x batch -> out x batch. Fills `cache` when given.
  Eigen::MatrixXd Forward(const Eigen::VectorXd& params,
                          const Eigen::MatrixXd& x, Cache* cache) const;
  // Accumulates dLoss/dparams into `grad` given dLoss/doutput.
  void Backward(const Eigen::VectorXd& params, const Cache& cache,
                const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const;

 private:
  int in_, hidden_, out_, offset_, size_;
  int w0_, b0_, w1_, b1_, w2_, b2_;
};

// Gaussian actor and separate value critic sharing one flat parameter
// vector: actor MLP, then act_dim log-std entries, then critic MLP.
class PolicyNet {
 public:
  explicit PolicyNet(PolicyShape shape = {});

  // PyTorch-style uniform(+-1/sqrt(fan_in)) init; the actor output layer is
  // scaled by 0.01 so initial means start near zero.
  static PolicyNet Initialize(PolicyShape shape, uint64_t seed,
                              double init_log_std);

  const PolicyShape& shape() const { return shape_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  int num_parameters() const { return static_cast<int>(params_.size()); }

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  int log_std_offset() const { return log_std_offset_; }

  // Clamped to [kMinLogStd, kMaxLogStd].
  Eigen::VectorXd LogStd() const;

  struct Output {
    Eigen::MatrixXd mean;      // act_dim x batch
    Eigen::VectorXd log_std;   // act_dim
    Eigen::RowVectorXd value;  // batch
  };
  // Throws TrainingDivergedError if the parameters or outputs are
  // non-finite.
  Output Forward(const Eigen::MatrixXd& obs) const;
  Output Forward(std::span<const double> obs) const;

  bool operator==(const PolicyNet& other) const {
    return shape_ == other.shape_ && params_ == other.params_;
  }

 private:
  PolicyShape shape_;
  Mlp actor_;
  int log_std_offset_;
  Mlp critic_;
  Eigen::VectorXd params_;
};

// Diagonal Gaussian log-density of x.
double GaussianLogProb(std::span<const double> x, std::span<const double> mean,
                       std::span<const double> log_std);

struct SampledAction {
  std::vector<double> raw;      // unclamped sample
  std::vector<double> clamped;  // executed action in [-1, 1]
  double log_prob = 0.0;        // of the raw sample
};

// Draws a ~ N(mean, exp(log_std)); deterministic mode returns the mean.
SampledAction SampleAction(std::span<const double> mean,
                           std::span<const double> log_std,
                           std::mt19937_64& rng, bool deterministic = false);

}  // namespace auvsim

#endif  // AUVSIM_POLICY_H_
