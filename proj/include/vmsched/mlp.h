// Copyright 2026 The vmsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vmsched/binary_io.h"
#include "vmsched/cluster.h"

namespace vmsched {

/// Input of the shared per-PM value network: remaining cpu and mem of both
/// NUMA nodes divided by capacity, each in [0, 1].
inline constexpr int kPmFeatureWidth = 4;
using PmFeature = std::array<double, kPmFeatureWidth>;

PmFeature PmFeatureOf(const PhysicalMachine &pm);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Fully connected ReLU network with a linear output layer. Also used as the
/// container for gradients and optimizer moments, which share its shape.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network; widths = {in, h1, ..., out}.
  explicit Mlp(std::vector<int> widths);
  /// Hidden-layer weights from U(-sqrt(6/fan_in), sqrt(6/fan_in)); output
  /// weights and all biases from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp Random(std::vector<int> widths, std::uint64_t seed);
  static Mlp ZerosLike(const Mlp &other) { return Mlp(other.widths()); }

  const std::vector<int> &widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_params() const;
  std::vector<DenseLayer> &layers() { return layers_; }
  const std::vector<DenseLayer> &layers() const { return layers_; }

  bool SameShape(const Mlp &other) const { return widths_ == other.widths_; }
  /// Throws ShapeMismatch.
  void CheckSameShape(const Mlp &other, const char *context) const;

  /// Batched forward pass; columns are samples. Reentrant.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd &inputs) const;
  double ForwardScalar(std::span<const double> input) const;

  /// Layer inputs recorded by a forward pass, consumed by Backward.
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;
  };
  Eigen::MatrixXd Forward(const Eigen::MatrixXd &inputs, Tape &tape) const;

  /// Parameter gradient given dLoss/dOutput (out x batch) for a taped pass.
  Mlp Backward(const Tape &tape, const Eigen::MatrixXd &output_grad) const;

  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> values);

  double SquaredNorm() const;
  void Scale(double factor);

  friend bool operator==(const Mlp &a, const Mlp &b);

 private:
  std::vector<int> widths_;
  std::vector<DenseLayer> layers_;
};

/// `depth` affine layers: in -> hidden x (depth - 1) -> out.
std::vector<int> MlpWidths(int input, int hidden, int output, int depth = 6);

struct LossAndGradient {
  double loss = 0.0;
  Mlp gradient;
};

/// Samples whose prediction is the SUM of the network output over a set of
/// inputs (one column per PM). Sample b owns columns [offsets[b], offsets[b+1]).
struct SetRegressionBatch {
  Eigen::MatrixXd inputs;
  std::vector<std::size_t> offsets;
  std::vector<double> targets;
};

/// Mean over samples of (sum_j f(x_j) - y)^2 and its exact gradient through
/// the shared parameters. Requires a scalar-output network.
LossAndGradient SumRegressionGradient(const Mlp &net, const SetRegressionBatch &batch);

/// Mean over samples of (f(x_b)[output_b] - y_b)^2: one regressed output
/// per sample, as in a multi-head Q-network.
LossAndGradient SelectedOutputGradient(const Mlp &net, const Eigen::MatrixXd &inputs,
                                       std::span<const int> outputs,
                                       std::span<const double> targets);

/// Rescales `grads` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double ClipGlobalNorm(Mlp &grads, double max_norm);

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp &shape, AdamOptions options);

  /// One bias-corrected Adam update. Throws ShapeMismatch.
  void Step(Mlp &params, const Mlp &grads);

  const AdamOptions &options() const { return options_; }
  std::int64_t step_count() const { return step_; }
  const Mlp &first_moment() const { return m_; }
  const Mlp &second_moment() const { return v_; }

  void Write(BinaryWriter &w) const;
  static Adam Read(BinaryReader &r, const Mlp &expected_shape);

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  Mlp m_;
  Mlp v_;
};

/// target <- tau * online + (1 - tau) * target. Throws ShapeMismatch.
void SoftUpdate(const Mlp &online, Mlp &target, double tau);

void WriteMlp(BinaryWriter &w, const Mlp &net);
/// Throws ShapeMismatch if `expected_widths` is non-empty and differs.
Mlp ReadMlp(BinaryReader &r, const std::vector<int> &expected_widths = {});

void SaveMlp(const Mlp &net, const std::filesystem::path &path);
Mlp LoadMlp(const std::filesystem::path &path, const std::vector<int> &expected_widths = {});

}  // namespace vmsched
