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

#include "vmsched/mlp.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vmsched/errors.h"
#include "vmsched/rng.h"

namespace vmsched {

namespace {

constexpr char kMlpMagic[] = "VMSQNET1";
constexpr std::uint32_t kMlpVersion = 1;

std::string WidthsToString(const std::vector<int> &w) {
  std::ostringstream os;
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "-" : "") << w[i];
  return os.str();
}

}  // namespace

PmFeature PmFeatureOf(const PhysicalMachine &pm) {
  auto ratio = [](Resource v, Resource cap) {
    return cap > 0 ? static_cast<double>(v) / static_cast<double>(cap) : 0.0;
  };
  return {ratio(pm.remaining[0].cpu, pm.capacity[0].cpu), ratio(pm.remaining[0].mem, pm.capacity[0].mem),
          ratio(pm.remaining[1].cpu, pm.capacity[1].cpu), ratio(pm.remaining[1].mem, pm.capacity[1].mem)};
}

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ShapeMismatch("an MLP needs at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw ShapeMismatch("MLP widths must be positive");
  }
  layers_.resize(widths_.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight = Eigen::MatrixXd::Zero(widths_[l + 1], widths_[l]);
    layers_[l].bias = Eigen::VectorXd::Zero(widths_[l + 1]);
  }
}

Mlp Mlp::Random(std::vector<int> widths, std::uint64_t seed) {
  Mlp net(std::move(widths));
  Rng rng(seed);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    auto &layer = net.layers_[l];
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double bound = 1.0 / std::sqrt(fan_in);
    // Layers feeding a ReLU get the wider He bound so activations keep their
    // scale through depth.
    const double weight_bound = l + 1 < net.layers_.size() ? std::sqrt(6.0 / fan_in) : bound;
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.Uniform(-weight_bound, weight_bound);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.Uniform(-bound, bound);
  }
  return net;
}

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (const auto &l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void Mlp::CheckSameShape(const Mlp &other, const char *context) const {
  if (!SameShape(other)) {
    throw ShapeMismatch(std::string(context) + ": shape " + WidthsToString(widths_) + " vs " +
                        WidthsToString(other.widths_));
  }
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd &inputs) const {
  if (inputs.rows() != input_width()) {
    throw ShapeMismatch("forward: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                        std::to_string(input_width()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

double Mlp::ForwardScalar(std::span<const double> input) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  return Forward(x)(0, 0);
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd &inputs, Tape &tape) const {
  if (inputs.rows() != input_width()) {
    throw ShapeMismatch("forward: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                        std::to_string(input_width()));
  }
  tape.inputs.clear();
  tape.inputs.reserve(layers_.size());
  tape.inputs.push_back(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * tape.inputs.back();
    z.colwise() += layers_[l].bias;
    if (l + 1 == layers_.size()) return z;
    tape.inputs.push_back(z.cwiseMax(0.0));
  }
  return {};
}

Mlp Mlp::Backward(const Tape &tape, const Eigen::MatrixXd &output_grad) const {
  if (tape.inputs.size() != layers_.size()) throw ShapeMismatch("backward: tape depth mismatch");
  Mlp grads = ZerosLike(*this);
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd &a = tape.inputs[l];
    grads.layers_[l].weight.noalias() = delta * a.transpose();
    grads.layers_[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
      // ReLU derivative: the layer input is positive exactly where z was.
      delta = back.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

std::vector<double> Mlp::Flatten() const {
  std::vector<double> out;
  out.reserve(num_params());
  for (const auto &l : layers_) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void Mlp::Unflatten(std::span<const double> values) {
  if (values.size() != num_params()) throw ShapeMismatch("unflatten: wrong parameter count");
  std::size_t pos = 0;
  for (auto &l : layers_) {
    std::copy_n(values.data() + pos, l.weight.size(), l.weight.data());
    pos += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.data() + pos, l.bias.size(), l.bias.data());
    pos += static_cast<std::size_t>(l.bias.size());
  }
}

double Mlp::SquaredNorm() const {
  double s = 0.0;
  for (const auto &l : layers_) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

void Mlp::Scale(double factor) {
  for (auto &l : layers_) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

bool operator==(const Mlp &a, const Mlp &b) {
  if (a.widths_ != b.widths_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

std::vector<int> MlpWidths(int input, int hidden, int output, int depth) {
  if (depth < 1) throw ShapeMismatch("MLP depth must be >= 1");
  std::vector<int> w{input};
  for (int i = 0; i + 1 < depth; ++i) w.push_back(hidden);
  w.push_back(output);
  return w;
}

LossAndGradient SumRegressionGradient(const Mlp &net, const SetRegressionBatch &batch) {
  if (net.output_width() != 1) throw ShapeMismatch("sum regression needs a scalar-output network");
  const std::size_t n = batch.targets.size();
  if (n == 0 || batch.offsets.size() != n + 1 ||
      batch.offsets.back() != static_cast<std::size_t>(batch.inputs.cols())) {
    throw ShapeMismatch("sum regression: malformed batch");
  }
  Mlp::Tape tape;
  const Eigen::MatrixXd out = net.Forward(batch.inputs, tape);
  Eigen::MatrixXd grad_out(1, out.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const auto begin = static_cast<Eigen::Index>(batch.offsets[b]);
    const auto end = static_cast<Eigen::Index>(batch.offsets[b + 1]);
    if (end <= begin) throw ShapeMismatch("sum regression: empty feature set");
    const double pred = out.block(0, begin, 1, end - begin).sum();
    const double resid = pred - batch.targets[b];
    loss += resid * resid;
    grad_out.block(0, begin, 1, end - begin).setConstant(2.0 * resid / static_cast<double>(n));
  }
  return {loss / static_cast<double>(n), net.Backward(tape, grad_out)};
}

LossAndGradient SelectedOutputGradient(const Mlp &net, const Eigen::MatrixXd &inputs,
                                       std::span<const int> outputs,
                                       std::span<const double> targets) {
  const std::size_t n = targets.size();
  if (n == 0 || outputs.size() != n || static_cast<std::size_t>(inputs.cols()) != n) {
    throw ShapeMismatch("selected-output regression: malformed batch");
  }
  Mlp::Tape tape;
  const Eigen::MatrixXd out = net.Forward(inputs, tape);
  Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const int o = outputs[b];
    if (o < 0 || o >= out.rows()) throw ShapeMismatch("selected-output regression: bad output index");
    const double resid = out(o, static_cast<Eigen::Index>(b)) - targets[b];
    loss += resid * resid;
    grad_out(o, static_cast<Eigen::Index>(b)) = 2.0 * resid / static_cast<double>(n);
  }
  return {loss / static_cast<double>(n), net.Backward(tape, grad_out)};
}

double ClipGlobalNorm(Mlp &grads, double max_norm) {
  const double norm = std::sqrt(grads.SquaredNorm());
  if (max_norm > 0.0 && norm > max_norm) grads.Scale(max_norm / norm);
  return norm;
}

Adam::Adam(const Mlp &shape, AdamOptions options)
    : options_(options), m_(Mlp::ZerosLike(shape)), v_(Mlp::ZerosLike(shape)) {}

void Adam::Step(Mlp &params, const Mlp &grads) {
  params.CheckSameShape(grads, "adam step (grads)");
  params.CheckSameShape(m_, "adam step (moments)");
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = options_.learning_rate;
  const double eps = options_.epsilon;
  auto update = [&](auto &p, const auto &g, auto &m, auto &v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    update(params.layers()[l].weight, grads.layers()[l].weight, m_.layers()[l].weight,
           v_.layers()[l].weight);
    update(params.layers()[l].bias, grads.layers()[l].bias, m_.layers()[l].bias, v_.layers()[l].bias);
  }
}

void Adam::Write(BinaryWriter &w) const {
  w.Write(options_.learning_rate);
  w.Write(options_.beta1);
  w.Write(options_.beta2);
  w.Write(options_.epsilon);
  w.Write(step_);
  WriteMlp(w, m_);
  WriteMlp(w, v_);
}

Adam Adam::Read(BinaryReader &r, const Mlp &expected_shape) {
  Adam adam;
  adam.options_.learning_rate = r.Read<double>();
  adam.options_.beta1 = r.Read<double>();
  adam.options_.beta2 = r.Read<double>();
  adam.options_.epsilon = r.Read<double>();
  adam.step_ = r.Read<std::int64_t>();
  adam.m_ = ReadMlp(r, expected_shape.widths());
  adam.v_ = ReadMlp(r, expected_shape.widths());
  return adam;
}

void SoftUpdate(const Mlp &online, Mlp &target, double tau) {
  online.CheckSameShape(target, "soft update");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("soft update rate must lie in [0, 1]");
  for (std::size_t l = 0; l < online.num_layers(); ++l) {
    auto &t = target.layers()[l];
    const auto &o = online.layers()[l];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

void WriteMlp(BinaryWriter &w, const Mlp &net) {
  w.WriteString(kMlpMagic);
  w.Write(kMlpVersion);
  w.Write<std::uint32_t>(static_cast<std::uint32_t>(net.widths().size()));
  for (int width : net.widths()) w.Write<std::int32_t>(width);
  for (const auto &l : net.layers()) {
    w.WriteDoubles(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    w.WriteDoubles(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

Mlp ReadMlp(BinaryReader &r, const std::vector<int> &expected_widths) {
  if (r.ReadString() != kMlpMagic) throw Error("not a network record");
  const auto version = r.Read<std::uint32_t>();
  if (version != kMlpVersion) throw Error("unsupported network version " + std::to_string(version));
  const auto n = r.Read<std::uint32_t>();
  if (n < 2 || n > 64) throw Error("corrupt network record");
  std::vector<int> widths(n);
  for (auto &width : widths) width = r.Read<std::int32_t>();
  if (!expected_widths.empty() && widths != expected_widths) {
    throw ShapeMismatch("checkpoint network " + WidthsToString(widths) + " does not match expected " +
                        WidthsToString(expected_widths));
  }
  Mlp net(widths);
  for (auto &l : net.layers()) {
    r.ReadDoubles(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    r.ReadDoubles(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return net;
}

void SaveMlp(const Mlp &net, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  BinaryWriter w(out);
  WriteMlp(w, net);
}

Mlp LoadMlp(const std::filesystem::path &path, const std::vector<int> &expected_widths) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("cannot open " + path.string());
  BinaryReader r(in);
  return ReadMlp(r, expected_widths);
}

}  // namespace vmsched
