// Copyright 2026 The qzanneal Authors
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

// Policy and value networks for guided tree search.
//
// Both networks are plain dense stacks with rectifier hidden layers. The
// policy head emits M * P logits, one block of P = 2l/delta + 1 per tree
// level; a state at level j only ever reads block j, normalized with a
// softmax. The value head ends in tanh so v lies in [-1, 1].
//
// Training minimizes, per batch of B samples,
//
//   L = 1/B sum_b [ (z_b - v_b)^2 - pi_b . log p_b ] + lambda ||theta||^2
//
// with theta every weight and bias of both networks.

#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qzanneal/common.hpp"
#include "qzanneal/dynamics.hpp"  // little-endian helpers

namespace qzanneal {

enum class Activation : std::uint32_t { identity = 0, relu = 1, tanh = 2 };

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::identity;

  Eigen::Index in() const { return W.cols(); }
  Eigen::Index out() const { return W.rows(); }
};

class Mlp {
 public:
  Mlp() = default;

  /// sizes = {input, hidden..., output}. Weights are uniform in
  /// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  Mlp(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng, bool zero_output = false) {
    if (sizes.size() < 2) throw InvalidArgument("Mlp: need at least input and output sizes");
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      DenseLayer L;
      L.W.resize(sizes[k + 1], sizes[k]);
      L.b = Eigen::VectorXd::Zero(sizes[k + 1]);
      const bool last = k + 2 == sizes.size();
      L.act = last ? output : hidden;
      if (last && zero_output) {
        L.W.setZero();
      } else {
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(sizes[k]), 1.0 / std::sqrt(sizes[k]));
        for (Eigen::Index i = 0; i < L.W.size(); ++i) L.W.data()[i] = u(rng);
      }
      layers_.push_back(std::move(L));
    }
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  Eigen::Index input_size() const { return layers_.front().in(); }
  Eigen::Index output_size() const { return layers_.back().out(); }

  /// Column-batched forward pass; acts[0] is the input, acts.back() the output.
  std::vector<Eigen::MatrixXd> forward(const Eigen::MatrixXd& X) const {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(X);
    for (const auto& L : layers_) {
      Eigen::MatrixXd Z = L.W * acts.back();
      Z.colwise() += L.b;
      activate(Z, L.act);
      acts.push_back(std::move(Z));
    }
    return acts;
  }

  /// Accumulates parameter gradients given dL/d(output) for a forward pass.
  void backward(const std::vector<Eigen::MatrixXd>& acts, Eigen::MatrixXd grad_out, Mlp& grads) const {
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& L = layers_[k];
      const auto& A = acts[k + 1];
      switch (L.act) {
        case Activation::relu:
          grad_out = grad_out.cwiseProduct((A.array() > 0.0).cast<double>().matrix());
          break;
        case Activation::tanh:
          grad_out = grad_out.cwiseProduct((1.0 - A.array().square()).matrix());
          break;
        case Activation::identity:
          break;
      }
      grads.layers_[k].W.noalias() += grad_out * acts[k].transpose();
      grads.layers_[k].b += grad_out.rowwise().sum();
      if (k > 0) grad_out = L.W.transpose() * grad_out;
    }
  }

  Mlp zeros_like() const {
    Mlp z;
    for (const auto& L : layers_)
      z.layers_.push_back({Eigen::MatrixXd::Zero(L.out(), L.in()), Eigen::VectorXd::Zero(L.out()), L.act});
    return z;
  }

  double squared_norm() const {
    double s = 0;
    for (const auto& L : layers_) s += L.W.squaredNorm() + L.b.squaredNorm();
    return s;
  }

  std::size_t parameter_count() const {
    std::size_t c = 0;
    for (const auto& L : layers_) c += L.W.size() + L.b.size();
    return c;
  }

 private:
  static void activate(Eigen::MatrixXd& Z, Activation act) {
    switch (act) {
      case Activation::relu:
        Z = Z.cwiseMax(0.0);
        break;
      case Activation::tanh:
        Z = Z.array().tanh().matrix();
        break;
      case Activation::identity:
        break;
    }
  }

  std::vector<DenseLayer> layers_;
};

struct NetworkShape {
  int input_size = 0;
  int levels = 5;    // M
  int choices = 41;  // P = 2l/delta + 1
  std::vector<int> policy_hidden{256, 128};
  std::vector<int> value_hidden{256, 128, 64};
  /// Policy output width; 0 means levels * choices.
  int policy_outputs = 0;
  bool zero_final_layers = false;
};

/// Policy + value networks and their regularization strength.
struct NetworkParams {
  Mlp policy;
  Mlp value;
  int levels = 0;
  int choices = 0;
  double lambda = 1e-4;

  double squared_norm() const { return policy.squared_norm() + value.squared_norm(); }

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const Mlp* net : {&policy, &value})
      for (const auto& L : net->layers()) {
        out.insert(out.end(), L.W.data(), L.W.data() + L.W.size());
        out.insert(out.end(), L.b.data(), L.b.data() + L.b.size());
      }
    return out;
  }

  void set_flat(const std::vector<double>& v) {
    std::size_t need = 0;
    for (const Mlp* net : {&policy, &value}) need += net->parameter_count();
    if (need != v.size()) throw InvalidArgument("NetworkParams::set_flat: size mismatch");
    std::size_t k = 0;
    for (Mlp* net : {&policy, &value})
      for (auto& L : net->layers()) {
        for (Eigen::Index i = 0; i < L.W.size(); ++i) L.W.data()[i] = v.at(k++);
        for (Eigen::Index i = 0; i < L.b.size(); ++i) L.b.data()[i] = v.at(k++);
      }
  }
};

inline NetworkParams make_networks(const NetworkShape& shape, std::uint64_t seed, double lambda = 1e-4) {
  if (shape.input_size < 1 || shape.levels < 1 || shape.choices < 1)
    throw InvalidArgument("make_networks: empty shape");
  Rng rng(splitmix64(seed));
  std::vector<int> ps{shape.input_size};
  ps.insert(ps.end(), shape.policy_hidden.begin(), shape.policy_hidden.end());
  ps.push_back(shape.policy_outputs > 0 ? shape.policy_outputs : shape.levels * shape.choices);
  std::vector<int> vs{shape.input_size};
  vs.insert(vs.end(), shape.value_hidden.begin(), shape.value_hidden.end());
  vs.push_back(1);
  NetworkParams p;
  p.policy = Mlp(ps, Activation::relu, Activation::identity, rng, shape.zero_final_layers);
  p.value = Mlp(vs, Activation::relu, Activation::tanh, rng, shape.zero_final_layers);
  p.levels = shape.levels;
  p.choices = shape.choices;
  p.lambda = lambda;
  return p;
}

inline void check_policy_shape(const NetworkParams& p) {
  if (p.policy.output_size() != static_cast<Eigen::Index>(p.levels) * p.choices)
    throw InvalidArgument("policy head has " + std::to_string(p.policy.output_size()) +
                          " outputs, grid needs " + std::to_string(p.levels * p.choices));
}

/// Softmax over block `level` of a logit column.
inline Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, int level, int choices) {
  Eigen::VectorXd blk = logits.segment(static_cast<Eigen::Index>(level) * choices, choices);
  blk.array() -= blk.maxCoeff();
  blk = blk.array().exp().matrix();
  return blk / blk.sum();
}

/// One training example: network input, the tree level it was taken at,
/// a target distribution over that level's P actions and a value target.
struct TrainingSample {
  Eigen::VectorXd input;
  int level = 0;
  Eigen::VectorXd pi;
  double z = 0;
};

struct LossBreakdown {
  double value = 0;   // mean (z - v)^2
  double policy = 0;  // mean -pi . log p
  double reg = 0;     // lambda ||theta||^2
  double total() const { return value + policy + reg; }
};

namespace detail {

inline Eigen::MatrixXd stack_inputs(const std::vector<TrainingSample>& batch) {
  Eigen::MatrixXd X(batch.front().input.size(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) X.col(static_cast<Eigen::Index>(b)) = batch[b].input;
  return X;
}

}  // namespace detail

/// Loss and (optionally) its gradient with respect to every parameter.
inline LossBreakdown loss_and_gradient(const NetworkParams& p, const std::vector<TrainingSample>& batch,
                                       NetworkParams* grad) {
  if (batch.empty()) throw InvalidArgument("loss: empty batch");
  check_policy_shape(p);
  const double B = static_cast<double>(batch.size());
  const Eigen::MatrixXd X = detail::stack_inputs(batch);
  if (X.rows() != p.policy.input_size()) throw InvalidArgument("loss: input width does not match network");
  const auto pa = p.policy.forward(X);
  const auto va = p.value.forward(X);
  const Eigen::MatrixXd& logits = pa.back();
  const Eigen::MatrixXd& v = va.back();

  LossBreakdown L;
  Eigen::MatrixXd gl = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  Eigen::MatrixXd gv(1, v.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const auto& s = batch[static_cast<std::size_t>(b)];
    if (s.pi.size() != p.choices) throw InvalidArgument("loss: pi has the wrong number of actions");
    if (s.level < 0 || s.level >= p.levels) throw InvalidArgument("loss: level out of range");
    const Eigen::VectorXd prob = masked_softmax(logits.col(b), s.level, p.choices);
    for (int a = 0; a < p.choices; ++a)
      if (s.pi(a) != 0.0) L.policy -= s.pi(a) * std::log(prob(a));
    const double dv = v(0, b) - s.z;
    L.value += dv * dv;
    gv(0, b) = 2.0 * dv / B;
    gl.col(b).segment(static_cast<Eigen::Index>(s.level) * p.choices, p.choices) =
        (prob * s.pi.sum() - s.pi) / B;
  }
  L.value /= B;
  L.policy /= B;
  L.reg = p.lambda * p.squared_norm();
  if (!std::isfinite(L.total()))
    throw Error("loss is not finite (value " + std::to_string(L.value) + ", policy " +
                std::to_string(L.policy) + ", reg " + std::to_string(L.reg) + ")");
  if (grad) {
    grad->policy = p.policy.zeros_like();
    grad->value = p.value.zeros_like();
    grad->levels = p.levels;
    grad->choices = p.choices;
    grad->lambda = p.lambda;
    p.policy.backward(pa, gl, grad->policy);
    p.value.backward(va, gv, grad->value);
    for (auto [net, g] : {std::pair{&p.policy, &grad->policy}, std::pair{&p.value, &grad->value}})
      for (std::size_t k = 0; k < net->layers().size(); ++k) {
        g->layers()[k].W += 2.0 * p.lambda * net->layers()[k].W;
        g->layers()[k].b += 2.0 * p.lambda * net->layers()[k].b;
      }
  }
  return L;
}

inline LossBreakdown batch_loss(const NetworkParams& p, const std::vector<TrainingSample>& batch) {
  return loss_and_gradient(p, batch, nullptr);
}

/// One plain gradient-descent step on the mean batch loss. Returns the loss
/// evaluated before the update.
inline double train_step(NetworkParams& p, const std::vector<TrainingSample>& batch, double lr) {
  NetworkParams g;
  const double loss = loss_and_gradient(p, batch, &g).total();
  for (auto [net, gn] : {std::pair{&p.policy, &g.policy}, std::pair{&p.value, &g.value}})
    for (std::size_t k = 0; k < net->layers().size(); ++k) {
      net->layers()[k].W -= lr * gn->layers()[k].W;
      net->layers()[k].b -= lr * gn->layers()[k].b;
    }
  return loss;
}

/// Geometric interpolation from `start` to `end` over `steps` stages.
inline double geometric_rate(double start, double end, int stage, int steps) {
  if (steps <= 1) return start;
  const double f = std::clamp(static_cast<double>(stage) / (steps - 1), 0.0, 1.0);
  return start * std::pow(end / start, f);
}

/// Shuffled mini-batch epochs; returns the mean batch loss of each epoch.
inline std::vector<double> train_epochs(NetworkParams& p, const std::vector<TrainingSample>& data, int epochs,
                                        int batch_size, double lr_start, double lr_end, Rng& rng) {
  if (batch_size < 1) throw InvalidArgument("train_epochs: batch size must be positive");
  std::vector<double> history;
  if (data.empty()) return history;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int e = 0; e < epochs; ++e) {
    const double lr = geometric_rate(lr_start, lr_end, e, epochs);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0;
    int batches = 0;
    for (std::size_t k = 0; k < order.size(); k += static_cast<std::size_t>(batch_size)) {
      std::vector<TrainingSample> batch;
      for (std::size_t i = k; i < std::min(order.size(), k + batch_size); ++i) batch.push_back(data[order[i]]);
      sum += train_step(p, batch, lr);
      ++batches;
    }
    history.push_back(sum / batches);
  }
  return history;
}

// Checkpoint layout, little-endian:
//   "QZNN", uint32 version (1), float64 lambda, uint32 levels, uint32 choices,
//   then for the policy net and then the value net:
//     uint32 layer count, and per layer uint32 in, uint32 out, uint32 activation
//   then, in the same order, per layer: W as out x in float64 row-major,
//   followed by b as out float64.

inline void save_checkpoint(std::ostream& out, const NetworkParams& p) {
  using detail::write_le;
  out.write("QZNN", 4);
  write_le<std::uint32_t>(out, 1);
  write_le<double>(out, p.lambda);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.levels));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.choices));
  for (const Mlp* net : {&p.policy, &p.value}) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net->layers().size()));
    for (const auto& L : net->layers()) {
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(L.in()));
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(L.out()));
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(L.act));
    }
  }
  for (const Mlp* net : {&p.policy, &p.value})
    for (const auto& L : net->layers()) {
      for (Eigen::Index r = 0; r < L.W.rows(); ++r)
        for (Eigen::Index c = 0; c < L.W.cols(); ++c) write_le<double>(out, L.W(r, c));
      for (Eigen::Index r = 0; r < L.b.size(); ++r) write_le<double>(out, L.b(r));
    }
}

inline NetworkParams load_checkpoint(std::istream& in) {
  using detail::read_le;
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "QZNN") throw ParseError("checkpoint: bad magic");
  if (read_le<std::uint32_t>(in) != 1) throw ParseError("checkpoint: unsupported version");
  NetworkParams p;
  p.lambda = read_le<double>(in);
  p.levels = static_cast<int>(read_le<std::uint32_t>(in));
  p.choices = static_cast<int>(read_le<std::uint32_t>(in));
  for (Mlp* net : {&p.policy, &p.value}) {
    const auto count = read_le<std::uint32_t>(in);
    if (count == 0 || count > 64) throw ParseError("checkpoint: implausible layer count");
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto ni = read_le<std::uint32_t>(in);
      const auto no = read_le<std::uint32_t>(in);
      const auto act = read_le<std::uint32_t>(in);
      if (act > 2 || ni == 0 || no == 0 || ni > (1u << 20) || no > (1u << 20))
        throw ParseError("checkpoint: bad layer header");
      net->layers().push_back({Eigen::MatrixXd(no, ni), Eigen::VectorXd(no), static_cast<Activation>(act)});
    }
  }
  for (Mlp* net : {&p.policy, &p.value})
    for (auto& L : net->layers()) {
      for (Eigen::Index r = 0; r < L.W.rows(); ++r)
        for (Eigen::Index c = 0; c < L.W.cols(); ++c) L.W(r, c) = read_le<double>(in);
      for (Eigen::Index r = 0; r < L.b.size(); ++r) L.b(r) = read_le<double>(in);
    }
  return p;
}

}  // namespace qzanneal
