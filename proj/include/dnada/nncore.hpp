// Minimal dense-network engine: forward/backward passes over fully
// connected stacks, the gradient reversal primitive, softmax cross-entropy,
// Adam, and a finite-difference gradient checker.
//
// Networks are plain values. Training mutates one network on one thread;
// read-only inference may run concurrently on copies.
#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dnada/tensor.hpp"

namespace dnada::nncore {

enum class Activation { Linear, Relu, Softmax };

struct Layer {
  Mat w;  // out x in
  Vec b;
  Activation act = Activation::Linear;
};

struct DenseNet {
  std::vector<Layer> layers;
  std::uint64_t rng_seed = 0;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
};

// Kaiming-uniform for relu layers, Xavier-uniform otherwise, zero biases.
// Softmax is only accepted as the terminal activation.
DenseNet make_net(const std::vector<std::size_t>& dims,
                  const std::vector<Activation>& acts, std::uint64_t seed);

struct Tape {
  Vec input;
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // activation output per layer
};

std::pair<Vec, Tape> forward(const DenseNet& net, const Vec& x);
Vec forward_value(const DenseNet& net, const Vec& x);  // no tape

struct GradientSet {
  std::vector<Mat> dw;
  std::vector<Vec> db;
};

GradientSet zero_gradients(const DenseNet& net);
void accumulate(GradientSet& into, const GradientSet& g);
void scale_gradients(GradientSet& g, double s);

// Exact reverse-mode gradients; returns (parameter gradients, dL/dinput).
std::pair<GradientSet, Vec> backward(const DenseNet& net, const Tape& tape, const Vec& dl_dout);

// Accumulating variant used in training loops.
Vec backward_into(const DenseNet& net, const Tape& tape, const Vec& dl_dout, GradientSet& grads);

// Gradient reversal: identity forward, -lambda * upstream backward.
inline Vec grl(const Vec& dl_dy, double lambda_grl) { return scaled(dl_dy, -lambda_grl); }

// Numerically stabilized cross-entropy on logits.
// Returns (loss, dL/dlogits = softmax(logits) - onehot(label)).
std::pair<double, Vec> softmax_xent(const Vec& logits, int label);
Vec softmax(const Vec& logits);

struct AdamBuf {
  Vec m, v;
};

struct AdamState {
  std::vector<AdamBuf> w;  // per layer
  std::vector<AdamBuf> b;
  long t_opt = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_opt = 1e-8;
};

AdamState make_adam_state(const DenseNet& net);

// One bias-corrected Adam update over raw parameter storage.
void adam_update(Vec& params, const Vec& grads, AdamBuf& buf, long t, double lr,
                 double beta1, double beta2, double eps);

void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state, double lr);

// Central-difference check of backward() against loss_fn, which maps the
// network output to (loss, dL/doutput). Returns the worst relative error
// over every parameter.
double grad_check(const DenseNet& net,
                  const std::function<std::pair<double, Vec>(const Vec&)>& loss_fn,
                  const Vec& x, double h = 1e-5);

}  // namespace dnada::nncore
