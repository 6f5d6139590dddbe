#include "dnada/nncore.hpp"

#include <algorithm>
#include <cmath>

#include "dnada/rng.hpp"

namespace dnada::nncore {

DenseNet make_net(const std::vector<std::size_t>& dims,
                  const std::vector<Activation>& acts, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("make_net: need at least one layer");
  if (acts.size() != dims.size() - 1)
    throw std::invalid_argument("make_net: one activation per layer required");
  for (std::size_t l = 0; l + 1 < acts.size(); ++l)
    if (acts[l] == Activation::Softmax)
      throw std::invalid_argument("make_net: softmax allowed only as the terminal activation");

  DenseNet net;
  net.rng_seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.act = acts[l];
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    layer.w = Mat(fan_out, fan_in);
    layer.b = Vec(fan_out, 0.0);
    const double bound = layer.act == Activation::Relu
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& w : layer.w.a) w = bound * (2.0 * rng.uniform01() - 1.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Vec softmax(const Vec& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

namespace {

Vec apply_activation(Activation act, const Vec& z) {
  switch (act) {
    case Activation::Linear:
      return z;
    case Activation::Relu: {
      Vec y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = z[i] > 0.0 ? z[i] : 0.0;
      return y;
    }
    case Activation::Softmax:
      return softmax(z);
  }
  return z;
}

}  // namespace

std::pair<Vec, Tape> forward(const DenseNet& net, const Vec& x) {
  if (x.size() != net.in_dim()) throw std::invalid_argument("forward: input dimension mismatch");
  Tape tape;
  tape.input = x;
  tape.pre.reserve(net.layers.size());
  tape.post.reserve(net.layers.size());
  const Vec* cur = &x;
  for (const auto& layer : net.layers) {
    tape.pre.push_back(affine(layer.w, layer.b, *cur));
    tape.post.push_back(apply_activation(layer.act, tape.pre.back()));
    cur = &tape.post.back();
  }
  return {tape.post.back(), std::move(tape)};
}

Vec forward_value(const DenseNet& net, const Vec& x) {
  if (x.size() != net.in_dim()) throw std::invalid_argument("forward: input dimension mismatch");
  Vec cur = x;
  for (const auto& layer : net.layers)
    cur = apply_activation(layer.act, affine(layer.w, layer.b, cur));
  return cur;
}

GradientSet zero_gradients(const DenseNet& net) {
  GradientSet g;
  g.dw.reserve(net.layers.size());
  g.db.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    g.dw.emplace_back(layer.w.rows, layer.w.cols);
    g.db.emplace_back(layer.b.size(), 0.0);
  }
  return g;
}

void accumulate(GradientSet& into, const GradientSet& g) {
  for (std::size_t l = 0; l < into.dw.size(); ++l) {
    for (std::size_t i = 0; i < into.dw[l].a.size(); ++i) into.dw[l].a[i] += g.dw[l].a[i];
    for (std::size_t i = 0; i < into.db[l].size(); ++i) into.db[l][i] += g.db[l][i];
  }
}

void scale_gradients(GradientSet& g, double s) {
  for (auto& m : g.dw)
    for (auto& v : m.a) v *= s;
  for (auto& b : g.db)
    for (auto& v : b) v *= s;
}

Vec backward_into(const DenseNet& net, const Tape& tape, const Vec& dl_dout, GradientSet& grads) {
  if (tape.pre.size() != net.layers.size())
    throw std::invalid_argument("backward: tape does not match network");
  if (dl_dout.size() != net.out_dim())
    throw std::invalid_argument("backward: upstream gradient dimension mismatch");

  Vec g = dl_dout;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Vec& z = tape.pre[li];
    switch (layer.act) {
      case Activation::Linear:
        break;
      case Activation::Relu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (z[i] <= 0.0) g[i] = 0.0;
        break;
      case Activation::Softmax: {
        const Vec& p = tape.post[li];
        const double gp = dot(g, p);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = p[i] * (g[i] - gp);
        break;
      }
    }
    const Vec& in = li == 0 ? tape.input : tape.post[li - 1];
    Mat& dw = grads.dw[li];
    for (std::size_t r = 0; r < dw.rows; ++r) {
      double* dwr = dw.row_ptr(r);
      const double gr = g[r];
      for (std::size_t c = 0; c < dw.cols; ++c) dwr[c] += gr * in[c];
      grads.db[li][r] += gr;
    }
    Vec g_prev(layer.w.cols, 0.0);
    add_transpose_apply(layer.w, g, g_prev);
    g = std::move(g_prev);
  }
  return g;
}

std::pair<GradientSet, Vec> backward(const DenseNet& net, const Tape& tape, const Vec& dl_dout) {
  GradientSet grads = zero_gradients(net);
  Vec dl_din = backward_into(net, tape, dl_dout, grads);
  return {std::move(grads), std::move(dl_din)};
}

std::pair<double, Vec> softmax_xent(const Vec& logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::invalid_argument("softmax_xent: label out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_sum = std::log(sum);
  const double loss = -(logits[static_cast<std::size_t>(label)] - mx - log_sum);
  Vec grad(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) grad[i] = std::exp(logits[i] - mx - log_sum);
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return {loss, std::move(grad)};
}

AdamState make_adam_state(const DenseNet& net) {
  AdamState st;
  st.w.reserve(net.layers.size());
  st.b.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    st.w.push_back({Vec(layer.w.a.size(), 0.0), Vec(layer.w.a.size(), 0.0)});
    st.b.push_back({Vec(layer.b.size(), 0.0), Vec(layer.b.size(), 0.0)});
  }
  return st;
}

void adam_update(Vec& params, const Vec& grads, AdamBuf& buf, long t, double lr,
                 double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != buf.m.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    buf.m[i] = beta1 * buf.m[i] + (1.0 - beta1) * grads[i];
    buf.v[i] = beta2 * buf.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = buf.m[i] / bc1;
    const double vhat = buf.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state, double lr) {
  if (grads.dw.size() != net.layers.size())
    throw std::invalid_argument("adam_step: gradient set does not match network");
  ++state.t_opt;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (grads.dw[l].rows != net.layers[l].w.rows || grads.dw[l].cols != net.layers[l].w.cols)
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    adam_update(net.layers[l].w.a, grads.dw[l].a, state.w[l], state.t_opt, lr, state.beta1,
                state.beta2, state.eps_opt);
    adam_update(net.layers[l].b, grads.db[l], state.b[l], state.t_opt, lr, state.beta1,
                state.beta2, state.eps_opt);
  }
}

double grad_check(const DenseNet& net,
                  const std::function<std::pair<double, Vec>(const Vec&)>& loss_fn,
                  const Vec& x, double h) {
  auto [out, tape] = forward(net, x);
  auto [loss, dl_dout] = loss_fn(out);
  (void)loss;
  auto [grads, dl_din] = backward(net, tape, dl_dout);
  (void)dl_din;

  DenseNet probe = net;
  auto eval = [&]() { return loss_fn(forward_value(probe, x)).first; };

  double worst = 0.0;
  auto check_param = [&](double& p, double analytic) {
    const double orig = p;
    p = orig + h;
    const double lp = eval();
    p = orig - h;
    const double lm = eval();
    p = orig;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::abs(fd - analytic) / std::max(std::abs(fd) + std::abs(analytic), 1e-6);
    worst = std::max(worst, rel);
  };

  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    for (std::size_t i = 0; i < probe.layers[l].w.a.size(); ++i)
      check_param(probe.layers[l].w.a[i], grads.dw[l].a[i]);
    for (std::size_t i = 0; i < probe.layers[l].b.size(); ++i)
      check_param(probe.layers[l].b[i], grads.db[l][i]);
  }
  return worst;
}

}  // namespace dnada::nncore
