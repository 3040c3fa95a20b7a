#include "thermopinn/mlp.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

#include "thermopinn/rng.hpp"

namespace thermopinn {

int MlpParams::flat_size() const {
  int d = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    d += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  return d;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(std::size_t(flat_size()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].begin(), weights[l].end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void validate_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 3)
    throw ModelError("layer_sizes needs at least one hidden layer");
  if (layer_sizes.front() != 2)
    throw ModelError("layer_sizes must start with 2 inputs (x, t)");
  if (layer_sizes.back() != 1)
    throw ModelError("layer_sizes must end with 1 output");
  for (int s : layer_sizes)
    if (s <= 0) throw ModelError("layer_sizes entries must be positive");
}

MlpParams init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  validate_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  rng::Stream stream(rng::derive(seed, 0x6d6c70));  // "mlp"
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int fan_in = layer_sizes[l];
    int fan_out = layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    std::vector<double> w(std::size_t(fan_in) * std::size_t(fan_out));
    for (auto& v : w) v = stream.uniform(-limit, limit);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(std::size_t(fan_out), 0.0);
  }
  return p;
}

MlpParams unflatten(const std::vector<int>& layer_sizes, std::span<const double> flat) {
  validate_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    std::size_t nw = std::size_t(layer_sizes[l]) * std::size_t(layer_sizes[l + 1]);
    std::size_t nb = std::size_t(layer_sizes[l + 1]);
    if (pos + nw + nb > flat.size()) throw ModelError("unflatten: vector too short");
    p.weights.emplace_back(flat.begin() + pos, flat.begin() + pos + nw);
    pos += nw;
    p.biases.emplace_back(flat.begin() + pos, flat.begin() + pos + nb);
    pos += nb;
  }
  if (pos != flat.size()) throw ModelError("unflatten: vector length mismatch");
  return p;
}

namespace {

std::atomic<bool> g_domain_warned{false};

void warn_outside_domain(double x, double t) {
  if ((x >= 0.0 && x <= 1.0 && t >= 0.0 && t <= 1.0) || g_domain_warned.exchange(true)) return;
  std::fprintf(stderr,
               "warning: network evaluated outside scaled domain [0,1]^2 (x=%g, t=%g)\n", x, t);
}

}  // namespace

ad::Var mlp_forward(ad::Tape& tape, std::span<const ad::Var> theta,
                    const std::vector<int>& layer_sizes, ad::Var x, ad::Var t) {
  validate_layer_sizes(layer_sizes);
  int needed = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    needed += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  if (int(theta.size()) != needed) throw ModelError("mlp_forward: theta length mismatch");
  warn_outside_domain(x.value(), t.value());

  std::vector<ad::Var> act = {x, t};
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int fan_in = layer_sizes[l];
    int fan_out = layer_sizes[l + 1];
    std::vector<ad::Var> next;
    next.reserve(std::size_t(fan_out));
    const ad::Var* w = theta.data() + pos;
    const ad::Var* b = theta.data() + pos + std::size_t(fan_in) * std::size_t(fan_out);
    for (int o = 0; o < fan_out; ++o) {
      ad::Var acc = b[o];
      for (int i = 0; i < fan_in; ++i) acc = acc + w[std::size_t(o) * fan_in + i] * act[std::size_t(i)];
      next.push_back(l + 2 < layer_sizes.size() ? ad::tanh(acc) : acc);
    }
    act = std::move(next);
    pos += std::size_t(fan_in) * std::size_t(fan_out) + std::size_t(fan_out);
  }
  return act[0];
}

ad::Var mlp_forward(ad::Tape& tape, const MlpParams& params, ad::Var x, ad::Var t) {
  std::vector<double> flat = params.flatten();
  std::vector<ad::Var> theta;
  theta.reserve(flat.size());
  for (double v : flat) theta.push_back(tape.constant(v));
  return mlp_forward(tape, theta, params.layer_sizes, x, t);
}

double mlp_eval_flat(std::span<const double> theta, const std::vector<int>& layer_sizes,
                     double x, double t, std::vector<double>& scratch) {
  int width = 0;
  for (int s : layer_sizes) width = std::max(width, s);
  scratch.resize(std::size_t(width) * 2);
  double* cur = scratch.data();
  double* nxt = scratch.data() + width;
  cur[0] = x;
  cur[1] = t;
  std::size_t pos = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int fan_in = layer_sizes[l];
    int fan_out = layer_sizes[l + 1];
    const double* w = theta.data() + pos;
    const double* b = theta.data() + pos + std::size_t(fan_in) * std::size_t(fan_out);
    bool last = l + 2 >= layer_sizes.size();
    for (int o = 0; o < fan_out; ++o) {
      double acc = b[o];
      const double* row = w + std::size_t(o) * fan_in;
      for (int i = 0; i < fan_in; ++i) acc = acc + row[i] * cur[i];
      nxt[o] = last ? acc : std::tanh(acc);
    }
    std::swap(cur, nxt);
    pos += std::size_t(fan_in) * std::size_t(fan_out) + std::size_t(fan_out);
  }
  return cur[0];
}

double mlp_eval(const MlpParams& params, double x, double t) {
  std::vector<double> flat = params.flatten();
  std::vector<double> scratch;
  return mlp_eval_flat(flat, params.layer_sizes, x, t, scratch);
}

}  // namespace thermopinn
