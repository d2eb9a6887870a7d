#include "tradeopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace tradeopt {

GradientVector clip_gradient(const GradientVector& g, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("max_norm must be positive");
  if (g.norm <= max_norm) return g;
  GradientVector out = g;
  double scale = max_norm / g.norm;
  for (double& v : out.values) v *= scale;
  out.norm = max_norm;
  return out;
}

void adam_step(AdamState& state, const GradientVector& g, std::vector<double>& params) {
  const std::size_t n = params.size();
  if (g.values.size() != n || state.m.size() != n)
    throw std::invalid_argument("adam_step: dimension mismatch");
  const AdamHyper& h = state.hyper;
  state.t += 1;
  double lr = h.lr;
  if (h.lr_decay != 1.0)
    lr = std::max(h.lr_min, h.lr * std::pow(h.lr_decay, static_cast<double>(state.t - 1)));
  double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < n; ++k) {
    double gk = g.values[k];
    state.m[k] = h.beta1 * state.m[k] + (1.0 - h.beta1) * gk;
    state.v[k] = h.beta2 * state.v[k] + (1.0 - h.beta2) * gk * gk;
    double mhat = state.m[k] / bc1;
    double vhat = state.v[k] / bc2;
    params[k] += lr * mhat / (std::sqrt(vhat) + h.epsilon);
  }
}

void project(std::vector<double>& params, const std::vector<double>& lower,
             const std::vector<double>& upper) {
  if (lower.size() != params.size() || upper.size() != params.size())
    throw std::invalid_argument("project: dimension mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (lower[k] > upper[k]) throw std::invalid_argument("project: lower > upper");
    if (params[k] < lower[k]) params[k] = lower[k];
    if (params[k] > upper[k]) params[k] = upper[k];
  }
}

}  // namespace tradeopt
