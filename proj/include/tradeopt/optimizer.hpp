#pragma once

#include <vector>

#include "tradeopt/sensitivity.hpp"

namespace tradeopt {

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_grad_norm = 10.0;
  bool clip_enabled = true;
  double lr_decay = 1.0;  // multiplicative per-step decay; 1.0 keeps lr constant
  double lr_min = 0.0;
};

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long t = 0;
  AdamHyper hyper;

  explicit AdamState(std::size_t dim, const AdamHyper& h = {})
      : m(dim, 0.0), v(dim, 0.0), hyper(h) {}
};

GradientVector clip_gradient(const GradientVector& g, double max_norm);

// Ascent step: params move along +gradient (the objective is maximized).
void adam_step(AdamState& state, const GradientVector& g, std::vector<double>& params);

void project(std::vector<double>& params, const std::vector<double>& lower,
             const std::vector<double>& upper);

}  // namespace tradeopt
