#pragma once

#include <vector>

#include "tradeopt/equilibrium.hpp"
#include "tradeopt/instruments.hpp"

namespace tradeopt {

struct GradientVector {
  enum class Method { Adjoint, FiniteDifference };
  std::vector<double> values;  // per active instrument, in mask order
  double norm = 0.0;
  Method method = Method::Adjoint;
};

// Objective: sum over countries of weight_n * What_n. A unilateral objective
// is the indicator weight of one player; the planner uses income weights.
std::vector<double> unilateral_weights(int n_countries, int player);

// Total gradient d(objective)/d(active instruments) through the equilibrium:
// one tape recording of the hat system at the fixed point, one adjoint solve
// of (I - dG/dX)' lambda = dW/dX, then vector-Jacobian products.
GradientVector policy_gradient(const Calibration& cal, const Baseline& base,
                               const InstrumentList& instruments,
                               const std::vector<double>& values,
                               const std::vector<int>& active,
                               const std::vector<double>& country_weights,
                               const HatEquilibrium& eq);

// Central-difference oracle; each probe re-solves the equilibrium.
GradientVector finite_difference_gradient(const Calibration& cal, const Baseline& base,
                                          const InstrumentList& instruments,
                                          const std::vector<double>& values,
                                          const std::vector<int>& active,
                                          const std::vector<double>& country_weights,
                                          double step, const SolveOptions& solve_opts);

// Linear solves performed by policy_gradient since process start (diagnostic).
std::size_t adjoint_solve_count();

}  // namespace tradeopt
