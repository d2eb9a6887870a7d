#pragma once

#include <stdexcept>
#include <vector>

#include "tradeopt/economy.hpp"
#include "tradeopt/hat_system.hpp"

namespace tradeopt {

struct EquilibriumError : std::runtime_error {
  EquilibriumError(const std::string& what, double residual_)
      : std::runtime_error(what), residual(residual_) {}
  double residual = 0.0;
};

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HatEquilibrium {
  std::vector<double> hat_w;      // N
  std::vector<double> hat_L;      // N x J
  std::vector<double> hat_P;      // N x J
  std::vector<double> hat_X;      // N x J
  std::vector<double> hat_pi;     // N x N x J (zero-flow routes stay 0)
  std::vector<double> hat_Y;      // N
  std::vector<double> hat_P_agg;  // N
  std::vector<double> hat_W;      // N
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 5000;
  double damping_wage = 0.5;   // applied to the (w, L) block
  double damping_price = 1.0;  // applied to the (P, X) block
  const HatEquilibrium* warm_start = nullptr;
};

using HatState = HatStateT<double>;
using HatOutputs = HatOutputsT<double>;

// One application of the system at the given core state (damping not applied).
HatOutputs hat_map(const HatState& state, const PolicyWedges& wedges, const Calibration& cal,
                   const Baseline& base);

HatEquilibrium solve_fixed_point(const PolicyWedges& wedges, const Calibration& cal,
                                 const Baseline& base, const SolveOptions& opts = {});

// Quadratic refinement near a fixed point; throws SingularSystemError if
// I - dG/dX is numerically singular (fall back to damped contraction).
HatEquilibrium newton_kantorovich_refine(const HatEquilibrium& state, const PolicyWedges& wedges,
                                         const Calibration& cal, const Baseline& base,
                                         double tol = 1e-13, int max_steps = 10);

double welfare_change(const HatEquilibrium& eq, int country);

// Dense LU kernel behind the Newton-Kantorovich step and the adjoint solve;
// throws SingularSystemError when the matrix is not invertible.
std::vector<double> solve_dense(const std::vector<double>& matrix_row_major, int dim,
                                const std::vector<double>& rhs);

// Fixed packing order (w | L | P | X), row-major within blocks.
inline int state_dim(const Calibration& cal) { return cal.N + 3 * cal.N * cal.J; }
std::vector<double> pack_state(const HatState& st);
HatState unpack_state(const Calibration& cal, const std::vector<double>& x);

}  // namespace tradeopt
