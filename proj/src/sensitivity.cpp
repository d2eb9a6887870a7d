#include "tradeopt/sensitivity.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>

#include "tradeopt/autodiff.hpp"

namespace tradeopt {

namespace {
std::atomic<std::size_t> g_adjoint_solves{0};
}

std::size_t adjoint_solve_count() { return g_adjoint_solves.load(); }

std::string Instrument::describe() const {
  switch (kind) {
    case Kind::ImportTariff:
      return "t[" + std::to_string(origin) + "->" + std::to_string(owner) + ",s" +
             std::to_string(sector) + "]";
    case Kind::SectorSubsidy:
      return "s[" + std::to_string(owner) + ",s" + std::to_string(sector) + "]";
    case Kind::UniformSubsidy:
      return "s_uniform[" + std::to_string(owner) + "]";
  }
  return "?";
}

PolicyWedges build_wedges(const Calibration& cal, const InstrumentList& instruments,
                          const std::vector<double>& values) {
  PolicyWedges w = baseline_wedges(cal);
  WedgeT<double> wg{std::move(w.tariff), std::move(w.export_wedge)};
  apply_instruments(cal, instruments, values, wg);
  return PolicyWedges{std::move(wg.tariff), std::move(wg.export_wedge)};
}

std::vector<int> owned_by(const InstrumentList& instruments, int player) {
  std::vector<int> idx;
  for (std::size_t k = 0; k < instruments.size(); ++k)
    if (instruments[k].owner == player) idx.push_back(static_cast<int>(k));
  return idx;
}

std::vector<double> unilateral_weights(int n_countries, int player) {
  std::vector<double> w(n_countries, 0.0);
  w[player] = 1.0;
  return w;
}

GradientVector policy_gradient(const Calibration& cal, const Baseline& base,
                               const InstrumentList& instruments,
                               const std::vector<double>& values,
                               const std::vector<int>& active,
                               const std::vector<double>& country_weights,
                               const HatEquilibrium& eq) {
  using ad::Tape;
  using ad::Var;
  if (!eq.converged) throw std::logic_error("policy_gradient requires a converged equilibrium");

  const int K = state_dim(cal);
  const int N = cal.N, NJ = cal.N * cal.J;

  Tape tape;
  std::vector<Var> state_leaves;
  state_leaves.reserve(K);
  for (double v : eq.hat_w) state_leaves.push_back(ad::make_leaf(tape, v));
  for (double v : eq.hat_L) state_leaves.push_back(ad::make_leaf(tape, v));
  for (double v : eq.hat_P) state_leaves.push_back(ad::make_leaf(tape, v));
  for (double v : eq.hat_X) state_leaves.push_back(ad::make_leaf(tape, v));

  std::vector<Var> instr_leaves;
  instr_leaves.reserve(instruments.size());
  for (double v : values) instr_leaves.push_back(ad::make_leaf(tape, v));

  WedgeT<Var> wg;
  wg.tariff.reserve(cal.baseline_tariff.size());
  wg.export_wedge.reserve(cal.baseline_export_wedge.size());
  for (double v : cal.baseline_tariff) wg.tariff.push_back(ad::make_leaf(tape, v));
  for (double v : cal.baseline_export_wedge) wg.export_wedge.push_back(ad::make_leaf(tape, v));
  apply_instruments(cal, instruments, instr_leaves, wg);

  HatStateT<Var> st;
  st.w.assign(state_leaves.begin(), state_leaves.begin() + N);
  st.L.assign(state_leaves.begin() + N, state_leaves.begin() + N + NJ);
  st.P.assign(state_leaves.begin() + N + NJ, state_leaves.begin() + N + 2 * NJ);
  st.X.assign(state_leaves.begin() + N + 2 * NJ, state_leaves.begin() + N + 3 * NJ);

  auto out = apply_hat_system<Var>(cal, base, st, wg);

  std::vector<Var> outputs;
  outputs.reserve(K);
  for (auto& v : out.next.w) outputs.push_back(v);
  for (auto& v : out.next.L) outputs.push_back(v);
  for (auto& v : out.next.P) outputs.push_back(v);
  for (auto& v : out.next.X) outputs.push_back(v);

  bool first = true;
  Var objective;
  for (int n = 0; n < N; ++n) {
    if (country_weights[n] == 0.0) continue;
    Var term = country_weights[n] * out.welfare_hat[n];
    objective = first ? term : objective + term;
    first = false;
  }
  if (first) throw std::invalid_argument("objective has no nonzero country weight");

  // Leaves the welfare function and the system touch directly.
  std::vector<Var> active_leaves;
  active_leaves.reserve(active.size());
  for (int k : active) active_leaves.push_back(instr_leaves[k]);

  std::vector<Var> grad_inputs = state_leaves;
  grad_inputs.insert(grad_inputs.end(), active_leaves.begin(), active_leaves.end());
  std::vector<double> dW = ad::gradient(objective, grad_inputs);

  Eigen::VectorXd dW_state(K);
  for (int k = 0; k < K; ++k) dW_state(k) = dW[k];

  // Rows of [dG/dX | dG/da] via one reverse sweep per equation.
  Eigen::MatrixXd jac_state(K, K);
  Eigen::MatrixXd jac_instr(K, static_cast<int>(active.size()));
  std::vector<double> seed(K, 0.0);
  for (int r = 0; r < K; ++r) {
    seed[r] = 1.0;
    auto row = ad::vjp(outputs, seed, grad_inputs);
    seed[r] = 0.0;
    for (int c = 0; c < K; ++c) jac_state(r, c) = row[c];
    for (std::size_t c = 0; c < active.size(); ++c)
      jac_instr(r, static_cast<int>(c)) = row[K + c];
  }

  // transposed system (I - dG/dX)' lambda = dW/dX
  std::vector<double> lhs(static_cast<std::size_t>(K) * K);
  for (int r = 0; r < K; ++r)
    for (int c = 0; c < K; ++c)
      lhs[static_cast<std::size_t>(r) * K + c] = (r == c ? 1.0 : 0.0) - jac_state(c, r);
  std::vector<double> rhs(K);
  for (int k = 0; k < K; ++k) rhs[k] = dW_state(k);
  std::vector<double> lam = solve_dense(lhs, K, rhs);
  Eigen::VectorXd lambda(K);
  for (int k = 0; k < K; ++k) lambda(k) = lam[k];
  g_adjoint_solves.fetch_add(1);

  GradientVector g;
  g.method = GradientVector::Method::Adjoint;
  g.values.resize(active.size());
  double norm2 = 0.0;
  for (std::size_t c = 0; c < active.size(); ++c) {
    double direct = dW[K + c];
    double through = jac_instr.col(static_cast<int>(c)).dot(lambda);
    double v = direct + through;
    if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient entry");
    g.values[c] = v;
    norm2 += v * v;
  }
  g.norm = std::sqrt(norm2);
  return g;
}

GradientVector finite_difference_gradient(const Calibration& cal, const Baseline& base,
                                          const InstrumentList& instruments,
                                          const std::vector<double>& values,
                                          const std::vector<int>& active,
                                          const std::vector<double>& country_weights,
                                          double step, const SolveOptions& solve_opts) {
  if (step <= 0.0) throw std::invalid_argument("step must be positive");

  auto objective_at = [&](const std::vector<double>& vals) {
    PolicyWedges w = build_wedges(cal, instruments, vals);
    HatEquilibrium eq = solve_fixed_point(w, cal, base, solve_opts);
    double obj = 0.0;
    for (int n = 0; n < cal.N; ++n) obj += country_weights[n] * eq.hat_W[n];
    return obj;
  };

  GradientVector g;
  g.method = GradientVector::Method::FiniteDifference;
  g.values.resize(active.size());
  double norm2 = 0.0;
  for (std::size_t c = 0; c < active.size(); ++c) {
    std::vector<double> probe = values;
    double up, down;
    try {
      probe[active[c]] = values[active[c]] + step;
      up = objective_at(probe);
      probe[active[c]] = values[active[c]] - step;
      down = objective_at(probe);
    } catch (const EquilibriumError& e) {
      throw EquilibriumError("finite-difference probe failed for instrument " +
                                 instruments[active[c]].describe() + ": " + e.what(),
                             e.residual);
    }
    double v = (up - down) / (2.0 * step);
    g.values[c] = v;
    norm2 += v * v;
  }
  g.norm = std::sqrt(norm2);
  return g;
}

}  // namespace tradeopt
