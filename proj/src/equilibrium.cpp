#include "tradeopt/equilibrium.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "tradeopt/autodiff.hpp"

namespace tradeopt {

std::vector<double> pack_state(const HatState& st) {
  std::vector<double> x;
  x.reserve(st.w.size() + st.L.size() + st.P.size() + st.X.size());
  x.insert(x.end(), st.w.begin(), st.w.end());
  x.insert(x.end(), st.L.begin(), st.L.end());
  x.insert(x.end(), st.P.begin(), st.P.end());
  x.insert(x.end(), st.X.begin(), st.X.end());
  return x;
}

HatState unpack_state(const Calibration& cal, const std::vector<double>& x) {
  const int N = cal.N, NJ = cal.N * cal.J;
  HatState st;
  st.w.assign(x.begin(), x.begin() + N);
  st.L.assign(x.begin() + N, x.begin() + N + NJ);
  st.P.assign(x.begin() + N + NJ, x.begin() + N + 2 * NJ);
  st.X.assign(x.begin() + N + 2 * NJ, x.begin() + N + 3 * NJ);
  return st;
}

std::vector<double> solve_dense(const std::vector<double>& matrix_row_major, int dim,
                                const std::vector<double>& rhs) {
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = matrix_row_major[static_cast<std::size_t>(r) * dim + c];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible())
    throw SingularSystemError(
        "I - dG/dX is singular at this state; use damped contraction iterations instead");
  Eigen::VectorXd b(dim);
  for (int k = 0; k < dim; ++k) b(k) = rhs[k];
  Eigen::VectorXd sol = lu.solve(b);
  std::vector<double> result(dim);
  for (int k = 0; k < dim; ++k) result[k] = sol(k);
  return result;
}

HatOutputs hat_map(const HatState& state, const PolicyWedges& wedges, const Calibration& cal,
                   const Baseline& base) {
  WedgeT<double> wg{wedges.tariff, wedges.export_wedge};
  return apply_hat_system<double>(cal, base, state, wg);
}

namespace {

HatState all_ones(const Calibration& cal) {
  HatState st;
  st.w.assign(cal.N, 1.0);
  st.L.assign(cal.N * cal.J, 1.0);
  st.P.assign(cal.N * cal.J, 1.0);
  st.X.assign(cal.N * cal.J, 1.0);
  return st;
}

double sup_diff(const HatState& a, const HatState& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.w.size(); ++k) r = std::max(r, std::abs(a.w[k] - b.w[k]));
  for (std::size_t k = 0; k < a.L.size(); ++k) r = std::max(r, std::abs(a.L[k] - b.L[k]));
  for (std::size_t k = 0; k < a.P.size(); ++k) r = std::max(r, std::abs(a.P[k] - b.P[k]));
  for (std::size_t k = 0; k < a.X.size(); ++k) r = std::max(r, std::abs(a.X[k] - b.X[k]));
  return r;
}

HatEquilibrium finish(const Calibration& cal, const HatState& st, const HatOutputs& out,
                      int iters, double residual) {
  HatEquilibrium eq;
  eq.hat_w = st.w;
  eq.hat_L = st.L;
  eq.hat_P = st.P;
  eq.hat_X = st.X;
  eq.hat_pi.assign(static_cast<std::size_t>(cal.N) * cal.N * cal.J, 0.0);
  eq.hat_Y = out.income_hat;
  eq.hat_P_agg = out.pagg_hat;
  eq.hat_W = out.welfare_hat;
  eq.iterations = iters;
  eq.residual = residual;
  eq.converged = true;
  return eq;
}

void fill_share_hats(const Calibration& cal, const Baseline& base, const HatOutputs& out,
                     HatEquilibrium& eq) {
  for (std::size_t r = 0; r < base.share.size(); ++r)
    if (base.share[r] > 0.0) eq.hat_pi[r] = out.new_share[r] / base.share[r];
}

}  // namespace

HatEquilibrium solve_fixed_point(const PolicyWedges& wedges, const Calibration& cal,
                                 const Baseline& base, const SolveOptions& opts) {
  if (opts.tol <= 0.0 || opts.damping_wage <= 0.0 || opts.damping_wage > 1.0 ||
      opts.damping_price <= 0.0 || opts.damping_price > 1.0)
    throw std::invalid_argument("bad solver options");

  HatState st = all_ones(cal);
  if (opts.warm_start && opts.warm_start->converged) {
    st.w = opts.warm_start->hat_w;
    st.L = opts.warm_start->hat_L;
    st.P = opts.warm_start->hat_P;
    st.X = opts.warm_start->hat_X;
  }

  double prev_res = std::numeric_limits<double>::infinity();
  int growth_streak = 0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    HatOutputs out = hat_map(st, wedges, cal, base);
    double res = sup_diff(st, out.next);
    if (res < opts.tol) {
      HatEquilibrium eq = finish(cal, st, out, it, res);
      fill_share_hats(cal, base, out, eq);
      return eq;
    }
    if (res > prev_res) {
      if (++growth_streak >= 50)
        throw EquilibriumError("fixed-point iteration diverging (residual grew 50 times in a row)", res);
    } else {
      growth_streak = 0;
    }
    prev_res = res;

    double dw = opts.damping_wage, dp = opts.damping_price;
    for (std::size_t k = 0; k < st.w.size(); ++k) st.w[k] += dw * (out.next.w[k] - st.w[k]);
    for (std::size_t k = 0; k < st.L.size(); ++k) st.L[k] += dw * (out.next.L[k] - st.L[k]);
    for (std::size_t k = 0; k < st.P.size(); ++k) st.P[k] += dp * (out.next.P[k] - st.P[k]);
    for (std::size_t k = 0; k < st.X.size(); ++k) st.X[k] += dp * (out.next.X[k] - st.X[k]);
  }
  throw EquilibriumError("fixed point not converged after " + std::to_string(opts.max_iter) +
                             " iterations",
                         prev_res);
}

namespace {

// dG/dX at the packed state, assembled row by row from reverse sweeps.
Eigen::MatrixXd system_jacobian(const Calibration& cal, const Baseline& base,
                                const std::vector<double>& x, const PolicyWedges& wedges) {
  using ad::Tape;
  using ad::Var;
  const int K = state_dim(cal);
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(K);
  for (double v : x) leaves.push_back(ad::make_leaf(tape, v));

  HatStateT<Var> st;
  const int N = cal.N, NJ = cal.N * cal.J;
  st.w.assign(leaves.begin(), leaves.begin() + N);
  st.L.assign(leaves.begin() + N, leaves.begin() + N + NJ);
  st.P.assign(leaves.begin() + N + NJ, leaves.begin() + N + 2 * NJ);
  st.X.assign(leaves.begin() + N + 2 * NJ, leaves.begin() + N + 3 * NJ);

  WedgeT<Var> wg;
  wg.tariff.reserve(wedges.tariff.size());
  wg.export_wedge.reserve(wedges.export_wedge.size());
  for (double v : wedges.tariff) wg.tariff.push_back(ad::make_leaf(tape, v));
  for (double v : wedges.export_wedge) wg.export_wedge.push_back(ad::make_leaf(tape, v));

  auto out = apply_hat_system<Var>(cal, base, st, wg);
  std::vector<Var> outputs;
  outputs.reserve(K);
  for (auto& v : out.next.w) outputs.push_back(v);
  for (auto& v : out.next.L) outputs.push_back(v);
  for (auto& v : out.next.P) outputs.push_back(v);
  for (auto& v : out.next.X) outputs.push_back(v);

  Eigen::MatrixXd jac(K, K);
  std::vector<double> seed(K, 0.0);
  for (int r = 0; r < K; ++r) {
    seed[r] = 1.0;
    auto row = ad::vjp(outputs, seed, leaves);
    seed[r] = 0.0;
    for (int c = 0; c < K; ++c) jac(r, c) = row[c];
  }
  return jac;
}

}  // namespace

HatEquilibrium newton_kantorovich_refine(const HatEquilibrium& state, const PolicyWedges& wedges,
                                         const Calibration& cal, const Baseline& base,
                                         double tol, int max_steps) {
  HatState st{state.hat_w, state.hat_L, state.hat_P, state.hat_X};
  const int K = state_dim(cal);

  HatOutputs out = hat_map(st, wedges, cal, base);
  double res = 0.0;
  for (int step = 0; step < max_steps; ++step) {
    std::vector<double> x = pack_state(st);
    std::vector<double> gx = pack_state(out.next);
    res = 0.0;
    for (int k = 0; k < K; ++k) res = std::max(res, std::abs(x[k] - gx[k]));
    if (res < tol) break;

    Eigen::MatrixXd jac = system_jacobian(cal, base, x, wedges);
    std::vector<double> lhs(static_cast<std::size_t>(K) * K);
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < K; ++c)
        lhs[static_cast<std::size_t>(r) * K + c] = (r == c ? 1.0 : 0.0) - jac(r, c);
    std::vector<double> rhs(K);
    for (int k = 0; k < K; ++k) rhs[k] = x[k] - gx[k];
    std::vector<double> delta = solve_dense(lhs, K, rhs);
    for (int k = 0; k < K; ++k) x[k] -= delta[k];
    st = unpack_state(cal, x);
    out = hat_map(st, wedges, cal, base);
  }

  HatEquilibrium eq;
  {
    std::vector<double> x = pack_state(st);
    std::vector<double> gx = pack_state(out.next);
    res = 0.0;
    for (int k = 0; k < K; ++k) res = std::max(res, std::abs(x[k] - gx[k]));
  }
  eq.hat_w = st.w;
  eq.hat_L = st.L;
  eq.hat_P = st.P;
  eq.hat_X = st.X;
  eq.hat_pi.assign(static_cast<std::size_t>(cal.N) * cal.N * cal.J, 0.0);
  for (std::size_t r = 0; r < base.share.size(); ++r)
    if (base.share[r] > 0.0) eq.hat_pi[r] = out.new_share[r] / base.share[r];
  eq.hat_Y = out.income_hat;
  eq.hat_P_agg = out.pagg_hat;
  eq.hat_W = out.welfare_hat;
  eq.iterations = state.iterations;
  eq.residual = res;
  eq.converged = true;
  return eq;
}

double welfare_change(const HatEquilibrium& eq, int country) {
  if (!eq.converged) throw std::logic_error("welfare_change on a non-converged state");
  return eq.hat_Y[country] / eq.hat_P_agg[country];
}

}  // namespace tradeopt
