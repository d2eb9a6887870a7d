#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tradeopt/equilibrium.hpp"

using namespace tradeopt;

namespace {

// Independent straight-line transcription of the eight hat equations, written
// directly from the model's algebra with no shared code beyond the data
// layout. Assumes every route has positive baseline flow (true for the fully
// tradable synthetic economies it is used on). Numeraire: world labor income.
struct OracleOut {
  std::vector<double> w, L, P, X, pi, Y, Pagg, W;
};

OracleOut oracle_apply(const Calibration& c, const Baseline& b, const std::vector<double>& hw,
                       const std::vector<double>& hL, const std::vector<double>& hP,
                       const std::vector<double>& hX, const PolicyWedges& wg) {
  const int N = c.N, J = c.J;
  auto nj = [&](int i, int j) { return i * J + j; };
  auto rt = [&](int i, int n, int j) { return (i * N + n) * J + j; };

  // (1) unit cost hats
  std::vector<double> ch(N * J);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double pmix = 1.0;
      for (int s = 0; s < J; ++s) pmix *= std::pow(hP[nj(i, s)], c.gamma[(i * J + s) * J + j]);
      ch[nj(i, j)] = std::pow(hL[nj(i, j)], -c.psi[j]) * std::pow(hw[i], c.beta[nj(i, j)]) *
                     std::pow(pmix, 1.0 - c.beta[nj(i, j)]);
    }

  // (2)-(3) trade share and price index hats
  OracleOut o;
  o.pi.assign(N * N * J, 0.0);
  o.P.assign(N * J, 0.0);
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < J; ++j) {
      double denom = 0.0;
      for (int i = 0; i < N; ++i) {
        int r = rt(i, n, j);
        double khat = ((1.0 + wg.tariff[r]) * (1.0 + wg.export_wedge[r])) /
                      ((1.0 + c.baseline_tariff[r]) * (1.0 + c.baseline_export_wedge[r]));
        denom += b.share[r] * std::pow(ch[nj(i, j)] * khat, -c.theta[j]);
      }
      o.P[nj(n, j)] = std::pow(denom, -1.0 / c.theta[j]);
      for (int i = 0; i < N; ++i) {
        int r = rt(i, n, j);
        double khat = ((1.0 + wg.tariff[r]) * (1.0 + wg.export_wedge[r])) /
                      ((1.0 + c.baseline_tariff[r]) * (1.0 + c.baseline_export_wedge[r]));
        o.pi[r] = b.share[r] * std::pow(ch[nj(i, j)] * khat, -c.theta[j]) / denom;
      }
    }

  // counterfactual flows, gross and net of the counterfactual wedges
  std::vector<double> Xp(N * N * J), net(N * N * J);
  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        int r = rt(i, n, j);
        Xp[r] = o.pi[r] * hX[nj(n, j)] * b.expenditure[nj(n, j)];
        net[r] = Xp[r] / ((1.0 + wg.tariff[r]) * (1.0 + wg.export_wedge[r]));
      }

  // (4)-(5) wages from sectoral bills, employment from labor adding-up,
  // then the world-labor-income numeraire applied to the wage block.
  std::vector<double> bill(N * J), wraw(N);
  for (int i = 0; i < N; ++i) {
    double tot = 0.0;
    for (int j = 0; j < J; ++j) {
      double rev = 0.0;
      for (int n = 0; n < N; ++n) rev += net[rt(i, n, j)];
      bill[nj(i, j)] = c.beta[nj(i, j)] * rev;
      tot += bill[nj(i, j)];
    }
    wraw[i] = tot / b.labor_income[i];
  }
  double world = 0.0;
  for (int i = 0; i < N; ++i) world += wraw[i] * b.labor_income[i];
  double lambda = b.world_labor_income / world;
  o.w.assign(N, 0.0);
  o.L.assign(N * J, 0.0);
  for (int i = 0; i < N; ++i) {
    o.w[i] = wraw[i] * lambda;
    for (int j = 0; j < J; ++j) o.L[nj(i, j)] = bill[nj(i, j)] / (wraw[i] * b.wage_bill[nj(i, j)]);
  }

  // (6) income: labor income plus wedge revenue on counterfactual flows
  o.Y.assign(N, 0.0);
  for (int i = 0; i < N; ++i) {
    double y = o.w[i] * b.labor_income[i];
    for (int j = 0; j < J; ++j)
      for (int n = 0; n < N; ++n) {
        int out = rt(i, n, j);
        y += wg.export_wedge[out] * net[out];
        int in = rt(n, i, j);
        y += (wg.tariff[in] / (1.0 + wg.tariff[in])) * Xp[in];
      }
    o.Y[i] = y / b.income[i];
  }

  // (7) expenditure: final demand plus intermediate demand
  o.X.assign(N * J, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double x = c.alpha[nj(i, j)] * o.Y[i] * b.income[i];
      for (int s = 0; s < J; ++s) {
        double netrev = 0.0;
        for (int n = 0; n < N; ++n) netrev += net[rt(i, n, s)];
        x += (1.0 - c.beta[nj(i, s)]) * c.gamma[(i * J + j) * J + s] * netrev;
      }
      o.X[nj(i, j)] = x / b.expenditure[nj(i, j)];
    }

  // (8) aggregate prices and welfare
  o.Pagg.assign(N, 0.0);
  o.W.assign(N, 0.0);
  for (int n = 0; n < N; ++n) {
    double p = 1.0;
    for (int j = 0; j < J; ++j) p *= std::pow(o.P[nj(n, j)], c.alpha[nj(n, j)]);
    o.Pagg[n] = p;
    o.W[n] = o.Y[n] / p;
  }
  return o;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(b[k])));
  return m;
}

}  // namespace

TEST_CASE("baseline wedges give the all-ones fixed point") {
  Calibration cal = generate_synthetic(11, 3, 3);
  Baseline base = derive_baseline(cal);
  SolveOptions opts;
  opts.tol = 1e-12;
  HatEquilibrium eq = solve_fixed_point(baseline_wedges(cal), cal, base, opts);
  CHECK(eq.converged);
  CHECK(eq.iterations == 1);
  CHECK(eq.residual < 1e-12);
  for (double v : eq.hat_w) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : eq.hat_L) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : eq.hat_P) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : eq.hat_X) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (int n = 0; n < cal.N; ++n) {
    CHECK(eq.hat_W[n] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(welfare_change(eq, n) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("one hat-map application matches the straight-line transcription") {
  SyntheticOptions so;
  so.max_baseline_tariff = 0.15;
  Calibration cal = generate_synthetic(23, 3, 3, so);
  Baseline base = derive_baseline(cal);

  std::mt19937_64 rng(99);
  auto draw = [&](double lo, double hi) {
    return lo + ((rng() >> 11) * 0x1.0p-53) * (hi - lo);
  };

  HatState st;
  for (int i = 0; i < cal.N; ++i) st.w.push_back(draw(0.8, 1.2));
  for (int k = 0; k < cal.N * cal.J; ++k) {
    st.L.push_back(draw(0.7, 1.3));
    st.P.push_back(draw(0.7, 1.3));
    st.X.push_back(draw(0.7, 1.3));
  }
  PolicyWedges wg = baseline_wedges(cal);
  for (int i = 0; i < cal.N; ++i)
    for (int n = 0; n < cal.N; ++n)
      for (int j = 0; j < cal.J; ++j) {
        int r = cal.route(i, n, j);
        if (i != n) wg.tariff[r] = draw(0.0, 0.3);
        wg.export_wedge[r] = draw(-0.2, 0.1);
      }

  HatOutputs got = hat_map(st, wg, cal, base);
  OracleOut want = oracle_apply(cal, base, st.w, st.L, st.P, st.X, wg);

  CHECK(max_rel_err(got.next.w, want.w) < 1e-12);
  CHECK(max_rel_err(got.next.L, want.L) < 1e-12);
  CHECK(max_rel_err(got.next.P, want.P) < 1e-12);
  CHECK(max_rel_err(got.next.X, want.X) < 1e-12);
  CHECK(max_rel_err(got.income_hat, want.Y) < 1e-12);
  CHECK(max_rel_err(got.pagg_hat, want.Pagg) < 1e-12);
  CHECK(max_rel_err(got.welfare_hat, want.W) < 1e-12);
  for (std::size_t r = 0; r < want.pi.size(); ++r)
    CHECK(got.new_share[r] == doctest::Approx(want.pi[r]).epsilon(1e-12));
}

TEST_CASE("hat solution reproduces ratios of level equilibria") {
  SyntheticEconomy econ = generate_synthetic_detail(77, 3, 3);
  Baseline base = derive_baseline(econ.cal);

  PolicyWedges wg = baseline_wedges(econ.cal);
  for (int n = 0; n < 3; ++n)
    for (int j = 0; j < 3; ++j)
      if (n != 0) wg.tariff[econ.cal.route(n, 0, j)] = 0.12;  // country 0 taxes all imports

  SolveOptions opts;
  opts.tol = 1e-11;
  HatEquilibrium eq = solve_fixed_point(wg, econ.cal, base, opts);
  eq = newton_kantorovich_refine(eq, wg, econ.cal, base);

  LevelSolution lvl = solve_levels(econ.cal, econ.levels, wg, 1e-13);
  const LevelSolution& b0 = econ.baseline;
  for (int i = 0; i < 3; ++i)
    CHECK(eq.hat_w[i] == doctest::Approx(lvl.wage[i] / b0.wage[i]).epsilon(1e-8));
  for (int k = 0; k < 9; ++k) {
    CHECK(eq.hat_L[k] == doctest::Approx(lvl.employment[k] / b0.employment[k]).epsilon(1e-8));
    CHECK(eq.hat_P[k] == doctest::Approx(lvl.price[k] / b0.price[k]).epsilon(1e-8));
    CHECK(eq.hat_X[k] == doctest::Approx(lvl.expenditure[k] / b0.expenditure[k]).epsilon(1e-8));
  }

  // income in levels: labor income plus tariff revenue on the new flows
  for (int i = 0; i < 3; ++i) {
    double y0 = b0.wage[i] * econ.levels.labor[i];
    double y1 = lvl.wage[i] * econ.levels.labor[i];
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) {
        int r = econ.cal.route(k, i, j);
        double t = wg.tariff[r];
        y1 += t / (1.0 + t) * lvl.flow[r];
      }
    CHECK(eq.hat_Y[i] == doctest::Approx(y1 / y0).epsilon(1e-8));
  }
}

TEST_CASE("equilibrium invariants hold away from the baseline") {
  Calibration cal = generate_synthetic(5, 3, 2);
  Baseline base = derive_baseline(cal);
  PolicyWedges wg = baseline_wedges(cal);
  for (int n = 1; n < 3; ++n)
    for (int j = 0; j < 2; ++j) wg.tariff[cal.route(n, 0, j)] = 0.25;
  for (int n = 0; n < 3; ++n)
    for (int j = 0; j < 2; ++j) wg.export_wedge[cal.route(1, n, j)] = -0.1;  // subsidy by 1

  SolveOptions opts;
  opts.tol = 1e-12;
  HatEquilibrium eq = solve_fixed_point(wg, cal, base, opts);

  // shares renormalize: sum_i pi0 * pi-hat = 1 at every (destination, sector)
  for (int n = 0; n < 3; ++n)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        int r = cal.route(i, n, j);
        s += base.share[r] * eq.hat_pi[r];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }

  // labor adding-up: sum_j L-hat * (w L)_ij = (w L)_i
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 2; ++j) s += eq.hat_L[cal.nj(i, j)] * base.wage_bill[cal.nj(i, j)];
    CHECK(s == doctest::Approx(base.labor_income[i]).epsilon(1e-10));
  }

  // numeraire: world labor income unchanged
  double world = 0.0;
  for (int i = 0; i < 3; ++i) world += eq.hat_w[i] * base.labor_income[i];
  CHECK(world == doctest::Approx(base.world_labor_income).epsilon(1e-10));

  // welfare is income over the aggregate price index
  for (int n = 0; n < 3; ++n)
    CHECK(eq.hat_W[n] == doctest::Approx(eq.hat_Y[n] / eq.hat_P_agg[n]).epsilon(1e-12));
}

TEST_CASE("domestic wedges are encoding-invariant between tariff and producer form") {
  Calibration cal = generate_synthetic(31, 2, 2);
  Baseline base = derive_baseline(cal);
  SolveOptions opts;
  opts.tol = 1e-12;

  // a 15% domestic consumption tax in country 0, booked two ways
  PolicyWedges a = baseline_wedges(cal);
  PolicyWedges b = baseline_wedges(cal);
  for (int j = 0; j < 2; ++j) {
    a.tariff[cal.route(0, 0, j)] = 0.15;
    b.export_wedge[cal.route(0, 0, j)] = 0.15;
  }
  HatEquilibrium ea = solve_fixed_point(a, cal, base, opts);
  HatEquilibrium eb = solve_fixed_point(b, cal, base, opts);
  ea = newton_kantorovich_refine(ea, a, cal, base);
  eb = newton_kantorovich_refine(eb, b, cal, base);

  for (int i = 0; i < 2; ++i) {
    CHECK(ea.hat_w[i] == doctest::Approx(eb.hat_w[i]).epsilon(1e-10));
    CHECK(ea.hat_Y[i] == doctest::Approx(eb.hat_Y[i]).epsilon(1e-10));
    CHECK(ea.hat_W[i] == doctest::Approx(eb.hat_W[i]).epsilon(1e-10));
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(ea.hat_L[k] == doctest::Approx(eb.hat_L[k]).epsilon(1e-10));
    CHECK(ea.hat_P[k] == doctest::Approx(eb.hat_P[k]).epsilon(1e-10));
    CHECK(ea.hat_X[k] == doctest::Approx(eb.hat_X[k]).epsilon(1e-10));
  }
}

TEST_CASE("symmetric countries stay symmetric under symmetric tariffs") {
  SyntheticOptions so;
  so.symmetric = true;
  Calibration cal = generate_synthetic(13, 2, 2, so);
  Baseline base = derive_baseline(cal);
  PolicyWedges wg = baseline_wedges(cal);
  for (int j = 0; j < 2; ++j) {
    wg.tariff[cal.route(1, 0, j)] = 0.2;
    wg.tariff[cal.route(0, 1, j)] = 0.2;
  }
  SolveOptions opts;
  opts.tol = 1e-12;
  HatEquilibrium eq = solve_fixed_point(wg, cal, base, opts);
  CHECK(eq.hat_w[0] == doctest::Approx(eq.hat_w[1]).epsilon(1e-9));
  CHECK(eq.hat_W[0] == doctest::Approx(eq.hat_W[1]).epsilon(1e-9));
  for (int j = 0; j < 2; ++j)
    CHECK(eq.hat_L[cal.nj(0, j)] == doctest::Approx(eq.hat_L[cal.nj(1, j)]).epsilon(1e-9));
}

TEST_CASE("Newton-Kantorovich refinement is quadratic near the fixed point") {
  Calibration cal = generate_synthetic(41, 2, 1);
  Baseline base = derive_baseline(cal);
  PolicyWedges wg = baseline_wedges(cal);
  wg.tariff[cal.route(1, 0, 0)] = 0.3;

  SolveOptions coarse;
  coarse.tol = 1e-4;
  HatEquilibrium rough = solve_fixed_point(wg, cal, base, coarse);
  CHECK(rough.residual < 1e-4);

  HatEquilibrium fine = newton_kantorovich_refine(rough, wg, cal, base, 1e-13, 3);
  CHECK(fine.residual < 1e-12);

  // already-refined input is a no-op up to roundoff
  HatEquilibrium again = newton_kantorovich_refine(fine, wg, cal, base, 1e-13, 3);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(again.hat_w[i] - fine.hat_w[i]) < 1e-12);
  for (std::size_t k = 0; k < fine.hat_X.size(); ++k)
    CHECK(std::abs(again.hat_X[k] - fine.hat_X[k]) < 1e-12);
}

TEST_CASE("warm starts reuse a nearby solution") {
  Calibration cal = generate_synthetic(19, 3, 2);
  Baseline base = derive_baseline(cal);
  PolicyWedges wg = baseline_wedges(cal);
  for (int j = 0; j < 2; ++j) wg.tariff[cal.route(1, 0, j)] = 0.2;

  SolveOptions opts;
  opts.tol = 1e-10;
  HatEquilibrium cold = solve_fixed_point(wg, cal, base, opts);

  wg.tariff[cal.route(1, 0, 0)] = 0.201;
  SolveOptions warm = opts;
  warm.warm_start = &cold;
  HatEquilibrium nearby = solve_fixed_point(wg, cal, base, warm);
  CHECK(nearby.converged);
  CHECK(nearby.iterations < cold.iterations);
}

TEST_CASE("solver error paths") {
  Calibration cal = generate_synthetic(3, 2, 1);
  Baseline base = derive_baseline(cal);
  PolicyWedges wg = baseline_wedges(cal);
  wg.tariff[cal.route(1, 0, 0)] = 0.5;

  SolveOptions opts;
  opts.max_iter = 2;
  CHECK_THROWS_AS(solve_fixed_point(wg, cal, base, opts), EquilibriumError);
  try {
    solve_fixed_point(wg, cal, base, opts);
  } catch (const EquilibriumError& e) {
    CHECK(e.residual > 0.0);
  }

  SolveOptions bad;
  bad.tol = -1.0;
  CHECK_THROWS_AS(solve_fixed_point(wg, cal, base, bad), std::invalid_argument);

  HatEquilibrium unset;
  CHECK_THROWS_AS(welfare_change(unset, 0), std::logic_error);
}

TEST_CASE("dense solve kernel flags singular systems") {
  std::vector<double> singular = {1.0, 2.0, 2.0, 4.0};
  CHECK_THROWS_AS(solve_dense(singular, 2, {1.0, 0.0}), SingularSystemError);

  std::vector<double> m = {2.0, 1.0, 1.0, 3.0};
  std::vector<double> x = solve_dense(m, 2, {5.0, 10.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-12));
}
