#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tradeopt/economy.hpp"

namespace tradeopt {

LevelSolution solve_levels(const Calibration& shares, const LevelParams& lp,
                           const PolicyWedges& wedges, double tol, int max_iter) {
  const int N = lp.N, J = lp.J;
  const auto& theta = shares.theta;
  const auto& psi = shares.psi;

  LevelSolution s;
  s.wage.assign(N, 1.0);
  s.employment.assign(N * J, 0.0);
  s.price.assign(N * J, 1.0);
  s.expenditure.assign(N * J, 0.0);
  double world_labor = std::accumulate(lp.labor.begin(), lp.labor.end(), 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      s.employment[i * J + j] = lp.labor[i] / J;
      s.expenditure[i * J + j] = shares.alpha[shares.nj(i, j)] * lp.labor[i];
    }

  std::vector<double> cost(N * J), phi(N * N * J), share(N * N * J), bill(N * J), income(N);
  const double damp = 0.4;

  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < J; ++j) {
        double lab = std::max(s.employment[i * J + j], 1e-12);
        double pmix = 0.0;
        for (int q = 0; q < J; ++q)
          pmix += shares.gamma[shares.gidx(i, q, j)] * std::log(s.price[i * J + q]);
        double b = shares.beta[shares.nj(i, j)];
        cost[i * J + j] =
            std::exp(-psi[j] * std::log(lab) + b * std::log(s.wage[i]) + (1.0 - b) * pmix);
      }

    std::vector<double> price_new(N * J);
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
          int r = shares.route(i, n, j);
          double tau = lp.trade_cost[r];
          if (!std::isfinite(tau)) {
            phi[r] = 0.0;
            continue;
          }
          double k = cost[i * J + j] * tau * (1.0 + wedges.tariff[r]) * (1.0 + wedges.export_wedge[r]);
          phi[r] = lp.productivity[shares.nj(i, j)] * std::pow(k, -theta[j]);
          acc += phi[r];
        }
        if (acc <= 0.0) throw std::runtime_error("level solver: no supplier for a sector");
        price_new[n * J + j] = std::pow(acc, -1.0 / theta[j]);
        for (int i = 0; i < N; ++i) share[shares.route(i, n, j)] = phi[shares.route(i, n, j)] / acc;
      }

    for (int i = 0; i < N; ++i)
      for (int j = 0; j < J; ++j) {
        double rev = 0.0;
        for (int n = 0; n < N; ++n) {
          int r = shares.route(i, n, j);
          rev += share[r] * s.expenditure[n * J + j] /
                 ((1.0 + wedges.tariff[r]) * (1.0 + wedges.export_wedge[r]));
        }
        bill[i * J + j] = shares.beta[shares.nj(i, j)] * rev;
      }

    std::vector<double> wage_new(N), emp_new(N * J);
    double world_income = 0.0;
    for (int i = 0; i < N; ++i) {
      double tot = 0.0;
      for (int j = 0; j < J; ++j) tot += bill[i * J + j];
      wage_new[i] = tot / lp.labor[i];
      world_income += tot;
    }
    double scale = world_labor / world_income;  // numeraire: world labor income
    for (int i = 0; i < N; ++i) {
      wage_new[i] *= scale;
      for (int j = 0; j < J; ++j) emp_new[i * J + j] = bill[i * J + j] * scale / wage_new[i];
    }

    for (int i = 0; i < N; ++i) {
      double y = wage_new[i] * lp.labor[i];
      for (int j = 0; j < J; ++j) {
        for (int n = 0; n < N; ++n) {
          int r = shares.route(i, n, j);
          double t = wedges.tariff[r], e = wedges.export_wedge[r];
          y += e / ((1.0 + t) * (1.0 + e)) * share[r] * s.expenditure[n * J + j] * scale;
        }
        for (int k = 0; k < N; ++k) {
          int r = shares.route(k, i, j);
          double t = wedges.tariff[r];
          y += t / (1.0 + t) * share[r] * s.expenditure[i * J + j] * scale;
        }
      }
      income[i] = y;
    }

    std::vector<double> exp_new(N * J);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < J; ++j) {
        double x = shares.alpha[shares.nj(i, j)] * income[i];
        for (int q = 0; q < J; ++q) {
          double net = 0.0;
          for (int n = 0; n < N; ++n) {
            int r = shares.route(i, n, q);
            net += share[r] * s.expenditure[n * J + q] * scale /
                   ((1.0 + wedges.tariff[r]) * (1.0 + wedges.export_wedge[r]));
          }
          x += (1.0 - shares.beta[shares.nj(i, q)]) * shares.gamma[shares.gidx(i, j, q)] * net;
        }
        exp_new[i * J + j] = x;
      }

    double res = 0.0;
    for (int i = 0; i < N; ++i) res = std::max(res, std::abs(wage_new[i] - s.wage[i]));
    for (int k = 0; k < N * J; ++k) {
      res = std::max(res, std::abs(emp_new[k] - s.employment[k]));
      res = std::max(res, std::abs(price_new[k] - s.price[k]));
      res = std::max(res, std::abs(exp_new[k] - s.expenditure[k]));
    }
    for (int i = 0; i < N; ++i) s.wage[i] += damp * (wage_new[i] - s.wage[i]);
    for (int k = 0; k < N * J; ++k) {
      s.employment[k] += damp * (emp_new[k] - s.employment[k]);
      s.price[k] = price_new[k];
      s.expenditure[k] = exp_new[k];
    }
    s.iterations = it + 1;
    s.residual = res;
    if (res < tol) break;
  }
  if (s.residual >= tol) throw std::runtime_error("level solver did not converge");

  s.flow.assign(N * N * J, 0.0);
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < J; ++j)
      for (int i = 0; i < N; ++i) {
        int r = shares.route(i, n, j);
        s.flow[r] = share[r] * s.expenditure[n * J + j];
      }
  return s;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa draw; keeps the stream layout-independent of libstdc++.
  double u = (rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

std::vector<double> simplex_draw(std::mt19937_64& rng, int n, double floor_weight) {
  std::vector<double> w(n);
  double tot = 0.0;
  for (double& x : w) {
    x = floor_weight - std::log(1.0 - uniform(rng, 0.0, 1.0));
    tot += x;
  }
  for (double& x : w) x /= tot;
  return w;
}

}  // namespace

SyntheticEconomy generate_synthetic_detail(std::uint64_t seed, int n_countries, int n_sectors,
                                           const SyntheticOptions& opts) {
  if (n_countries < 2 || n_sectors < 1) throw std::invalid_argument("need N >= 2, J >= 1");
  if (opts.psi_range.first < 0.0 || opts.psi_range.second < opts.psi_range.first ||
      opts.theta_range.first <= 0.0 || opts.theta_range.second < opts.theta_range.first ||
      opts.trade_openness <= 0.0 || opts.io_intensity < 0.0 || opts.io_intensity >= 1.0 ||
      opts.nontradables < 0 || opts.nontradables >= n_sectors || opts.max_baseline_tariff < 0.0)
    throw std::invalid_argument("infeasible synthetic-economy options");

  const int N = n_countries, J = n_sectors;
  std::mt19937_64 rng(seed);

  Calibration c;
  c.N = N;
  c.J = J;
  c.tradable.assign(J, 1);
  for (int j = J - opts.nontradables; j < J; ++j) c.tradable[j] = 0;
  c.alpha.resize(N * J);
  c.beta.resize(N * J);
  c.gamma.assign(static_cast<std::size_t>(N) * J * J, 0.0);
  c.theta.resize(J);
  c.psi.resize(J);
  c.baseline_tariff.assign(static_cast<std::size_t>(N) * N * J, 0.0);
  c.baseline_export_wedge.assign(static_cast<std::size_t>(N) * N * J, 0.0);
  for (int i = 0; i < N; ++i) c.country_labels.push_back("C" + std::to_string(i));
  for (int j = 0; j < J; ++j) c.sector_labels.push_back("S" + std::to_string(j));

  const auto& a1 = table_a1_elasticities();
  for (int j = 0; j < J; ++j) {
    if (!c.tradable[j]) {
      c.theta[j] = 10.0;
      c.psi[j] = 0.0;
    } else if (opts.use_table_a1) {
      c.theta[j] = a1.theta[j % 22];
      c.psi[j] = a1.psi[j % 22];
      c.sector_labels[j] = a1.labels[j % 22];
    } else {
      c.theta[j] = uniform(rng, opts.theta_range.first, opts.theta_range.second);
      c.psi[j] = uniform(rng, opts.psi_range.first, opts.psi_range.second);
    }
  }

  LevelParams lp;
  lp.N = N;
  lp.J = J;
  lp.productivity.resize(N * J);
  lp.trade_cost.assign(static_cast<std::size_t>(N) * N * J, 1.0);
  lp.labor.resize(N);

  // Shares and level parameters; with the symmetric option country 0's draws
  // are replicated so the resulting flows are exchangeable across countries.
  for (int i = 0; i < N; ++i) {
    if (opts.symmetric && i > 0) {
      for (int j = 0; j < J; ++j) {
        c.alpha[c.nj(i, j)] = c.alpha[c.nj(0, j)];
        c.beta[c.nj(i, j)] = c.beta[c.nj(0, j)];
        lp.productivity[c.nj(i, j)] = lp.productivity[c.nj(0, j)];
        for (int s = 0; s < J; ++s) c.gamma[c.gidx(i, s, j)] = c.gamma[c.gidx(0, s, j)];
      }
      lp.labor[i] = lp.labor[0];
      continue;
    }
    auto a = simplex_draw(rng, J, 0.5);
    for (int j = 0; j < J; ++j) c.alpha[c.nj(i, j)] = a[j];
    for (int j = 0; j < J; ++j) {
      double io = std::min(0.95, std::max(0.02, opts.io_intensity * uniform(rng, 0.5, 1.5)));
      c.beta[c.nj(i, j)] = 1.0 - io;
      auto g = simplex_draw(rng, J, 0.5);
      for (int s = 0; s < J; ++s) c.gamma[c.gidx(i, s, j)] = g[s];
      lp.productivity[c.nj(i, j)] = uniform(rng, 0.5, 2.0);
    }
    lp.labor[i] = opts.symmetric ? 1.0 : uniform(rng, 0.5, 2.0);
  }

  double base_cost = 1.0 + 1.0 / opts.trade_openness;
  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        int r = c.route(i, n, j);
        if (i == n) continue;
        if (!c.tradable[j]) {
          lp.trade_cost[r] = std::numeric_limits<double>::infinity();
          continue;
        }
        lp.trade_cost[r] = opts.symmetric ? base_cost : base_cost * uniform(rng, 0.9, 1.4);
        if (opts.max_baseline_tariff > 0.0)
          c.baseline_tariff[r] =
              opts.symmetric ? opts.max_baseline_tariff / 2.0 : uniform(rng, 0.0, opts.max_baseline_tariff);
      }

  // The flows come from a forward level solve, so the baseline accounting
  // identities hold by construction.
  SyntheticEconomy econ;
  econ.levels = lp;
  PolicyWedges base{c.baseline_tariff, c.baseline_export_wedge};
  econ.baseline = solve_levels(c, lp, base);
  c.trade_flow = econ.baseline.flow;
  econ.cal = std::move(c);
  validate(econ.cal);
  return econ;
}

Calibration generate_synthetic(std::uint64_t seed, int n_countries, int n_sectors,
                               const SyntheticOptions& opts) {
  return generate_synthetic_detail(seed, n_countries, n_sectors, opts).cal;
}

}  // namespace tradeopt
