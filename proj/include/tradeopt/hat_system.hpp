#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tradeopt/economy.hpp"

namespace tradeopt {

// One application of the exact-hat equilibrium system, templated so the same
// code runs on plain doubles and on tape-recorded AD scalars.

template <class T>
struct HatStateT {
  std::vector<T> w;  // N
  std::vector<T> L;  // N x J
  std::vector<T> P;  // N x J
  std::vector<T> X;  // N x J
};

template <class T>
struct WedgeT {
  std::vector<T> tariff;        // N x N x J, counterfactual t'
  std::vector<T> export_wedge;  // N x N x J, counterfactual e'
};

template <class T>
struct HatOutputsT {
  HatStateT<T> next;
  std::vector<T> new_share;   // N x N x J, pi' (zero routes stay zero)
  std::vector<T> income_hat;  // N
  std::vector<T> pagg_hat;    // N
  std::vector<T> welfare_hat; // N
};

namespace detail {
inline double value_of(double x) { return x; }
template <class T>
double value_of(const T& x) { return x.value(); }

template <class T>
T floored(const T& x, double lo) {
  // Guard against 0^psi transients; inactive at interior solutions.
  if (value_of(x) < lo) return x * 0.0 + lo;
  return x;
}
}  // namespace detail

template <class T>
HatOutputsT<T> apply_hat_system(const Calibration& cal, const Baseline& base,
                                const HatStateT<T>& st, const WedgeT<T>& wg) {
  using std::pow;
  using detail::value_of;
  const int N = cal.N, J = cal.J;

  HatOutputsT<T> out;

  // Unit costs.
  std::vector<T> cost;
  cost.reserve(N * J);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      T pmix = pow(st.P[cal.nj(i, 0)], cal.gamma[cal.gidx(i, 0, j)]);
      for (int s = 1; s < J; ++s) pmix = pmix * pow(st.P[cal.nj(i, s)], cal.gamma[cal.gidx(i, s, j)]);
      double b = cal.beta[cal.nj(i, j)];
      cost.push_back(pow(detail::floored(st.L[cal.nj(i, j)], 1e-8), -cal.psi[j]) *
                     pow(st.w[i], b) * pow(pmix, 1.0 - b));
    }

  // Price indices and new trade shares; zero-flow routes carry no weight.
  std::vector<T> price_new;
  price_new.reserve(N * J);
  out.new_share.assign(static_cast<std::size_t>(N) * N * J, T{});
  {
    std::vector<T> phi(N);
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        bool any = false;
        T acc{};
        for (int i = 0; i < N; ++i) {
          int r = cal.route(i, n, j);
          double pi0 = base.share[r];
          if (pi0 <= 0.0) continue;
          double te0 = (1.0 + cal.baseline_tariff[r]) * (1.0 + cal.baseline_export_wedge[r]);
          if (value_of(wg.export_wedge[r]) <= -1.0)
            throw std::domain_error("export wedge reaches -1 on route (" + std::to_string(i) + "," +
                                    std::to_string(n) + "," + std::to_string(j) + ")");
          T comp = ((1.0 + wg.tariff[r]) * (1.0 + wg.export_wedge[r])) / te0;
          phi[i] = pi0 * pow(cost[cal.nj(i, j)] * comp, -cal.theta[j]);
          acc = any ? acc + phi[i] : phi[i];
          any = true;
        }
        if (!any) {
          // Sector with zero expenditure everywhere; keep the price hat at 1.
          price_new.push_back(st.P[cal.nj(n, j)] * 0.0 + 1.0);
          continue;
        }
        if (!std::isfinite(value_of(acc)) || value_of(acc) <= 0.0)
          throw std::domain_error("non-finite price aggregate at (" + std::to_string(n) + "," +
                                  std::to_string(j) + ")");
        price_new.push_back(pow(acc, -1.0 / cal.theta[j]));
        for (int i = 0; i < N; ++i) {
          int r = cal.route(i, n, j);
          if (base.share[r] > 0.0) out.new_share[r] = phi[i] / acc;
        }
      }
  }

  // Counterfactual flows X'_in = pi' * Xhat_n * X_n (destination-valued).
  std::vector<T> flow_new(static_cast<std::size_t>(N) * N * J, T{});
  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        int r = cal.route(i, n, j);
        if (base.share[r] > 0.0)
          flow_new[r] = out.new_share[r] * st.X[cal.nj(n, j)] * base.expenditure[cal.nj(n, j)];
      }

  // Producer revenue net of both wedges, reused by the labor and expenditure blocks.
  std::vector<T> net_flow(static_cast<std::size_t>(N) * N * J, T{});
  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        int r = cal.route(i, n, j);
        if (base.share[r] > 0.0)
          net_flow[r] = flow_new[r] / ((1.0 + wg.tariff[r]) * (1.0 + wg.export_wedge[r]));
      }

  // Sectoral wage bills, wages, labor reallocation. The wage hat is pinned by
  // labor adding-up; the world numeraire rescales it afterwards.
  std::vector<T> wage_raw;
  wage_raw.reserve(N);
  std::vector<T> bill(static_cast<std::size_t>(N) * J, T{});
  for (int i = 0; i < N; ++i) {
    bool any = false;
    T tot{};
    for (int j = 0; j < J; ++j) {
      bool row = false;
      T v{};
      for (int n = 0; n < N; ++n) {
        int r = cal.route(i, n, j);
        if (base.share[r] <= 0.0) continue;
        v = row ? v + net_flow[r] : net_flow[r];
        row = true;
      }
      if (!row) continue;
      bill[cal.nj(i, j)] = cal.beta[cal.nj(i, j)] * v;
      tot = any ? tot + bill[cal.nj(i, j)] : bill[cal.nj(i, j)];
      any = true;
    }
    if (!any) throw std::domain_error("country " + std::to_string(i) + " has no revenue");
    wage_raw.push_back(tot / base.labor_income[i]);
  }

  T world{};
  for (int i = 0; i < N; ++i) {
    T c = wage_raw[i] * base.labor_income[i];
    world = (i == 0) ? c : world + c;
  }
  T scale = base.world_labor_income / world;

  out.next.w.reserve(N);
  for (int i = 0; i < N; ++i) out.next.w.push_back(wage_raw[i] * scale);

  out.next.L.reserve(N * J);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double wb = base.wage_bill[cal.nj(i, j)];
      if (wb > 0.0)
        out.next.L.push_back(bill[cal.nj(i, j)] / (wage_raw[i] * wb));
      else
        out.next.L.push_back(st.L[cal.nj(i, j)] * 0.0 + 1.0);
    }

  out.next.P = std::move(price_new);

  // Total income: labor income plus wedge revenues on counterfactual flows.
  // The producer wedge is levied on the at-factory value (before the importer's
  // tariff), and the tariff on the wedge-inclusive c.i.f. value, so the origin
  // collects e' * net and the destination t'/(1+t') * X'.
  out.income_hat.reserve(N);
  for (int i = 0; i < N; ++i) {
    T y = out.next.w[i] * base.labor_income[i];
    for (int j = 0; j < J; ++j) {
      for (int n = 0; n < N; ++n) {
        int r = cal.route(i, n, j);
        if (base.share[r] > 0.0) y = y + wg.export_wedge[r] * net_flow[r];
      }
      for (int k = 0; k < N; ++k) {
        int r = cal.route(k, i, j);
        if (base.share[r] > 0.0)
          y = y + (wg.tariff[r] / (1.0 + wg.tariff[r])) * flow_new[r];
      }
    }
    if (!(value_of(y) > 0.0) || !std::isfinite(value_of(y)))
      throw std::domain_error("non-positive income for country " + std::to_string(i));
    out.income_hat.push_back(y / base.income[i]);
  }

  // Sectoral expenditure.
  out.next.X.reserve(N * J);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      T x = cal.alpha[cal.nj(i, j)] * (out.income_hat[i] * base.income[i]);
      for (int s = 0; s < J; ++s) {
        double w = (1.0 - cal.beta[cal.nj(i, s)]) * cal.gamma[cal.gidx(i, j, s)];
        if (w == 0.0) continue;
        for (int n = 0; n < N; ++n) {
          int r = cal.route(i, n, s);
          if (base.share[r] > 0.0) x = x + w * net_flow[r];
        }
      }
      double x0 = base.expenditure[cal.nj(i, j)];
      if (x0 > 0.0)
        out.next.X.push_back(x / x0);
      else
        out.next.X.push_back(st.X[cal.nj(i, j)] * 0.0 + 1.0);
    }

  // Aggregate price indices and welfare.
  out.pagg_hat.reserve(N);
  out.welfare_hat.reserve(N);
  for (int n = 0; n < N; ++n) {
    T p = pow(out.next.P[cal.nj(n, 0)], cal.alpha[cal.nj(n, 0)]);
    for (int j = 1; j < J; ++j) p = p * pow(out.next.P[cal.nj(n, j)], cal.alpha[cal.nj(n, j)]);
    out.pagg_hat.push_back(p);
    out.welfare_hat.push_back(out.income_hat[n] / p);
  }
  return out;
}

}  // namespace tradeopt
