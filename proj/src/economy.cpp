#include "tradeopt/economy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tradeopt {

using nlohmann::json;

Baseline derive_baseline(const Calibration& cal) {
  const int N = cal.N, J = cal.J;
  Baseline b;
  b.expenditure.assign(N * J, 0.0);
  b.share.assign(N * N * J, 0.0);
  b.wage_bill.assign(N * J, 0.0);
  b.labor_income.assign(N, 0.0);
  b.income.assign(N, 0.0);

  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) b.expenditure[cal.nj(n, j)] += cal.trade_flow[cal.route(i, n, j)];

  for (int i = 0; i < N; ++i)
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < J; ++j) {
        double xnj = b.expenditure[cal.nj(n, j)];
        if (xnj > 0.0) b.share[cal.route(i, n, j)] = cal.trade_flow[cal.route(i, n, j)] / xnj;
      }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double rev = 0.0;
      for (int n = 0; n < N; ++n) {
        int r = cal.route(i, n, j);
        rev += cal.trade_flow[r] /
               ((1.0 + cal.baseline_tariff[r]) * (1.0 + cal.baseline_export_wedge[r]));
      }
      b.wage_bill[cal.nj(i, j)] = cal.beta[cal.nj(i, j)] * rev;
    }

  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < J; ++j) b.labor_income[i] += b.wage_bill[cal.nj(i, j)];
    b.world_labor_income += b.labor_income[i];
  }

  for (int i = 0; i < N; ++i) {
    double y = b.labor_income[i];
    for (int j = 0; j < J; ++j) {
      for (int n = 0; n < N; ++n) {
        int r = cal.route(i, n, j);
        double t = cal.baseline_tariff[r], e = cal.baseline_export_wedge[r];
        y += e / ((1.0 + t) * (1.0 + e)) * cal.trade_flow[r];
      }
      for (int k = 0; k < N; ++k) {
        int r = cal.route(k, i, j);
        double t = cal.baseline_tariff[r];
        y += t / (1.0 + t) * cal.trade_flow[r];
      }
    }
    b.income[i] = y;
  }
  return b;
}

namespace {

[[noreturn]] void fail(const std::string& what, double residual = 0.0) {
  std::ostringstream os;
  os << "calibration invalid: " << what;
  if (residual != 0.0) os << " (residual " << residual << ")";
  throw ValidationError(os.str());
}

}  // namespace

void validate(const Calibration& cal) {
  const int N = cal.N, J = cal.J;
  if (N < 1 || J < 1) fail("dimensions must be positive");
  auto expect_size = [&](const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) fail(std::string(name) + " has wrong length");
  };
  if (cal.tradable.size() != static_cast<std::size_t>(J)) fail("tradable_mask has wrong length");
  expect_size(cal.alpha, N * J, "alpha");
  expect_size(cal.beta, N * J, "beta");
  expect_size(cal.gamma, static_cast<std::size_t>(N) * J * J, "gamma");
  expect_size(cal.trade_flow, static_cast<std::size_t>(N) * N * J, "trade_flow");
  expect_size(cal.theta, J, "theta");
  expect_size(cal.psi, J, "psi");
  expect_size(cal.baseline_tariff, static_cast<std::size_t>(N) * N * J, "baseline_tariff");
  expect_size(cal.baseline_export_wedge, static_cast<std::size_t>(N) * N * J, "baseline_export_wedge");

  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = 0; j < J; ++j) {
      double a = cal.alpha[cal.nj(i, j)];
      if (a < 0.0) fail("alpha negative at country " + std::to_string(i));
      s += a;
    }
    if (std::abs(s - 1.0) > 1e-10) fail("alpha row sum != 1 for country " + std::to_string(i), s - 1.0);
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double bv = cal.beta[cal.nj(i, j)];
      if (bv <= 0.0 || bv > 1.0) fail("beta out of (0,1] at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      double gs = 0.0;
      for (int s = 0; s < J; ++s) {
        double g = cal.gamma[cal.gidx(i, s, j)];
        if (g < 0.0) fail("gamma negative");
        gs += g;
      }
      if (std::abs(gs - 1.0) > 1e-10)
        fail("gamma input-share sum != 1 at (" + std::to_string(i) + "," + std::to_string(j) + ")", gs - 1.0);
    }
  for (double x : cal.trade_flow)
    if (x < 0.0) fail("trade_flow negative");
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j)
      if (cal.baseline_tariff[cal.route(i, i, j)] != 0.0)
        fail("domestic tariff t_ii nonzero at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  for (int j = 0; j < J; ++j) {
    if (cal.theta[j] <= 0.0) fail("theta must be positive at sector " + std::to_string(j));
    if (cal.psi[j] < 0.0) fail("psi must be nonnegative at sector " + std::to_string(j));
    if (!cal.tradable[j] && (cal.theta[j] != 10.0 || cal.psi[j] != 0.0))
      fail("non-tradable sector " + std::to_string(j) + " must have theta=10, psi=0");
  }
  for (const double& e : cal.baseline_export_wedge)
    if (e <= -1.0) fail("baseline export wedge <= -1");

  // Baseline accounting: sectoral expenditure identity at hats = 1.
  Baseline b = derive_baseline(cal);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < J; ++j) {
      double rhs = cal.alpha[cal.nj(i, j)] * b.income[i];
      for (int s = 0; s < J; ++s) {
        double net = 0.0;
        for (int n = 0; n < N; ++n) {
          int r = cal.route(i, n, s);
          net += cal.trade_flow[r] /
                 ((1.0 + cal.baseline_tariff[r]) * (1.0 + cal.baseline_export_wedge[r]));
        }
        rhs += (1.0 - cal.beta[cal.nj(i, s)]) * cal.gamma[cal.gidx(i, j, s)] * net;
      }
      double lhs = b.expenditure[cal.nj(i, j)];
      double scale = std::max(1.0, std::abs(lhs));
      if (std::abs(lhs - rhs) / scale > 1e-6)
        fail("sectoral expenditure identity fails at (" + std::to_string(i) + "," + std::to_string(j) + ")",
             (lhs - rhs) / scale);
    }
}

PolicyWedges baseline_wedges(const Calibration& cal) {
  return PolicyWedges{cal.baseline_tariff, cal.baseline_export_wedge};
}

namespace {

json to_json(const Calibration& c) {
  json out;
  out["dimensions"] = {{"N", c.N}, {"J", c.J}};
  out["labels"] = {{"countries", c.country_labels}, {"sectors", c.sector_labels}};
  out["tradable_mask"] = std::vector<int>(c.tradable.begin(), c.tradable.end());
  out["alpha"] = c.alpha;
  out["beta"] = c.beta;
  out["gamma"] = c.gamma;
  out["trade_flow"] = c.trade_flow;
  out["theta"] = c.theta;
  out["psi"] = c.psi;
  out["baseline_tariff"] = c.baseline_tariff;
  out["baseline_export_wedge"] = c.baseline_export_wedge;
  return out;
}

}  // namespace

Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("calibration parse error: ") + e.what());
  }
  Calibration c;
  try {
    c.N = doc.at("dimensions").at("N").get<int>();
    c.J = doc.at("dimensions").at("J").get<int>();
    c.country_labels = doc.at("labels").at("countries").get<std::vector<std::string>>();
    c.sector_labels = doc.at("labels").at("sectors").get<std::vector<std::string>>();
    auto mask = doc.at("tradable_mask").get<std::vector<int>>();
    c.tradable.assign(mask.begin(), mask.end());
    c.alpha = doc.at("alpha").get<std::vector<double>>();
    c.beta = doc.at("beta").get<std::vector<double>>();
    c.gamma = doc.at("gamma").get<std::vector<double>>();
    c.trade_flow = doc.at("trade_flow").get<std::vector<double>>();
    c.theta = doc.at("theta").get<std::vector<double>>();
    c.psi = doc.at("psi").get<std::vector<double>>();
    c.baseline_tariff = doc.at("baseline_tariff").get<std::vector<double>>();
    c.baseline_export_wedge = doc.at("baseline_export_wedge").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("calibration schema error: ") + e.what());
  }
  validate(c);
  return c;
}

void save_calibration(const Calibration& cal, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write calibration file: " + path);
  out << to_json(cal).dump(1) << "\n";
}

const SectorElasticities& table_a1_elasticities() {
  static const SectorElasticities table = [] {
    SectorElasticities t;
    struct Row { const char* name; double theta, psi; };
    const Row rows[] = {
        {"Agriculture", 6.23, 0.14},
        {"Fishing", 6.23, 0.14},
        {"Mining, energy", 5.28, 0.17},
        {"Mining, non-energy", 5.28, 0.17},
        {"Mining support", 5.28, 0.17},
        {"Food", 2.30, 0.35},
        {"Textiles", 3.36, 0.22},
        {"Wood", 3.90, 0.23},
        {"Paper", 2.65, 0.32},
        {"Petroleum", 0.64, 0.35},
        {"Chemical", 3.97, 0.23},
        {"Pharmaceutical", 3.97, 0.23},
        {"Rubber", 5.16, 0.14},
        {"Non-metallic", 5.28, 0.17},
        {"Basic metals", 3.00, 0.21},
        {"Fabricated metal", 3.00, 0.21},
        {"Computer", 1.24, 0.55},
        {"Electrical equipment", 1.24, 0.55},
        {"Machinery nec", 7.75, 0.12},
        {"Motor vehicles", 2.81, 0.13},
        {"Other transport equipment", 2.81, 0.13},
        {"Manufacturing nec", 6.17, 0.15},
    };
    for (const auto& r : rows) {
      t.labels.push_back(r.name);
      t.theta.push_back(r.theta);
      t.psi.push_back(r.psi);
    }
    return t;
  }();
  return table;
}

}  // namespace tradeopt
