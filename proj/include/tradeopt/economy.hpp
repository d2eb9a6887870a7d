#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tradeopt {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Baseline world economy. trade_flow[origin][dest][sector] is valued at the
// destination, inclusive of tariffs and producer wedges. A production subsidy
// s appears as export_wedge = -s on every route of the subsidizing origin.
struct Calibration {
  int N = 0;
  int J = 0;
  std::vector<std::uint8_t> tradable;       // J
  std::vector<double> alpha;                // N x J, consumption shares
  std::vector<double> beta;                 // N x J, value-added shares
  std::vector<double> gamma;                // N x J x J, gamma[i][s][j]: input s into sector j
  std::vector<double> trade_flow;           // N x N x J
  std::vector<double> theta;                // J
  std::vector<double> psi;                  // J
  std::vector<double> baseline_tariff;      // N x N x J
  std::vector<double> baseline_export_wedge;// N x N x J
  std::vector<std::string> country_labels;
  std::vector<std::string> sector_labels;

  int nj(int i, int j) const { return i * J + j; }
  int gidx(int i, int s, int j) const { return (i * J + s) * J + j; }
  int route(int origin, int dest, int j) const { return (origin * N + dest) * J + j; }
};

// Quantities derived from a valid Calibration; flows are the source of truth.
struct Baseline {
  std::vector<double> expenditure;    // N x J, X_n^j = sum_i flow[i][n][j]
  std::vector<double> share;          // N x N x J, pi_in^j
  std::vector<double> wage_bill;      // N x J, w_i L_i^j
  std::vector<double> labor_income;   // N, w_i L_i
  std::vector<double> income;         // N, Y_i
  double world_labor_income = 0.0;
};

Baseline derive_baseline(const Calibration& cal);

// Throws ValidationError naming the violated identity and its residual.
void validate(const Calibration& cal);

Calibration load_calibration(const std::string& path);
void save_calibration(const Calibration& cal, const std::string& path);

// Counterfactual policy levels t' and e', same layout as the baseline wedges.
struct PolicyWedges {
  std::vector<double> tariff;        // N x N x J
  std::vector<double> export_wedge;  // N x N x J
};

PolicyWedges baseline_wedges(const Calibration& cal);

struct SectorElasticities {
  std::vector<std::string> labels;
  std::vector<double> theta;
  std::vector<double> psi;
};

// The 22 tradable-sector (theta, psi) pairs, in ICIO order.
const SectorElasticities& table_a1_elasticities();

struct SyntheticOptions {
  bool symmetric = false;          // identical countries, symmetric trade costs
  double trade_openness = 0.6;     // lower = higher iceberg costs
  double io_intensity = 0.5;       // mean 1 - beta
  std::pair<double, double> psi_range{0.0, 0.25};
  std::pair<double, double> theta_range{2.0, 6.0};
  bool use_table_a1 = false;       // attach Table A.1 pairs to the first 22 sectors
  int nontradables = 0;            // trailing sectors restricted to domestic trade
  double max_baseline_tariff = 0.0;
};

// Level parameterization behind a synthetic baseline, kept for oracle tests.
struct LevelParams {
  int N = 0, J = 0;
  std::vector<double> productivity;  // N x J, Frechet scale T_i^j
  std::vector<double> trade_cost;    // N x N x J, iceberg tau
  std::vector<double> labor;         // N
};

struct LevelSolution {
  std::vector<double> wage;         // N
  std::vector<double> employment;   // N x J
  std::vector<double> price;        // N x J
  std::vector<double> expenditure;  // N x J
  std::vector<double> flow;         // N x N x J, destination-valued
  int iterations = 0;
  double residual = 0.0;
};

// Solves the level equilibrium for given wedges (fixed-point iteration with
// wage damping, numeraire = world labor income).
LevelSolution solve_levels(const Calibration& shares, const LevelParams& lp,
                           const PolicyWedges& wedges, double tol = 1e-12, int max_iter = 20000);

struct SyntheticEconomy {
  Calibration cal;
  LevelParams levels;
  LevelSolution baseline;
};

SyntheticEconomy generate_synthetic_detail(std::uint64_t seed, int n_countries, int n_sectors,
                                           const SyntheticOptions& opts = {});
Calibration generate_synthetic(std::uint64_t seed, int n_countries, int n_sectors,
                               const SyntheticOptions& opts = {});

}  // namespace tradeopt
