#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tradeopt/optimizer.hpp"

namespace tradeopt {

enum class Scenario {
  TradeWar,          // import tariffs only
  Dual,              // tariffs + sector subsidies
  SubsidyOnly,       // sector subsidies only
  UniformSubsidy,    // one scalar subsidy per player on the manufacturing set
  CooperativeTariff, // planner over all tariffs
  CooperativeDual,   // planner over tariffs + subsidies
};

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);
bool is_cooperative(Scenario s);

struct ScenarioMask {
  Scenario kind = Scenario::TradeWar;
  std::vector<int> players;          // countries that optimize
  std::vector<int> manuf_sectors;    // UniformSubsidy target set; default = tradables
  double tariff_cap = 10.0;
  double subsidy_cap = 0.99;         // s_max, keeps 1 - s away from 0
};

// Instruments for each player in mask order: tariffs on all tradable import
// routes, then subsidies, depending on the scenario kind.
InstrumentList build_instruments(const Calibration& cal, const ScenarioMask& mask);

// Instrument values at the baseline policies (tariffs at the calibrated
// baseline, subsidies at zero).
std::vector<double> baseline_values(const Calibration& cal, const InstrumentList& instruments);

struct BestResponseOptions {
  AdamHyper adam;
  int iters = 50;
  double grad_tol = 0.0;  // early stop on stationarity when > 0
  SolveOptions solve;
};

struct BestResponseResult {
  std::vector<double> values;      // full profile with the player's block updated
  double welfare = 0.0;            // player's What at the returned policy
  double stationarity = 0.0;       // projected-gradient sup-norm at the solution
  int iterations = 0;
  bool objective_decreased = false;  // diagnostic warning, not fatal
};

BestResponseResult best_response(int player, const std::vector<double>& profile,
                                 const Calibration& cal, const Baseline& base,
                                 const InstrumentList& instruments,
                                 const BestResponseOptions& opts,
                                 const HatEquilibrium* warm = nullptr);

struct GameOptions {
  double eta = 1.0;
  int epochs = 20;
  double outer_tol = 1e-5;
  std::uint64_t seed = 0;
  BestResponseOptions br;
};

struct GameResult {
  Scenario scenario;
  InstrumentList instruments;
  std::vector<double> values;
  PolicyWedges wedges;
  std::vector<double> welfare_hat;            // per country
  std::vector<double> round_change_norms;
  std::vector<std::vector<int>> sequence_log; // playing order per epoch
  std::uint64_t seed = 0;
  int epochs = 0;
  bool converged = false;
};

GameResult nash_solve(const Calibration& cal, const ScenarioMask& mask, const GameOptions& opts);

// Planner over the union of instruments, maximizing income-weighted welfare.
GameResult cooperative_solve(const Calibration& cal, const ScenarioMask& mask,
                             const GameOptions& opts);

std::vector<double> cooperative_weights(const Baseline& base);

struct PerturbationDraw {
  std::vector<double> subsidies;
  double welfare = 0.0;
  bool ok = false;
};

struct PerturbationResult {
  double baseline_welfare = 0.0;  // player's What at the unperturbed profile
  std::vector<PerturbationDraw> draws;
};

// Redraws each of the player's subsidies uniformly from [0.1 s*, 1.9 s*],
// holding everyone else at the given profile.
PerturbationResult subsidy_perturbation_experiment(const Calibration& cal,
                                                   const InstrumentList& instruments,
                                                   const std::vector<double>& profile, int player,
                                                   int n_draws, std::uint64_t seed,
                                                   const SolveOptions& solve = {});

}  // namespace tradeopt
