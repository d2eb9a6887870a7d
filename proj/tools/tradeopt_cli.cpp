// Command-line front end for the tradeopt library.
//
// Exit codes: 0 success, 2 validation/config error, 3 non-convergence or
// failed numerical check, 4 I/O error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tradeopt/game.hpp"

using json = nlohmann::json;
using namespace tradeopt;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: config file values first, command-line flags override.

struct RunConfig {
  std::string calibration;  // path; empty means use the synthetic spec
  std::uint64_t syn_seed = 1;
  int countries = 3;
  int sectors = 3;
  bool symmetric = false;
  int nontradables = 0;
  bool table_a1 = false;
  double max_baseline_tariff = 0.0;
  double trade_openness = 0.6;

  std::string scenario = "trade-war";
  std::vector<int> players;

  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_grad_norm = 10.0;
  bool clip = true;
  double lr_decay = 1.0;
  double lr_min = 0.0;
  double eta = 1.0;
  int epochs = 20;
  int iters = 50;
  double grad_tol = 0.0;
  double tol_inner = 1e-9;
  double tol_outer = 1e-5;
  double damping = 0.5;
  double tariff_cap = 10.0;
  double subsidy_cap = 0.99;

  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output_dir = "out";
  int jobs = 1;
};

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ValidationError("unknown key \"" + it.key() + "\" in " + where);
  }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  reject_unknown(doc,
                 {"calibration", "synthetic", "scenario", "players", "lr", "beta1", "beta2",
                  "epsilon", "max_grad_norm", "clip", "lr_decay", "lr_min", "eta", "epochs",
                  "iters", "grad_tol", "tol_inner", "tol_outer", "damping", "tariff_cap",
                  "subsidy_cap", "seed", "output_dir", "jobs"},
                 "config");
  try {
    if (doc.contains("calibration")) cfg.calibration = doc["calibration"].get<std::string>();
    if (doc.contains("synthetic")) {
      const json& s = doc["synthetic"];
      reject_unknown(s,
                     {"seed", "countries", "sectors", "symmetric", "nontradables", "table_a1",
                      "max_baseline_tariff", "trade_openness"},
                     "config.synthetic");
      if (s.contains("seed")) cfg.syn_seed = s["seed"].get<std::uint64_t>();
      if (s.contains("countries")) cfg.countries = s["countries"].get<int>();
      if (s.contains("sectors")) cfg.sectors = s["sectors"].get<int>();
      if (s.contains("symmetric")) cfg.symmetric = s["symmetric"].get<bool>();
      if (s.contains("nontradables")) cfg.nontradables = s["nontradables"].get<int>();
      if (s.contains("table_a1")) cfg.table_a1 = s["table_a1"].get<bool>();
      if (s.contains("max_baseline_tariff"))
        cfg.max_baseline_tariff = s["max_baseline_tariff"].get<double>();
      if (s.contains("trade_openness")) cfg.trade_openness = s["trade_openness"].get<double>();
    }
    if (doc.contains("scenario")) cfg.scenario = doc["scenario"].get<std::string>();
    if (doc.contains("players")) cfg.players = doc["players"].get<std::vector<int>>();
    if (doc.contains("lr")) cfg.lr = doc["lr"].get<double>();
    if (doc.contains("beta1")) cfg.beta1 = doc["beta1"].get<double>();
    if (doc.contains("beta2")) cfg.beta2 = doc["beta2"].get<double>();
    if (doc.contains("epsilon")) cfg.epsilon = doc["epsilon"].get<double>();
    if (doc.contains("max_grad_norm")) cfg.max_grad_norm = doc["max_grad_norm"].get<double>();
    if (doc.contains("clip")) cfg.clip = doc["clip"].get<bool>();
    if (doc.contains("lr_decay")) cfg.lr_decay = doc["lr_decay"].get<double>();
    if (doc.contains("lr_min")) cfg.lr_min = doc["lr_min"].get<double>();
    if (doc.contains("eta")) cfg.eta = doc["eta"].get<double>();
    if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
    if (doc.contains("iters")) cfg.iters = doc["iters"].get<int>();
    if (doc.contains("grad_tol")) cfg.grad_tol = doc["grad_tol"].get<double>();
    if (doc.contains("tol_inner")) cfg.tol_inner = doc["tol_inner"].get<double>();
    if (doc.contains("tol_outer")) cfg.tol_outer = doc["tol_outer"].get<double>();
    if (doc.contains("damping")) cfg.damping = doc["damping"].get<double>();
    if (doc.contains("tariff_cap")) cfg.tariff_cap = doc["tariff_cap"].get<double>();
    if (doc.contains("subsidy_cap")) cfg.subsidy_cap = doc["subsidy_cap"].get<double>();
    if (doc.contains("seed")) {
      cfg.seed = doc["seed"].get<std::uint64_t>();
      cfg.seed_given = true;
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config schema error: ") + e.what());
  }
}

void check_config(const RunConfig& cfg) {
  if (!cfg.seed_given) throw ValidationError("no seed given: pass --seed or set \"seed\" in the config");
  if (cfg.tol_inner <= 0.0 || cfg.tol_outer <= 0.0)
    throw ValidationError("tolerances must be positive");
  if (cfg.eta <= 0.0 || cfg.eta > 1.0) throw ValidationError("eta must be in (0, 1]");
  if (cfg.epochs < 1 || cfg.iters < 1) throw ValidationError("epochs and iters must be >= 1");
  if (cfg.damping <= 0.0 || cfg.damping > 1.0) throw ValidationError("damping must be in (0, 1]");
  if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
}

Calibration economy_of(const RunConfig& cfg) {
  if (!cfg.calibration.empty()) return load_calibration(cfg.calibration);
  SyntheticOptions so;
  so.symmetric = cfg.symmetric;
  so.nontradables = cfg.nontradables;
  so.use_table_a1 = cfg.table_a1;
  so.max_baseline_tariff = cfg.max_baseline_tariff;
  so.trade_openness = cfg.trade_openness;
  return generate_synthetic(cfg.syn_seed, cfg.countries, cfg.sectors, so);
}

ScenarioMask mask_of(const RunConfig& cfg) {
  ScenarioMask m;
  m.kind = scenario_from_string(cfg.scenario);
  m.players = cfg.players;
  m.tariff_cap = cfg.tariff_cap;
  m.subsidy_cap = cfg.subsidy_cap;
  return m;
}

GameOptions game_options(const RunConfig& cfg) {
  GameOptions go;
  go.eta = cfg.eta;
  go.epochs = cfg.epochs;
  go.outer_tol = cfg.tol_outer;
  go.seed = cfg.seed;
  go.br.iters = cfg.iters;
  go.br.grad_tol = cfg.grad_tol;
  go.br.adam.lr = cfg.lr;
  go.br.adam.beta1 = cfg.beta1;
  go.br.adam.beta2 = cfg.beta2;
  go.br.adam.epsilon = cfg.epsilon;
  go.br.adam.max_grad_norm = cfg.max_grad_norm;
  go.br.adam.clip_enabled = cfg.clip;
  go.br.adam.lr_decay = cfg.lr_decay;
  go.br.adam.lr_min = cfg.lr_min;
  go.br.solve.tol = cfg.tol_inner;
  go.br.solve.damping_wage = cfg.damping;
  return go;
}

// ---------------------------------------------------------------------------
// Output files.

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
  std::ofstream out(std::filesystem::path(dir) / name);
  if (!out) throw IoError("cannot write " + name + " in " + dir);
  return out;
}

void write_policy_csv(std::ofstream out, const std::string& scenario,
                      const InstrumentList& instruments, const std::vector<double>& values) {
  out << "scenario,player,origin,destination,sector,tariff,subsidy\n";
  for (std::size_t k = 0; k < instruments.size(); ++k) {
    const Instrument& a = instruments[k];
    switch (a.kind) {
      case Instrument::Kind::ImportTariff:
        out << scenario << ',' << a.owner << ',' << a.origin << ',' << a.owner << ',' << a.sector
            << ',' << num(values[k]) << ",0\n";
        break;
      case Instrument::Kind::SectorSubsidy:
        out << scenario << ',' << a.owner << ',' << a.owner << ",-1," << a.sector << ",0,"
            << num(values[k]) << "\n";
        break;
      case Instrument::Kind::UniformSubsidy:
        out << scenario << ',' << a.owner << ',' << a.owner << ",-1,-1,0," << num(values[k])
            << "\n";
        break;
    }
  }
}

void write_welfare_csv(std::ofstream out, const std::string& scenario,
                       const std::vector<double>& welfare_hat) {
  out << "scenario,country,welfare_change_pct\n";
  for (std::size_t n = 0; n < welfare_hat.size(); ++n)
    out << scenario << ',' << n << ',' << num(100.0 * (welfare_hat[n] - 1.0)) << "\n";
}

void echo_config(std::ostream& out, const RunConfig& cfg) {
  out << "scenario=" << cfg.scenario << "\n"
      << "seed=" << cfg.seed << "\n"
      << "calibration=" << (cfg.calibration.empty() ? "(synthetic)" : cfg.calibration) << "\n";
  if (cfg.calibration.empty())
    out << "synthetic=seed:" << cfg.syn_seed << " countries:" << cfg.countries
        << " sectors:" << cfg.sectors << " symmetric:" << cfg.symmetric
        << " nontradables:" << cfg.nontradables << " table_a1:" << cfg.table_a1 << "\n";
  out << "players=";
  if (cfg.players.empty()) {
    out << "all";
  } else {
    for (std::size_t k = 0; k < cfg.players.size(); ++k)
      out << (k ? "," : "") << cfg.players[k];
  }
  out << "\n"
      << "lr=" << num(cfg.lr) << " beta1=" << num(cfg.beta1) << " beta2=" << num(cfg.beta2)
      << " epsilon=" << num(cfg.epsilon) << "\n"
      << "max_grad_norm=" << num(cfg.max_grad_norm) << " clip=" << cfg.clip
      << " lr_decay=" << num(cfg.lr_decay) << "\n"
      << "eta=" << num(cfg.eta) << " epochs=" << cfg.epochs << " iters=" << cfg.iters
      << " grad_tol=" << num(cfg.grad_tol) << "\n"
      << "tol_inner=" << num(cfg.tol_inner) << " tol_outer=" << num(cfg.tol_outer)
      << " damping=" << num(cfg.damping) << " jobs=" << cfg.jobs << "\n";
}

// ---------------------------------------------------------------------------
// Wedge files: either full arrays, a sparse route list, or a uniform tariff.

PolicyWedges load_wedges(const Calibration& cal, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open wedge file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("wedge file parse error: ") + e.what());
  }
  reject_unknown(doc, {"tariff", "export_wedge", "routes", "uniform_tariff"}, "wedge file");

  PolicyWedges w = baseline_wedges(cal);
  const std::size_t R = w.tariff.size();
  try {
    if (doc.contains("uniform_tariff")) {
      double t = doc["uniform_tariff"].get<double>();
      for (int i = 0; i < cal.N; ++i)
        for (int n = 0; n < cal.N; ++n)
          for (int j = 0; j < cal.J; ++j)
            if (i != n && cal.tradable[j]) w.tariff[cal.route(i, n, j)] = t;
    }
    if (doc.contains("tariff")) {
      auto t = doc["tariff"].get<std::vector<double>>();
      if (t.size() != R) throw ValidationError("wedge file: tariff array has wrong length");
      w.tariff = std::move(t);
    }
    if (doc.contains("export_wedge")) {
      auto e = doc["export_wedge"].get<std::vector<double>>();
      if (e.size() != R) throw ValidationError("wedge file: export_wedge array has wrong length");
      w.export_wedge = std::move(e);
    }
    if (doc.contains("routes")) {
      for (const json& entry : doc["routes"]) {
        reject_unknown(entry, {"origin", "dest", "sector", "tariff", "export_wedge"},
                       "wedge file route");
        int i = entry.at("origin").get<int>();
        int n = entry.at("dest").get<int>();
        int j = entry.at("sector").get<int>();
        if (i < 0 || i >= cal.N || n < 0 || n >= cal.N || j < 0 || j >= cal.J)
          throw ValidationError("wedge file: route index out of range");
        if (entry.contains("tariff")) w.tariff[cal.route(i, n, j)] = entry["tariff"].get<double>();
        if (entry.contains("export_wedge"))
          w.export_wedge[cal.route(i, n, j)] = entry["export_wedge"].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("wedge file schema error: ") + e.what());
  }
  return w;
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_generate(const RunConfig& cfg, const std::string& out_path) {
  Calibration cal = economy_of(cfg);
  save_calibration(cal, out_path);
  std::cout << "wrote " << out_path << " (" << cal.N << " countries, " << cal.J << " sectors)\n";
  return 0;
}

int cmd_solve_equilibrium(const RunConfig& cfg, const std::string& wedge_path) {
  Calibration cal = economy_of(cfg);
  Baseline base = derive_baseline(cal);
  PolicyWedges w = wedge_path.empty() ? baseline_wedges(cal) : load_wedges(cal, wedge_path);

  SolveOptions opts;
  opts.tol = cfg.tol_inner;
  opts.damping_wage = cfg.damping;
  HatEquilibrium eq = solve_fixed_point(w, cal, base, opts);
  eq = newton_kantorovich_refine(eq, w, cal, base);

  auto hats = open_out(cfg.output_dir, "hats.csv");
  hats << "variable,country,sector,value\n";
  for (int i = 0; i < cal.N; ++i) hats << "w," << i << ",-1," << num(eq.hat_w[i]) << "\n";
  for (int i = 0; i < cal.N; ++i)
    for (int j = 0; j < cal.J; ++j) hats << "L," << i << ',' << j << ',' << num(eq.hat_L[cal.nj(i, j)]) << "\n";
  for (int i = 0; i < cal.N; ++i)
    for (int j = 0; j < cal.J; ++j) hats << "P," << i << ',' << j << ',' << num(eq.hat_P[cal.nj(i, j)]) << "\n";
  for (int i = 0; i < cal.N; ++i)
    for (int j = 0; j < cal.J; ++j) hats << "X," << i << ',' << j << ',' << num(eq.hat_X[cal.nj(i, j)]) << "\n";
  for (int i = 0; i < cal.N; ++i) hats << "Y," << i << ",-1," << num(eq.hat_Y[i]) << "\n";
  for (int i = 0; i < cal.N; ++i) hats << "P_agg," << i << ",-1," << num(eq.hat_P_agg[i]) << "\n";
  for (int i = 0; i < cal.N; ++i) hats << "W," << i << ",-1," << num(eq.hat_W[i]) << "\n";

  write_welfare_csv(open_out(cfg.output_dir, "welfare.csv"), "equilibrium", eq.hat_W);

  auto run = open_out(cfg.output_dir, "run.txt");
  run << "command=solve-equilibrium\n";
  echo_config(run, cfg);
  run << "wedges=" << (wedge_path.empty() ? "(baseline)" : wedge_path) << "\n"
      << "iterations=" << eq.iterations << "\n"
      << "residual=" << num(eq.residual) << "\n"
      << "converged=" << eq.converged << "\n";
  std::cout << "equilibrium solved: residual " << num(eq.residual) << "\n";
  return 0;
}

int cmd_nash(const RunConfig& cfg) {
  Calibration cal = economy_of(cfg);
  GameResult res = nash_solve(cal, mask_of(cfg), game_options(cfg));

  std::string sc = to_string(res.scenario);
  write_policy_csv(open_out(cfg.output_dir, "policy.csv"), sc, res.instruments, res.values);
  write_welfare_csv(open_out(cfg.output_dir, "welfare.csv"), sc, res.welfare_hat);

  auto run = open_out(cfg.output_dir, "run.txt");
  run << "command=nash\n";
  echo_config(run, cfg);
  run << "epochs_run=" << res.epochs << "\n" << "converged=" << res.converged << "\n";
  for (std::size_t e = 0; e < res.sequence_log.size(); ++e) {
    run << "epoch " << e << ": order=";
    for (std::size_t k = 0; k < res.sequence_log[e].size(); ++k)
      run << (k ? "," : "") << res.sequence_log[e][k];
    run << " change=" << num(res.round_change_norms[e]) << "\n";
  }
  std::cout << "nash " << sc << ": " << (res.converged ? "converged" : "NOT converged") << " in "
            << res.epochs << " epochs\n";
  return res.converged ? 0 : 3;
}

int cmd_best_response(const RunConfig& cfg, int player) {
  Calibration cal = economy_of(cfg);
  Baseline base = derive_baseline(cal);
  ScenarioMask mask = mask_of(cfg);
  InstrumentList instruments = build_instruments(cal, mask);
  std::vector<double> profile = baseline_values(cal, instruments);

  GameOptions go = game_options(cfg);
  BestResponseResult br = best_response(player, profile, cal, base, instruments, go.br);

  std::string sc = to_string(mask.kind);
  write_policy_csv(open_out(cfg.output_dir, "policy.csv"), sc, instruments, br.values);
  SolveOptions sopt = go.br.solve;
  HatEquilibrium eq = solve_fixed_point(build_wedges(cal, instruments, br.values), cal, base, sopt);
  write_welfare_csv(open_out(cfg.output_dir, "welfare.csv"), sc, eq.hat_W);

  auto run = open_out(cfg.output_dir, "run.txt");
  run << "command=best-response\nplayer=" << player << "\n";
  echo_config(run, cfg);
  run << "iterations=" << br.iterations << "\n"
      << "stationarity=" << num(br.stationarity) << "\n"
      << "objective_decreased=" << br.objective_decreased << "\n";
  std::cout << "best response for player " << player << ": welfare change "
            << num(100.0 * (br.welfare - 1.0)) << "%\n";
  return 0;
}

int cmd_cooperative(const RunConfig& cfg) {
  Calibration cal = economy_of(cfg);
  GameResult res = cooperative_solve(cal, mask_of(cfg), game_options(cfg));

  std::string sc = to_string(res.scenario);
  write_policy_csv(open_out(cfg.output_dir, "policy.csv"), sc, res.instruments, res.values);
  write_welfare_csv(open_out(cfg.output_dir, "welfare.csv"), sc, res.welfare_hat);

  auto run = open_out(cfg.output_dir, "run.txt");
  run << "command=cooperative\n";
  echo_config(run, cfg);
  run << "iterations=" << res.epochs << "\n"
      << "stationarity=" << num(res.round_change_norms.back()) << "\n";
  std::cout << "cooperative " << sc << " done\n";
  return 0;
}

int cmd_perturb(const RunConfig& cfg, int player, int draws) {
  Calibration cal = economy_of(cfg);
  GameOptions go = game_options(cfg);
  GameResult res = nash_solve(cal, mask_of(cfg), go);

  PerturbationResult pr = subsidy_perturbation_experiment(cal, res.instruments, res.values, player,
                                                          draws, cfg.seed, go.br.solve);

  std::size_t n_sub = pr.draws.empty() ? 0 : pr.draws[0].subsidies.size();
  auto out = open_out(cfg.output_dir, "draws.csv");
  out << "draw,ok,welfare_change_pct";
  for (std::size_t k = 0; k < n_sub; ++k) out << ",s" << k;
  out << "\n";
  out << "baseline,1," << num(100.0 * (pr.baseline_welfare - 1.0));
  for (std::size_t k = 0; k < n_sub; ++k) out << ",";
  out << "\n";
  int exceed = 0;
  for (std::size_t d = 0; d < pr.draws.size(); ++d) {
    const PerturbationDraw& dr = pr.draws[d];
    out << d << ',' << (dr.ok ? 1 : 0) << ','
        << (dr.ok ? num(100.0 * (dr.welfare - 1.0)) : std::string());
    for (double s : dr.subsidies) out << ',' << num(s);
    out << "\n";
    if (dr.ok && dr.welfare > pr.baseline_welfare) ++exceed;
  }

  auto run = open_out(cfg.output_dir, "run.txt");
  run << "command=perturb\nplayer=" << player << "\ndraws=" << draws << "\n";
  echo_config(run, cfg);
  run << "baseline_welfare_pct=" << num(100.0 * (pr.baseline_welfare - 1.0)) << "\n"
      << "draws_above_baseline=" << exceed << "\n";
  std::cout << "perturbation: " << exceed << " of " << draws << " draws above the optimum\n";
  return 0;
}

int cmd_check_gradient(const RunConfig& cfg, int player, const std::string& wedge_path,
                       double threshold, double step) {
  Calibration cal = economy_of(cfg);
  Baseline base = derive_baseline(cal);
  ScenarioMask mask = mask_of(cfg);
  InstrumentList instruments = build_instruments(cal, mask);
  std::vector<double> values = baseline_values(cal, instruments);

  if (!wedge_path.empty()) {
    // read the player's instrument levels off the supplied wedge file
    PolicyWedges w = load_wedges(cal, wedge_path);
    for (std::size_t k = 0; k < instruments.size(); ++k) {
      const Instrument& a = instruments[k];
      if (a.kind == Instrument::Kind::ImportTariff)
        values[k] = w.tariff[cal.route(a.origin, a.owner, a.sector)];
      else if (a.kind == Instrument::Kind::SectorSubsidy)
        values[k] = -w.export_wedge[cal.route(a.owner, a.owner, a.sector)];
      else
        values[k] = -w.export_wedge[cal.route(a.owner, a.owner, a.sectors.front())];
    }
  }

  std::vector<int> active = owned_by(instruments, player);
  if (active.empty()) throw ValidationError("player has no instruments under this scenario");
  std::vector<double> weights = unilateral_weights(cal.N, player);

  SolveOptions opts;
  opts.tol = cfg.tol_inner;
  opts.damping_wage = cfg.damping;
  PolicyWedges w = build_wedges(cal, instruments, values);
  HatEquilibrium eq = solve_fixed_point(w, cal, base, opts);
  eq = newton_kantorovich_refine(eq, w, cal, base);

  GradientVector adj = policy_gradient(cal, base, instruments, values, active, weights, eq);
  // probes need solver error well below the objective deltas of ~|g| * step
  SolveOptions probe = opts;
  probe.tol = std::min(opts.tol, step * step);
  GradientVector fd =
      finite_difference_gradient(cal, base, instruments, values, active, weights, step, probe);

  auto out = open_out(cfg.output_dir, "gradient.csv");
  out << "instrument,adjoint,finite_difference,rel_error\n";
  double max_err = 0.0;
  for (std::size_t c = 0; c < active.size(); ++c) {
    double err = std::abs(adj.values[c] - fd.values[c]) /
                 std::max(1e-12, std::abs(fd.values[c]));
    max_err = std::max(max_err, err);
    out << instruments[active[c]].describe() << ',' << num(adj.values[c]) << ','
        << num(fd.values[c]) << ',' << num(err) << "\n";
  }
  std::cout << "max relative error " << num(max_err) << " over " << active.size()
            << " instruments (threshold " << num(threshold) << ")\n";
  if (max_err > threshold)
    throw CheckFailed("gradient check failed: max relative error " + num(max_err) +
                      " exceeds threshold " + num(threshold));
  return 0;
}

int cmd_grid_oracle(const RunConfig& cfg, int player, int instrument, double lo, double hi,
                    int steps) {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  Calibration cal = economy_of(cfg);
  Baseline base = derive_baseline(cal);
  ScenarioMask mask = mask_of(cfg);
  InstrumentList instruments = build_instruments(cal, mask);
  if (instrument < 0 || instrument >= static_cast<int>(instruments.size()))
    throw ValidationError("instrument index out of range");
  const Instrument& a = instruments[instrument];
  if (a.owner != player) throw ValidationError("instrument is not owned by the given player");

  std::vector<double> values = baseline_values(cal, instruments);
  SolveOptions opts;
  opts.tol = cfg.tol_inner;
  opts.damping_wage = cfg.damping;

  auto out = open_out(cfg.output_dir, "grid.csv");
  out << "value,welfare_change_pct,status\n";
  double best_v = 0.0, best_w = -1.0;
  for (int k = 0; k < steps; ++k) {
    double v = steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1);
    if (v < a.lower || v > a.upper) {
      out << num(v) << ",,rejected: outside [" << num(a.lower) << "," << num(a.upper) << "]\n";
      continue;
    }
    values[instrument] = v;
    try {
      HatEquilibrium eq = solve_fixed_point(build_wedges(cal, instruments, values), cal, base, opts);
      out << num(v) << ',' << num(100.0 * (eq.hat_W[player] - 1.0)) << ",ok\n";
      if (eq.hat_W[player] > best_w) {
        best_w = eq.hat_W[player];
        best_v = v;
      }
    } catch (const EquilibriumError& e) {
      out << num(v) << ",,failed: " << e.what() << "\n";
    }
  }
  std::cout << "grid argmax " << instruments[instrument].describe() << " = " << num(best_v)
            << " (welfare change " << num(100.0 * (best_w - 1.0)) << "%)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal trade and industrial policy solver"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path, wedge_path, gen_out = "calibration.json";
  int player = 0, draws = 1000, instrument = 0, steps = 101;
  double threshold = 1e-3, fd_step = 1e-6, grid_lo = 0.0, grid_hi = 1.0;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--seed", seed_flag, "random seed (required here or in the config)");
    cmd->add_option("--scenario", cfg.scenario,
                    "trade-war | dual | subsidy-only | uniform-subsidy | cooperative-tariff | "
                    "cooperative-dual");
    cmd->add_option("--players", cfg.players, "player subset (default: all countries)");
    cmd->add_option("--calibration", cfg.calibration, "calibration JSON file");
    cmd->add_option("--lr", cfg.lr, "ADAM learning rate");
    cmd->add_option("--epochs", cfg.epochs, "best-response epochs");
    cmd->add_option("--iters", cfg.iters, "ADAM iterations per best response");
    cmd->add_option("--eta", cfg.eta, "best-response blending weight");
    cmd->add_option("--max-grad-norm", cfg.max_grad_norm, "gradient clipping threshold");
    cmd->add_flag("--no-clip", [&](std::int64_t) { cfg.clip = false; }, "disable gradient clipping");
    cmd->add_option("--lr-decay", cfg.lr_decay, "per-step learning-rate decay factor");
    cmd->add_option("--grad-tol", cfg.grad_tol, "stationarity early-stop tolerance");
    cmd->add_option("--tol-inner", cfg.tol_inner, "equilibrium fixed-point tolerance");
    cmd->add_option("--tol-outer", cfg.tol_outer, "best-response convergence tolerance");
    cmd->add_option("--damping", cfg.damping, "fixed-point damping on the wage/labor block");
    cmd->add_option("--output-dir", cfg.output_dir, "directory for result files");
    cmd->add_option("--jobs", cfg.jobs, "max concurrent equilibrium solves");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic calibration file");
  add_common(generate);
  generate->add_option("--countries", cfg.countries, "number of countries");
  generate->add_option("--sectors", cfg.sectors, "number of sectors");
  generate->add_flag("--symmetric", cfg.symmetric, "identical countries");
  generate->add_option("--nontradables", cfg.nontradables, "trailing non-tradable sectors");
  generate->add_flag("--table-a1", cfg.table_a1, "use the embedded sector elasticities");
  generate->add_option("--max-baseline-tariff", cfg.max_baseline_tariff, "baseline tariff cap");
  generate->add_option("--output", gen_out, "output path");

  CLI::App* solve = app.add_subcommand("solve-equilibrium", "solve one counterfactual");
  add_common(solve);
  solve->add_option("--wedges", wedge_path, "wedge JSON file (default: baseline)");

  CLI::App* nash = app.add_subcommand("nash", "best-response dynamics to a Nash profile");
  add_common(nash);

  CLI::App* bestr = app.add_subcommand("best-response", "one player's best response");
  add_common(bestr);
  bestr->add_option("--player", player, "optimizing country")->required();

  CLI::App* coop = app.add_subcommand("cooperative", "income-weighted planner");
  add_common(coop);

  CLI::App* perturb = app.add_subcommand("perturb", "random subsidy perturbations around a Nash profile");
  add_common(perturb);
  perturb->add_option("--player", player, "perturbed country")->required();
  perturb->add_option("--draws", draws, "number of draws");

  CLI::App* checkg = app.add_subcommand("check-gradient", "adjoint vs finite differences");
  add_common(checkg);
  checkg->add_option("--player", player, "objective country")->required();
  checkg->add_option("--wedges", wedge_path, "wedge JSON file giving the evaluation point");
  checkg->add_option("--threshold", threshold, "max relative error accepted");
  checkg->add_option("--step", fd_step, "finite-difference step");

  CLI::App* grid = app.add_subcommand("grid-oracle", "brute-force welfare curve");
  add_common(grid);
  grid->add_option("--player", player, "objective country")->required();
  grid->add_option("--instrument", instrument, "instrument index in scenario order")->required();
  grid->add_option("--min", grid_lo, "grid lower end");
  grid->add_option("--max", grid_hi, "grid upper end");
  grid->add_option("--steps", steps, "number of grid points");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!config_path.empty()) {
      // Start from the config file, then let explicit flags win.
      RunConfig file_cfg;
      load_config_file(file_cfg, config_path);
      auto flagged = [&](const char* name) { return cmd->count(name) > 0; };
      RunConfig merged = file_cfg;
      if (flagged("--scenario")) merged.scenario = cfg.scenario;
      if (flagged("--players")) merged.players = cfg.players;
      if (flagged("--calibration")) merged.calibration = cfg.calibration;
      if (flagged("--lr")) merged.lr = cfg.lr;
      if (flagged("--epochs")) merged.epochs = cfg.epochs;
      if (flagged("--iters")) merged.iters = cfg.iters;
      if (flagged("--eta")) merged.eta = cfg.eta;
      if (flagged("--max-grad-norm")) merged.max_grad_norm = cfg.max_grad_norm;
      if (flagged("--no-clip")) merged.clip = false;
      if (flagged("--lr-decay")) merged.lr_decay = cfg.lr_decay;
      if (flagged("--grad-tol")) merged.grad_tol = cfg.grad_tol;
      if (flagged("--tol-inner")) merged.tol_inner = cfg.tol_inner;
      if (flagged("--tol-outer")) merged.tol_outer = cfg.tol_outer;
      if (flagged("--damping")) merged.damping = cfg.damping;
      if (flagged("--output-dir")) merged.output_dir = cfg.output_dir;
      if (flagged("--jobs")) merged.jobs = cfg.jobs;
      if (cmd->get_name() == "generate") {
        if (flagged("--countries")) merged.countries = cfg.countries;
        if (flagged("--sectors")) merged.sectors = cfg.sectors;
        if (flagged("--symmetric")) merged.symmetric = cfg.symmetric;
        if (flagged("--nontradables")) merged.nontradables = cfg.nontradables;
        if (flagged("--table-a1")) merged.table_a1 = cfg.table_a1;
        if (flagged("--max-baseline-tariff")) merged.max_baseline_tariff = cfg.max_baseline_tariff;
      }
      cfg = merged;
    }
    if (cmd->count("--seed")) {
      cfg.seed = seed_flag;
      cfg.seed_given = true;
    }
    if (cmd->get_name() == "generate") {
      // generation is seeded by the synthetic seed; reuse --seed for it
      if (cfg.seed_given) cfg.syn_seed = cfg.seed;
      return cmd_generate(cfg, gen_out);
    }
    check_config(cfg);
    if (cmd->get_name() == "solve-equilibrium") return cmd_solve_equilibrium(cfg, wedge_path);
    if (cmd->get_name() == "nash") return cmd_nash(cfg);
    if (cmd->get_name() == "best-response") return cmd_best_response(cfg, player);
    if (cmd->get_name() == "cooperative") return cmd_cooperative(cfg);
    if (cmd->get_name() == "perturb") return cmd_perturb(cfg, player, draws);
    if (cmd->get_name() == "check-gradient")
      return cmd_check_gradient(cfg, player, wedge_path, threshold, fd_step);
    if (cmd->get_name() == "grid-oracle")
      return cmd_grid_oracle(cfg, player, instrument, grid_lo, grid_hi, steps);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const EquilibriumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const SingularSystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CheckFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
