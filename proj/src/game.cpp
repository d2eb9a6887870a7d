#include "tradeopt/game.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tradeopt {

Scenario scenario_from_string(const std::string& s) {
  if (s == "trade-war") return Scenario::TradeWar;
  if (s == "dual") return Scenario::Dual;
  if (s == "subsidy-only") return Scenario::SubsidyOnly;
  if (s == "uniform-subsidy") return Scenario::UniformSubsidy;
  if (s == "cooperative-tariff") return Scenario::CooperativeTariff;
  if (s == "cooperative-dual") return Scenario::CooperativeDual;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::TradeWar: return "trade-war";
    case Scenario::Dual: return "dual";
    case Scenario::SubsidyOnly: return "subsidy-only";
    case Scenario::UniformSubsidy: return "uniform-subsidy";
    case Scenario::CooperativeTariff: return "cooperative-tariff";
    case Scenario::CooperativeDual: return "cooperative-dual";
  }
  return "?";
}

bool is_cooperative(Scenario s) {
  return s == Scenario::CooperativeTariff || s == Scenario::CooperativeDual;
}

namespace {

std::vector<int> players_or_all(const Calibration& cal, const ScenarioMask& mask) {
  if (!mask.players.empty()) return mask.players;
  std::vector<int> all(cal.N);
  for (int i = 0; i < cal.N; ++i) all[i] = i;
  return all;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u = (rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

// Fisher-Yates with the run's own generator, so playing sequences do not
// depend on the standard library's std::shuffle implementation.
void shuffle_order(std::vector<int>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace

InstrumentList build_instruments(const Calibration& cal, const ScenarioMask& mask) {
  InstrumentList list;
  bool tariffs = mask.kind == Scenario::TradeWar || mask.kind == Scenario::Dual ||
                 mask.kind == Scenario::CooperativeTariff || mask.kind == Scenario::CooperativeDual;
  bool subsidies = mask.kind == Scenario::Dual || mask.kind == Scenario::SubsidyOnly ||
                   mask.kind == Scenario::CooperativeDual;

  for (int p : players_or_all(cal, mask)) {
    if (tariffs)
      for (int k = 0; k < cal.N; ++k) {
        if (k == p) continue;
        for (int j = 0; j < cal.J; ++j) {
          if (!cal.tradable[j]) continue;
          Instrument a;
          a.kind = Instrument::Kind::ImportTariff;
          a.owner = p;
          a.origin = k;
          a.sector = j;
          a.lower = 0.0;
          a.upper = mask.tariff_cap;
          list.push_back(a);
        }
      }
    if (subsidies)
      for (int j = 0; j < cal.J; ++j) {
        if (!cal.tradable[j]) continue;
        Instrument a;
        a.kind = Instrument::Kind::SectorSubsidy;
        a.owner = p;
        a.sector = j;
        a.lower = 0.0;
        a.upper = mask.subsidy_cap;
        list.push_back(a);
      }
    if (mask.kind == Scenario::UniformSubsidy) {
      Instrument a;
      a.kind = Instrument::Kind::UniformSubsidy;
      a.owner = p;
      if (mask.manuf_sectors.empty()) {
        for (int j = 0; j < cal.J; ++j)
          if (cal.tradable[j]) a.sectors.push_back(j);
      } else {
        a.sectors = mask.manuf_sectors;
      }
      a.lower = 0.0;
      a.upper = mask.subsidy_cap;
      list.push_back(a);
    }
  }
  return list;
}

std::vector<double> baseline_values(const Calibration& cal, const InstrumentList& instruments) {
  std::vector<double> v(instruments.size(), 0.0);
  for (std::size_t k = 0; k < instruments.size(); ++k) {
    const Instrument& a = instruments[k];
    if (a.kind == Instrument::Kind::ImportTariff)
      v[k] = cal.baseline_tariff[cal.route(a.origin, a.owner, a.sector)];
  }
  return v;
}

namespace {

double projected_grad_norm(const GradientVector& g, const std::vector<double>& vals,
                           const InstrumentList& instruments, const std::vector<int>& active) {
  double n = 0.0;
  for (std::size_t c = 0; c < active.size(); ++c) {
    const Instrument& a = instruments[active[c]];
    double x = vals[active[c]], gk = g.values[c];
    if (x <= a.lower && gk < 0.0) continue;  // ascent pinned at the lower bound
    if (x >= a.upper && gk > 0.0) continue;
    n = std::max(n, std::abs(gk));
  }
  return n;
}

// Projected-ADAM ascent over the given active instruments. Shared by the
// unilateral best response and the cooperative planner.
struct AscentResult {
  std::vector<double> values;
  double objective = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  bool objective_decreased = false;
  HatEquilibrium last_eq;
};

AscentResult ascend(const std::vector<double>& profile, const Calibration& cal,
                    const Baseline& base, const InstrumentList& instruments,
                    const std::vector<int>& active, const std::vector<double>& weights,
                    const BestResponseOptions& opts, const HatEquilibrium* warm) {
  AscentResult res;
  res.values = profile;

  std::vector<double> lower(active.size()), upper(active.size());
  for (std::size_t c = 0; c < active.size(); ++c) {
    lower[c] = instruments[active[c]].lower;
    upper[c] = instruments[active[c]].upper;
  }

  auto objective_of = [&](const HatEquilibrium& eq) {
    double o = 0.0;
    for (int n = 0; n < cal.N; ++n) o += weights[n] * eq.hat_W[n];
    return o;
  };

  SolveOptions solve = opts.solve;
  HatEquilibrium eq;
  if (warm && warm->converged) {
    solve.warm_start = warm;
  }
  eq = solve_fixed_point(build_wedges(cal, instruments, res.values), cal, base, solve);
  solve.warm_start = &eq;
  res.objective = objective_of(eq);

  if (active.empty()) {
    res.last_eq = eq;
    return res;
  }

  AdamState adam(active.size(), opts.adam);
  GradientVector grad;
  double best = res.objective;
  std::vector<double> sub(active.size());
  for (int it = 0; it < opts.iters; ++it) {
    try {
      grad = policy_gradient(cal, base, instruments, res.values, active, weights, eq);
    } catch (const EquilibriumError& e) {
      throw EquilibriumError("best-response iterate failed at iteration " + std::to_string(it) +
                                 ": " + e.what(),
                             e.residual);
    }
    res.stationarity = projected_grad_norm(grad, res.values, instruments, active);
    if (opts.grad_tol > 0.0 && res.stationarity < opts.grad_tol) break;

    GradientVector g = opts.adam.clip_enabled ? clip_gradient(grad, opts.adam.max_grad_norm) : grad;
    for (std::size_t c = 0; c < active.size(); ++c) sub[c] = res.values[active[c]];
    adam_step(adam, g, sub);
    project(sub, lower, upper);
    for (std::size_t c = 0; c < active.size(); ++c) res.values[active[c]] = sub[c];

    eq = solve_fixed_point(build_wedges(cal, instruments, res.values), cal, base, solve);
    res.objective = objective_of(eq);
    best = std::max(best, res.objective);
    res.iterations = it + 1;
  }
  if (res.objective < best - 1e-9) res.objective_decreased = true;

  grad = policy_gradient(cal, base, instruments, res.values, active, weights, eq);
  res.stationarity = projected_grad_norm(grad, res.values, instruments, active);
  res.last_eq = eq;
  return res;
}

}  // namespace

BestResponseResult best_response(int player, const std::vector<double>& profile,
                                 const Calibration& cal, const Baseline& base,
                                 const InstrumentList& instruments,
                                 const BestResponseOptions& opts, const HatEquilibrium* warm) {
  if (opts.iters < 1) throw std::invalid_argument("best_response: iters must be >= 1");
  std::vector<int> active = owned_by(instruments, player);
  auto weights = unilateral_weights(cal.N, player);
  AscentResult a = ascend(profile, cal, base, instruments, active, weights, opts, warm);
  BestResponseResult r;
  r.values = std::move(a.values);
  r.welfare = a.last_eq.hat_W[player];
  r.stationarity = a.stationarity;
  r.iterations = a.iterations;
  r.objective_decreased = a.objective_decreased;
  return r;
}

GameResult nash_solve(const Calibration& cal, const ScenarioMask& mask, const GameOptions& opts) {
  if (opts.eta <= 0.0 || opts.eta > 1.0) throw std::invalid_argument("eta must be in (0, 1]");
  if (is_cooperative(mask.kind))
    throw std::invalid_argument("nash_solve expects a non-cooperative scenario");

  Baseline base = derive_baseline(cal);
  InstrumentList instruments = build_instruments(cal, mask);
  std::vector<double> values = baseline_values(cal, instruments);
  std::vector<int> players = players_or_all(cal, mask);

  std::mt19937_64 rng(opts.seed);
  GameResult res;
  res.scenario = mask.kind;
  res.instruments = instruments;
  res.seed = opts.seed;

  HatEquilibrium warm;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<int> order = players;
    shuffle_order(order, rng);
    res.sequence_log.push_back(order);

    double round_change = 0.0;
    for (int p : order) {
      BestResponseResult br =
          best_response(p, values, cal, base, instruments, opts.br, warm.converged ? &warm : nullptr);
      for (int k : owned_by(instruments, p)) {
        double blended = opts.eta * br.values[k] + (1.0 - opts.eta) * values[k];
        round_change = std::max(round_change, std::abs(blended - values[k]));
        values[k] = blended;
      }
    }
    res.round_change_norms.push_back(round_change);
    res.epochs = epoch + 1;
    warm = solve_fixed_point(build_wedges(cal, instruments, values), cal, base, opts.br.solve);
    if (round_change < opts.outer_tol) {
      res.converged = true;
      break;
    }
  }

  res.values = values;
  res.wedges = build_wedges(cal, instruments, values);
  HatEquilibrium eq = solve_fixed_point(res.wedges, cal, base, opts.br.solve);
  res.welfare_hat = eq.hat_W;
  return res;
}

std::vector<double> cooperative_weights(const Baseline& base) {
  double total = 0.0;
  for (double y : base.income) total += y;
  std::vector<double> w(base.income.size());
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = base.income[n] / total;
  return w;
}

GameResult cooperative_solve(const Calibration& cal, const ScenarioMask& mask,
                             const GameOptions& opts) {
  if (!is_cooperative(mask.kind))
    throw std::invalid_argument("cooperative_solve expects a cooperative scenario mask");

  Baseline base = derive_baseline(cal);
  InstrumentList instruments = build_instruments(cal, mask);
  std::vector<double> values = baseline_values(cal, instruments);
  std::vector<int> active(instruments.size());
  for (std::size_t k = 0; k < active.size(); ++k) active[k] = static_cast<int>(k);

  std::vector<double> weights = cooperative_weights(base);
  BestResponseOptions br = opts.br;
  br.iters = std::max(1, opts.br.iters * std::max(1, opts.epochs));
  AscentResult a = ascend(values, cal, base, instruments, active, weights, br, nullptr);

  GameResult res;
  res.scenario = mask.kind;
  res.instruments = instruments;
  res.values = a.values;
  res.wedges = build_wedges(cal, instruments, a.values);
  res.welfare_hat = a.last_eq.hat_W;
  res.seed = opts.seed;
  res.epochs = a.iterations;
  res.converged = true;
  res.round_change_norms.push_back(a.stationarity);
  return res;
}

PerturbationResult subsidy_perturbation_experiment(const Calibration& cal,
                                                   const InstrumentList& instruments,
                                                   const std::vector<double>& profile, int player,
                                                   int n_draws, std::uint64_t seed,
                                                   const SolveOptions& solve) {
  if (n_draws < 1) throw std::invalid_argument("need at least one draw");
  std::vector<int> subsidy_idx;
  for (std::size_t k = 0; k < instruments.size(); ++k)
    if (instruments[k].owner == player && instruments[k].kind != Instrument::Kind::ImportTariff)
      subsidy_idx.push_back(static_cast<int>(k));
  if (subsidy_idx.empty())
    throw std::invalid_argument("player " + std::to_string(player) + " has no subsidy instruments");

  Baseline base = derive_baseline(cal);
  PerturbationResult res;
  {
    HatEquilibrium eq = solve_fixed_point(build_wedges(cal, instruments, profile), cal, base, solve);
    res.baseline_welfare = eq.hat_W[player];
  }

  std::mt19937_64 rng(seed);
  res.draws.resize(n_draws);
  for (int d = 0; d < n_draws; ++d) {
    PerturbationDraw& draw = res.draws[d];
    std::vector<double> vals = profile;
    draw.subsidies.reserve(subsidy_idx.size());
    for (int k : subsidy_idx) {
      double star = profile[k];
      double s = uniform(rng, 0.1 * star, 1.9 * star);
      vals[k] = s;
      draw.subsidies.push_back(s);
    }
    try {
      HatEquilibrium eq = solve_fixed_point(build_wedges(cal, instruments, vals), cal, base, solve);
      draw.welfare = eq.hat_W[player];
      draw.ok = true;
    } catch (const EquilibriumError&) {
      draw.ok = false;  // flagged, not fatal
    }
  }
  return res;
}

}  // namespace tradeopt
