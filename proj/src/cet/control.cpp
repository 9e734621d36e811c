#include "smartstat/cet/control.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace smartstat::cet {

namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr double kJoulesPerKwh = 3.6e6;

/// Partial closed-loop rollout; sums accumulate in trace order so a finished
/// rollout reproduces energy_of/discomfort_of on the simulated trace bit for bit.
struct Rollout {
  explicit Rollout(thermal::Plant p) : plant(std::move(p)) {}

  thermal::Plant plant;
  std::size_t steps_done = 0;
  double on_seconds = 0.0;
  double session_seconds = 0.0;
  double exceed_seconds = 0.0;
  std::vector<double> sets;

  [[nodiscard]] double energy(const thermal::ACUnit &ac) const {
    return (ac.rated_electrical_power * on_seconds + ac.fan_power * session_seconds) /
           kJoulesPerKwh;
  }
  [[nodiscard]] double discomfort() const { return exceed_seconds / kSecondsPerHour; }
  [[nodiscard]] double mean_set() const {
    if (sets.empty()) return 0.0;
    return std::accumulate(sets.begin(), sets.end(), 0.0) / static_cast<double>(sets.size());
  }
};

class Planner {
 public:
  Planner(const PlanningModel &model, const TimeSeries &forecast, const CETConfig &cfg,
          const thermal::PlantState &init)
      : model_(model),
        forecast_(forecast),
        cfg_(cfg),
        t0_(init.thermal.time),
        total_steps_(static_cast<std::size_t>(std::llround(cfg.horizon / model.dt))),
        slots_(cfg.slot_count()),
        comfort_(model.network.zone_index(cfg.comfort_zone)),
        heat_(model.internal_gain.size() == 0
                  ? Eigen::VectorXd::Zero(model.network.zone_count())
                  : Eigen::VectorXd(model.internal_gain)),
        root_(thermal::Plant(model.network, model.ac, model.hysteresis, init, model.dt)) {
    if (init.thermal.temperatures.size() != model.network.zone_count()) {
      throw Error(ErrorCode::ModelMismatch, "initial state does not match the model zones");
    }
    if (model.dt > thermal::stable_dt(model.network) * (1.0 + 1e-9)) {
      throw Error(ErrorCode::UnstableStep, "planning step exceeds the stable bound");
    }
    if (!forecast.covers(t0_, t0_ + cfg.horizon, 3.0 * kSecondsPerHour)) {
      throw Error(ErrorCode::CoverageError, "forecast does not cover the planning horizon");
    }
  }

  [[nodiscard]] const Rollout &root() const { return root_; }
  [[nodiscard]] std::size_t slots() const { return slots_; }

  /// Advances r through slot d at set temperature `set`.
  void run_slot(Rollout &r, std::size_t d, double set) const {
    const bool last = d + 1 == slots_;
    const double next_start = t0_ + static_cast<double>(d + 1) * cfg_.slot;
    const double dt = model_.dt;
    while (r.steps_done < total_steps_) {
      const double t = r.plant.state().thermal.time;
      if (!last && t >= next_start) break;
      const double temp = r.plant.state().thermal.temperatures(comfort_);
      const double exceed = std::max(0.0, std::abs(temp - cfg_.preferred_temp) - cfg_.band);
      const bool on = r.plant.advance(set, forecast_.value_at(t), heat_);
      r.on_seconds += on ? dt : 0.0;
      r.session_seconds += dt;
      r.exceed_seconds += exceed * dt;
      ++r.steps_done;
    }
    r.sets.push_back(set);
  }

 private:
  const PlanningModel &model_;
  const TimeSeries &forecast_;
  const CETConfig &cfg_;
  double t0_;
  std::size_t total_steps_;
  std::size_t slots_;
  Eigen::Index comfort_;
  Eigen::VectorXd heat_;
  Rollout root_;
};

struct Scored {
  double j = 0.0;
  double discomfort = 0.0;
  double mean_set = 0.0;
};

/// Lower J, then lower discomfort, then higher mean set temperature.
bool better(const Scored &a, const Scored &b) {
  if (a.j != b.j) return a.j < b.j;
  if (a.discomfort != b.discomfort) return a.discomfort < b.discomfort;
  return a.mean_set > b.mean_set;
}

Scored score(const Rollout &r, const PlanningModel &model, const CETConfig &cfg,
             const Normalizers &norm) {
  const double e = r.energy(model.ac);
  const double d = r.discomfort();
  return {scalarize(e, d, cfg.alpha, norm), d, r.mean_set()};
}

void exhaustive(const Planner &planner, const PlanningModel &model, const CETConfig &cfg,
                const Normalizers &norm, const Rollout &node, std::size_t depth,
                std::optional<std::pair<Scored, Rollout>> &best, std::size_t &expanded) {
  for (double set : cfg.candidates) {
    Rollout child = node;
    planner.run_slot(child, depth, set);
    ++expanded;
    if (depth + 1 == planner.slots()) {
      const Scored s = score(child, model, cfg, norm);
      if (!best || better(s, best->first)) best.emplace(s, std::move(child));
    } else {
      exhaustive(planner, model, cfg, norm, child, depth + 1, best, expanded);
    }
  }
}

Rollout beam(const Planner &planner, const PlanningModel &model, const CETConfig &cfg,
             const Normalizers &norm, std::size_t width, std::size_t &expanded) {
  std::vector<Rollout> frontier{planner.root()};
  for (std::size_t d = 0; d < planner.slots(); ++d) {
    std::vector<std::pair<Scored, Rollout>> children;
    children.reserve(frontier.size() * cfg.candidates.size());
    for (const auto &node : frontier) {
      for (double set : cfg.candidates) {
        Rollout child = node;
        planner.run_slot(child, d, set);
        ++expanded;
        const Scored s = score(child, model, cfg, norm);
        children.emplace_back(s, std::move(child));
      }
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const auto &a, const auto &b) { return better(a.first, b.first); });
    if (children.size() > width) children.erase(children.begin() + static_cast<std::ptrdiff_t>(width), children.end());
    frontier.clear();
    for (auto &c : children) frontier.push_back(std::move(c.second));
  }
  return std::move(frontier.front());
}

thermal::SimulationTrace make_trace(const thermal::RCNetwork &network, std::size_t steps,
                                    double dt) {
  thermal::SimulationTrace trace;
  trace.dt = dt;
  trace.zone_ids = network.zone_ids();
  trace.time.reserve(steps);
  trace.temperatures.resize(static_cast<Eigen::Index>(steps), network.zone_count());
  return trace;
}

/// Shared driver for the realized runs: one plant, one noise stream, and a
/// set-temperature source consulted at every step.
template <typename SetFn>
LoopResult drive(const PlanningModel &truth, const TimeSeries &forecast, const CETConfig &cfg,
                 const thermal::PlantState &init, double duration,
                 const thermal::NoiseModel &noise, SetFn &&set_at) {
  if (duration < 0.0) throw Error(ErrorCode::InvalidParameter, "duration must be non-negative");
  if (!forecast.covers(init.thermal.time, init.thermal.time + duration, 3.0 * kSecondsPerHour)) {
    throw Error(ErrorCode::CoverageError, "forecast does not cover the run");
  }
  thermal::NoiseModel nm = noise;
  if (nm.mean_W.size() == 0 && truth.internal_gain.size() != 0) nm.mean_W = truth.internal_gain;
  thermal::BlockNoise stream(nm, truth.network.zone_count(), init.thermal.time);
  thermal::Plant plant(truth.network, truth.ac, truth.hysteresis, init, truth.dt);

  const auto steps = static_cast<std::size_t>(std::llround(duration / truth.dt));
  LoopResult out;
  out.trace = make_trace(truth.network, steps, truth.dt);
  Eigen::VectorXd heat;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = plant.state().thermal.time;
    const double t_out = forecast.value_at(t);
    const std::optional<double> set = set_at(k, plant.state(), out);
    heat = stream.at(t);
    out.trace.time.push_back(t);
    out.trace.temperatures.row(static_cast<Eigen::Index>(k)) =
        plant.state().thermal.temperatures.transpose();
    out.trace.compressor_on.push_back(plant.advance(set, t_out, heat) ? 1 : 0);
    out.trace.set_temp.push_back(set);
    out.trace.outdoor.push_back(t_out);
  }
  out.trace.final_state = plant.state();
  out.report.energy = energy_of(out.trace, truth.ac);
  out.report.discomfort =
      discomfort_of(out.trace, cfg.preferred_temp, cfg.band, cfg.comfort_zone);
  return out;
}

}  // namespace

void CETConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "alpha must lie in [0, 1]");
  }
  if (!(band >= 0.0)) throw Error(ErrorCode::InvalidParameter, "band must be non-negative");
  if (candidates.empty()) throw Error(ErrorCode::InvalidParameter, "no candidate set temperatures");
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (!(candidates[i] > candidates[i - 1])) {
      throw Error(ErrorCode::InvalidParameter, "candidates must be strictly increasing");
    }
  }
  if (!(slot > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "slot and horizon must be positive");
  }
  const double ratio = horizon / slot;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorCode::InvalidParameter, "horizon must be a multiple of slot");
  }
}

std::size_t CETConfig::slot_count() const {
  return static_cast<std::size_t>(std::llround(horizon / slot));
}

std::vector<double> CETConfig::default_candidates() {
  std::vector<double> c;
  for (int t = 16; t <= 30; ++t) c.push_back(t);
  return c;
}

PlanningModel planning_model(const fit::RoomModel &room, const thermal::HysteresisConfig &cfg) {
  return PlanningModel{room.network, room.ac, cfg, room.internal_gain, 60.0};
}

PlanningModel planning_model(const fit::ModelTemplate &tmpl, const fit::FitResult &fit,
                             double now) {
  if (!fit::is_fresh(fit, now)) {
    throw Error(ErrorCode::StaleModel, "no fitted model younger than 14 days");
  }
  return planning_model(fit::assemble_model(tmpl, fit.params), tmpl.hysteresis);
}

double discomfort_of(const thermal::SimulationTrace &trace, double preferred_temp, double band,
                     std::string_view comfort_zone) {
  if (trace.size() == 0) return 0.0;
  const auto col = trace.zone_column(comfort_zone);
  double exceed_seconds = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double temp = trace.temperatures(static_cast<Eigen::Index>(k), col);
    exceed_seconds += std::max(0.0, std::abs(temp - preferred_temp) - band) * trace.dt;
  }
  return exceed_seconds / kSecondsPerHour;
}

double energy_of(const thermal::SimulationTrace &trace, const thermal::ACUnit &ac) {
  double on_seconds = 0.0;
  double session_seconds = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    on_seconds += trace.compressor_on[k] ? trace.dt : 0.0;
    session_seconds += trace.set_temp[k] ? trace.dt : 0.0;
  }
  return (ac.rated_electrical_power * on_seconds + ac.fan_power * session_seconds) /
         kJoulesPerKwh;
}

thermal::SetpointSchedule slot_schedule(double t0, double slot, const std::vector<double> &sets) {
  thermal::SetpointSchedule s;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    s.slots.push_back({t0 + static_cast<double>(i) * slot, sets[i]});
  }
  return s;
}

thermal::SimulationTrace predict(const PlanningModel &model, const TimeSeries &forecast,
                                 const CETConfig &cfg, const thermal::PlantState &init,
                                 const thermal::SetpointSchedule &schedule) {
  thermal::SimulationOptions opt;
  opt.horizon = cfg.horizon;
  opt.dt = model.dt;
  if (model.internal_gain.size() != 0) opt.noise.mean_W = model.internal_gain;
  return thermal::simulate(model.network, init, forecast, schedule, model.ac, model.hysteresis,
                           opt);
}

Normalizers normalizers(const PlanningModel &model, const TimeSeries &forecast,
                        const CETConfig &cfg, const thermal::PlantState &init) {
  cfg.validate();
  const Planner planner(model, forecast, cfg, init);
  const auto constant = [&](double set) {
    Rollout r = planner.root();
    for (std::size_t d = 0; d < planner.slots(); ++d) planner.run_slot(r, d, set);
    return r;
  };
  Normalizers n;
  n.e_max = std::max(kNormalizerFloor, constant(cfg.candidates.front()).energy(model.ac));
  n.d_max = std::max(kNormalizerFloor, constant(cfg.candidates.back()).discomfort());
  return n;
}

double scalarize(double energy, double discomfort, double alpha, const Normalizers &norm) {
  return alpha * energy / norm.e_max + (1.0 - alpha) * discomfort / norm.d_max;
}

std::string_view to_string(SearchMethod m) {
  return m == SearchMethod::exhaustive ? "exhaustive" : "beam";
}

Plan plan(const PlanningModel &model, const TimeSeries &forecast, const CETConfig &cfg,
          const thermal::PlantState &init, const PlanOptions &options) {
  cfg.validate();
  const Planner planner(model, forecast, cfg, init);
  const Normalizers norm = options.normalizers ? *options.normalizers
                                              : normalizers(model, forecast, cfg, init);

  double combos = 1.0;
  for (std::size_t d = 0; d < planner.slots(); ++d) {
    combos *= static_cast<double>(cfg.candidates.size());
  }
  const SearchMethod method =
      options.force.value_or(combos <= static_cast<double>(kExhaustiveLimit)
                                 ? SearchMethod::exhaustive
                                 : SearchMethod::beam);

  Plan out;
  std::size_t expanded = 0;
  Rollout chosen = planner.root();
  if (method == SearchMethod::exhaustive) {
    std::optional<std::pair<Scored, Rollout>> best;
    exhaustive(planner, model, cfg, norm, planner.root(), 0, best, expanded);
    chosen = std::move(best->second);
  } else {
    chosen = beam(planner, model, cfg, norm, std::max<std::size_t>(1, options.beam_width),
                  expanded);
  }
  out.schedule = slot_schedule(init.thermal.time, cfg.slot, chosen.sets);
  auto &diag = out.diagnostics;
  diag.predicted_energy = chosen.energy(model.ac);
  diag.predicted_discomfort = chosen.discomfort();
  diag.objective = scalarize(diag.predicted_energy, diag.predicted_discomfort, cfg.alpha, norm);
  diag.norm = norm;
  diag.method = method;
  diag.nodes_expanded = expanded;
  return out;
}

LoopResult run_closed_loop(const PlanningModel &model, const PlanningModel &truth,
                           const TimeSeries &forecast, const CETConfig &cfg,
                           const thermal::PlantState &init, double duration,
                           double replan_every, const thermal::NoiseModel &noise) {
  cfg.validate();
  const double ratio = replan_every / cfg.slot;
  if (!(replan_every > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw Error(ErrorCode::InvalidParameter, "replan_every must be a multiple of slot");
  }
  if (model.network.zone_count() != truth.network.zone_count() || model.dt != truth.dt) {
    throw Error(ErrorCode::ModelMismatch, "planning model and room differ in structure");
  }
  const auto replan_steps = static_cast<std::size_t>(std::llround(replan_every / truth.dt));
  thermal::SetpointSchedule current;
  thermal::SetpointSchedule applied;
  std::optional<Normalizers> norm;
  auto result = drive(truth, forecast, cfg, init, duration, noise,
                      [&](std::size_t k, const thermal::PlantState &state, LoopResult &out) {
                        const double t = state.thermal.time;
                        if (k % replan_steps == 0) {
                          // The window shrinks to the run's remaining slots and
                          // keeps the first plan's normalizers, so the knob
                          // means the same thing for the whole run.
                          CETConfig window = cfg;
                          const double left = init.thermal.time + duration - t;
                          const auto slots_left = std::max<long long>(
                              1, std::llround(std::ceil(left / cfg.slot - 1e-9)));
                          window.horizon = std::min(cfg.slot_count(),
                                                    static_cast<std::size_t>(slots_left)) *
                                           cfg.slot;
                          PlanOptions opts;
                          opts.normalizers = norm;
                          auto p = plan(model, forecast, window, state, opts);
                          if (!norm) norm = p.diagnostics.norm;
                          current = p.schedule;
                          out.report.plans.push_back(std::move(p));
                        }
                        const auto set = current.active_at(t);
                        if (applied.slots.empty() || applied.slots.back().set_temp != set) {
                          applied.slots.push_back({t, set});
                        }
                        return set;
                      });
  result.applied = std::move(applied);
  return result;
}

LoopResult run_fixed_setpoint(const PlanningModel &truth, const TimeSeries &forecast,
                              const CETConfig &cfg, const thermal::PlantState &init,
                              double duration, double set_temp,
                              const thermal::NoiseModel &noise) {
  auto result = drive(truth, forecast, cfg, init, duration, noise,
                      [&](std::size_t, const thermal::PlantState &, LoopResult &) {
                        return std::optional<double>(set_temp);
                      });
  result.applied = thermal::SetpointSchedule::constant(set_temp, init.thermal.time);
  return result;
}

}  // namespace smartstat::cet
