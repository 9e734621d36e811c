#include "smartstat/pacman/energy.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace smartstat::pacman {

namespace {

constexpr double kJoulesPerKwh = 3.6e6;
constexpr double kFallbackSigma = 0.1;
constexpr double kMinSigma = 1e-3;
constexpr std::size_t kMinIdleSamples = 10;

double kwh(const thermal::ACUnit &ac, double on_seconds, double session_seconds) {
  return (ac.rated_electrical_power * on_seconds + ac.fan_power * session_seconds) /
         kJoulesPerKwh;
}

struct Run {
  std::size_t begin = 0;
  std::size_t length = 0;
};

std::vector<Run> runs_of(const std::vector<std::uint8_t> &flags) {
  std::vector<Run> runs;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (k == 0 || flags[k] != flags[k - 1]) {
      runs.push_back({k, 1});
    } else {
      ++runs.back().length;
    }
  }
  return runs;
}

}  // namespace

int CycleSegmentation::cycles() const {
  int n = 0;
  for (std::size_t k = 1; k < flags.size(); ++k) {
    if (!flags[k - 1] && flags[k]) ++n;
  }
  if (!flags.empty() && flags.front()) ++n;
  return n;
}

double CycleSegmentation::on_seconds() const {
  double s = 0.0;
  for (auto f : flags) s += f ? dt : 0.0;
  return s;
}

double CycleSegmentation::session_seconds() const {
  double s = 0.0;
  for (auto f : session) s += f ? dt : 0.0;
  return s;
}

void DecodeConfig::validate() const {
  if (!(switch_penalty >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "switch_penalty must be non-negative");
  }
  if (residual_sigma && !(*residual_sigma > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "residual_sigma must be positive");
  }
  if (min_run < 1) throw Error(ErrorCode::InvalidParameter, "min_run must be at least 1");
}

DecodeProblem emission_costs(const fit::ObservationSeries &observations,
                             const fit::FitResult &params, const DecodeConfig &cfg,
                             const thermal::ACUnit &ac) {
  cfg.validate();
  if (params.preset != thermal::Preset::single_zone) {
    throw Error(ErrorCode::ModelMismatch, "decoding needs single-zone parameters");
  }
  fit::validate_series(observations);
  const double dt = grid_step(observations);

  auto tmpl = fit::ModelTemplate::for_preset(thermal::Preset::single_zone);
  tmpl.ac = ac;
  const auto model = fit::assemble_model(tmpl, params.params);
  const auto &net = model.network;
  const auto room = net.zone_index(thermal::kRoom);
  const auto wall = net.zone_index(thermal::kWall);
  const double c_room = net.capacitance()(room);
  const double c_wall = net.capacitance()(wall);
  const double g_rw = 1.0 / *net.resistance(thermal::kRoom, thermal::kWall);
  const double g_wa = 1.0 / *net.resistance(thermal::kWall, thermal::kAmbient);
  const double gain_room = model.internal_gain(room);
  const double gain_wall = model.internal_gain(wall);
  const double q = model.ac.rated_cooling_power;
  const int m = std::max(1, static_cast<int>(std::ceil(dt / thermal::stable_dt(net) - 1e-9)));
  const double h = dt / m;

  const std::size_t n = observations.size();
  std::vector<double> temp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto it = observations[k].sensed_temps.find(std::string(thermal::kRoom));
    if (it == observations[k].sensed_temps.end()) {
      throw Error(ErrorCode::ModelMismatch, "records carry no room temperature");
    }
    temp[k] = it->second;
  }

  DecodeProblem p;
  p.dt = dt;
  p.emission = Eigen::MatrixX2d::Zero(static_cast<Eigen::Index>(n), 2);
  p.session.resize(n);
  for (std::size_t k = 0; k < n; ++k) p.session[k] = observations[k].set_temp ? 1 : 0;

  // Raw squared residuals first; sigma may be estimated from them.
  Eigen::MatrixX2d sq = Eigen::MatrixX2d::Zero(static_cast<Eigen::Index>(n), 2);
  std::vector<std::uint8_t> informative(n, 0);
  double tw = (g_rw * temp[0] + g_wa * observations[0].outdoor_temp + gain_wall) / (g_rw + g_wa);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double out = observations[k].outdoor_temp;
    for (int s = 0; s < 2; ++s) {
      double tr = temp[k];
      double w = tw;
      for (int j = 0; j < m; ++j) {
        const double flow = g_rw * (w - tr);
        const double d_room = (flow + gain_room - (s ? q : 0.0)) / c_room;
        const double d_wall = (-flow + g_wa * (out - w) + gain_wall) / c_wall;
        tr += h * d_room;
        w += h * d_wall;
      }
      const double r = temp[k + 1] - tr;
      sq(static_cast<Eigen::Index>(k), s) = r * r;
    }
    informative[k] = observations[k].door_open || observations[k + 1].door_open ? 0 : 1;
    // Wall follows the observed room, interpolated across the step.
    for (int j = 0; j < m; ++j) {
      const double tr = temp[k] + (temp[k + 1] - temp[k]) * j / m;
      tw += h * (g_rw * (tr - tw) + g_wa * (out - tw) + gain_wall) / c_wall;
    }
  }

  double sigma = kFallbackSigma;
  if (cfg.residual_sigma) {
    sigma = *cfg.residual_sigma;
  } else {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (!p.session[k] && informative[k]) {
        acc += sq(static_cast<Eigen::Index>(k), 0);
        ++count;
      }
    }
    if (count >= kMinIdleSamples) sigma = std::max(kMinSigma, std::sqrt(acc / count));
  }
  p.sigma = sigma;

  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!informative[k]) continue;
    p.emission(static_cast<Eigen::Index>(k), 0) = sq(static_cast<Eigen::Index>(k), 0) * inv;
    p.emission(static_cast<Eigen::Index>(k), 1) = sq(static_cast<Eigen::Index>(k), 1) * inv;
  }
  if (cfg.idle_forces_off) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!p.session[k]) {
        p.emission(static_cast<Eigen::Index>(k), 1) = std::numeric_limits<double>::infinity();
      }
    }
  }
  return p;
}

double sequence_cost(const Eigen::MatrixX2d &emission, const std::vector<std::uint8_t> &flags,
                     double switch_penalty) {
  if (flags.empty()) return 0.0;
  double cost = emission(0, flags[0] ? 1 : 0);
  for (std::size_t k = 1; k < flags.size(); ++k) {
    const bool change = (flags[k] != 0) != (flags[k - 1] != 0);
    cost = cost + (change ? switch_penalty : 0.0);
    cost = cost + emission(static_cast<Eigen::Index>(k), flags[k] ? 1 : 0);
  }
  return cost;
}

std::vector<std::uint8_t> viterbi(const Eigen::MatrixX2d &emission, double switch_penalty) {
  const auto n = static_cast<std::size_t>(emission.rows());
  std::vector<std::uint8_t> flags(n, 0);
  if (n == 0) return flags;
  std::vector<std::array<std::uint8_t, 2>> back(n);
  double d[2] = {emission(0, 0), emission(0, 1)};
  for (std::size_t k = 1; k < n; ++k) {
    double next[2];
    for (int s = 0; s < 2; ++s) {
      double best = std::numeric_limits<double>::infinity();
      std::uint8_t arg = 0;
      for (int prev = 0; prev < 2; ++prev) {
        const double c = d[prev] + (prev != s ? switch_penalty : 0.0);
        if (c < best) {
          best = c;
          arg = static_cast<std::uint8_t>(prev);
        }
      }
      next[s] = best + emission(static_cast<Eigen::Index>(k), s);
      back[k][static_cast<std::size_t>(s)] = arg;
    }
    d[0] = next[0];
    d[1] = next[1];
  }
  std::uint8_t s = d[1] < d[0] ? 1 : 0;
  for (std::size_t k = n; k-- > 0;) {
    flags[k] = s;
    if (k > 0) s = back[k][s];
  }
  return flags;
}

std::vector<std::uint8_t> merge_short_runs(std::vector<std::uint8_t> flags, int min_run) {
  const auto limit = static_cast<std::size_t>(std::max(1, min_run));
  while (true) {
    const auto runs = runs_of(flags);
    if (runs.size() < 2) break;
    const Run *shortest = nullptr;
    for (const auto &r : runs) {
      if (r.length < limit && (!shortest || r.length < shortest->length)) shortest = &r;
    }
    if (!shortest) break;
    for (std::size_t k = shortest->begin; k < shortest->begin + shortest->length; ++k) {
      flags[k] = flags[k] ? 0 : 1;
    }
  }
  return flags;
}

CycleSegmentation decode_cycles(const fit::ObservationSeries &observations,
                                const fit::FitResult &params, const DecodeConfig &cfg,
                                const thermal::ACUnit &ac) {
  const auto problem = emission_costs(observations, params, cfg, ac);
  CycleSegmentation seg;
  seg.dt = problem.dt;
  seg.flags = merge_short_runs(viterbi(problem.emission, cfg.switch_penalty), cfg.min_run);
  if (cfg.idle_forces_off) {
    for (std::size_t k = 0; k < seg.flags.size(); ++k) {
      if (!problem.session[k]) seg.flags[k] = 0;
    }
  }
  seg.session = problem.session;
  return seg;
}

double agreement(const std::vector<std::uint8_t> &a, const std::vector<std::uint8_t> &b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidParameter, "flag sequences differ in length");
  }
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t k = 0; k < a.size(); ++k) same += (a[k] != 0) == (b[k] != 0) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

std::string_view to_string(EnergyMethod m) {
  return m == EnergyMethod::estimated ? "estimated" : "predicted";
}

EnergyReport estimate_energy(const CycleSegmentation &seg, const thermal::ACUnit &ac) {
  EnergyReport r;
  r.energy = kwh(ac, seg.on_seconds(), seg.session_seconds());
  r.cycles = seg.cycles();
  r.on_hours = seg.on_seconds() / 3600.0;
  r.method = EnergyMethod::estimated;
  return r;
}

double accuracy(double estimated, double actual) {
  if (!(actual > 0.0)) throw Error(ErrorCode::ZeroActual, "actual energy must be positive");
  return std::max(0.0, 100.0 * (1.0 - std::abs(estimated - actual) / actual));
}

std::vector<Prediction> predict_energy(const fit::RoomModel &model,
                                       const thermal::HysteresisConfig &cfg,
                                       const TimeSeries &forecast,
                                       const std::vector<double> &candidates, double duration,
                                       const thermal::PlantState &init, double dt) {
  std::vector<Prediction> out;
  thermal::SimulationOptions opt;
  opt.horizon = duration;
  opt.dt = dt;
  if (model.internal_gain.size() != 0) opt.noise.mean_W = model.internal_gain;
  for (double set : candidates) {
    const auto trace = thermal::simulate(model.network, init, forecast,
                                         thermal::SetpointSchedule::constant(set, init.thermal.time),
                                         model.ac, cfg, opt);
    CycleSegmentation seg;
    seg.dt = dt;
    seg.flags = trace.compressor_on;
    seg.session.assign(trace.size(), 1);
    Prediction p;
    p.set_temp = set;
    p.energy = kwh(model.ac, seg.on_seconds(), seg.session_seconds());
    p.on_hours = seg.on_seconds() / 3600.0;
    // A compressor already running at the start is not a new cycle.
    p.cycles = seg.cycles() - (init.compressor.on && !seg.flags.empty() && seg.flags[0] ? 1 : 0);
    out.push_back(p);
  }
  return out;
}

std::vector<Prediction> predict_energy(const fit::ModelTemplate &tmpl,
                                       const fit::FitResult &fit, double now,
                                       const TimeSeries &forecast,
                                       const std::vector<double> &candidates, double duration,
                                       const thermal::PlantState &init) {
  if (!fit::is_fresh(fit, now)) {
    throw Error(ErrorCode::StaleModel, "no fitted model younger than 14 days");
  }
  return predict_energy(fit::assemble_model(tmpl, fit.params), tmpl.hysteresis, forecast,
                        candidates, duration, init);
}

double cycle_energy(const Prediction &p, const thermal::ACUnit &ac) {
  if (p.cycles <= 0) return 0.0;
  return ac.rated_electrical_power * p.on_hours * 3600.0 / p.cycles / kJoulesPerKwh;
}

}  // namespace smartstat::pacman
