#include "smartstat/fit/greybox.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace smartstat::fit {

namespace {

constexpr int kMaxSubsteps = 100;
constexpr double kFailedResidual = 1e3;

bool is_initial_temp(std::string_view name) { return name.starts_with("T0_"); }

ParamMap merged(const ModelTemplate &tmpl, const ParamMap &params) {
  ParamMap all = tmpl.fixed;
  for (const auto &[k, v] : params) all[k] = v;
  return all;
}

std::vector<std::string> model_zones(const ModelTemplate &tmpl) {
  if (tmpl.preset == thermal::Preset::custom) {
    throw Error(ErrorCode::InvalidParameter, "fitting needs a named preset");
  }
  return thermal::preset_zones(tmpl.preset);
}

/// Observation grid prepared once per fit; simulates candidates cheaply.
class Evaluator {
 public:
  Evaluator(const ModelTemplate &tmpl, const ObservationSeries &obs)
      : tmpl_(tmpl), zones_(model_zones(tmpl)) {
    if (obs.size() < 2) throw Error(ErrorCode::CoverageError, "need at least two records");
    validate_series(obs);
    dt_ = grid_step(obs);
    n_ = obs.size();
    have_flags_ = has_compressor_flags(obs);

    const auto nz = static_cast<Eigen::Index>(zones_.size());
    observed_ = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_), nz,
                                          std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < n_; ++k) {
      const auto &r = obs[k];
      if (!std::isfinite(r.outdoor_temp)) {
        throw Error(ErrorCode::MissingDrive, "record without outdoor temperature");
      }
      outdoor_.push_back(r.outdoor_temp);
      set_.push_back(r.set_temp);
      door_.push_back(r.door_open ? 1 : 0);
      flags_.push_back(r.compressor_on.value_or(false) ? 1 : 0);
      for (const auto &[zone, temp] : r.sensed_temps) {
        const auto z = zone_pos(zone);
        observed_(static_cast<Eigen::Index>(k), z) = temp;
        if (!r.door_open) entries_.emplace_back(static_cast<Eigen::Index>(k), z);
      }
    }
    for (const auto &[zone, temp] : obs.front().sensed_temps) {
      initial_sensed_.emplace_back(zone_pos(zone), temp);
    }
  }

  [[nodiscard]] Eigen::Index residual_count() const {
    return static_cast<Eigen::Index>(entries_.size());
  }
  [[nodiscard]] const std::vector<std::pair<Eigen::Index, Eigen::Index>> &entries() const {
    return entries_;
  }
  [[nodiscard]] const std::vector<std::string> &zones() const { return zones_; }
  [[nodiscard]] const Eigen::MatrixXd &observed() const { return observed_; }

  /// Initial zone temperatures: sensed values, then T0_ parameters, then
  /// the steady state of the unsensed zones given the sensed ones.
  [[nodiscard]] Eigen::VectorXd initial_state(const RoomModel &model,
                                              const ParamMap &all) const {
    const auto nz = static_cast<Eigen::Index>(zones_.size());
    Eigen::VectorXd x = Eigen::VectorXd::Constant(nz, std::numeric_limits<double>::quiet_NaN());
    for (const auto &[z, t] : initial_sensed_) x(z) = t;
    std::vector<Eigen::Index> unknown;
    for (Eigen::Index z = 0; z < nz; ++z) {
      if (!std::isnan(x(z))) continue;
      if (auto it = all.find(initial_temp_param(zones_[static_cast<std::size_t>(z)]));
          it != all.end()) {
        x(z) = it->second;
      } else {
        unknown.push_back(z);
      }
    }
    if (!unknown.empty()) {
      const auto &k = model.network.zone_coupling();
      const Eigen::VectorXd bsum = model.network.boundary_coupling().rowwise().sum();
      const auto nu = static_cast<Eigen::Index>(unknown.size());
      Eigen::MatrixXd kuu(nu, nu);
      Eigen::VectorXd rhs(nu);
      for (Eigen::Index i = 0; i < nu; ++i) {
        const auto zi = unknown[static_cast<std::size_t>(i)];
        rhs(i) = -(bsum(zi) * outdoor_.front() + model.internal_gain(zi));
        for (Eigen::Index j = 0; j < nz; ++j) {
          if (!std::isnan(x(j))) rhs(i) -= k(zi, j) * x(j);
        }
        for (Eigen::Index j = 0; j < nu; ++j) {
          kuu(i, j) = k(zi, unknown[static_cast<std::size_t>(j)]);
        }
      }
      const Eigen::VectorXd xu = kuu.partialPivLu().solve(rhs);
      for (Eigen::Index i = 0; i < nu; ++i) x(unknown[static_cast<std::size_t>(i)]) = xu(i);
    }
    return x;
  }

  /// Simulated temperatures (records x zones); false if the candidate cannot
  /// be integrated within the substep budget or diverges.
  bool run(const ParamMap &params, Eigen::MatrixXd &temps,
           std::vector<std::uint8_t> *applied = nullptr) const {
    const ParamMap all = merged(tmpl_, params);
    std::optional<RoomModel> model;
    try {
      model.emplace(assemble_model(tmpl_, all));
    } catch (const Error &) {
      return false;
    }
    const auto &net = model->network;
    const double bound = thermal::stable_dt(net);
    const int substeps = static_cast<int>(std::ceil(dt_ / bound - 1e-9));
    if (substeps > kMaxSubsteps) return false;
    const int m = std::max(1, substeps);
    const double h = dt_ / m;

    const Eigen::MatrixXd &k = net.zone_coupling();
    const Eigen::VectorXd bsum = net.boundary_coupling().rowwise().sum();
    const Eigen::VectorXd inv_c = net.capacitance().cwiseInverse();
    const Eigen::VectorXd cooling = model->ac.rated_cooling_power * net.ac_fraction();
    const Eigen::VectorXd &gain = model->internal_gain;
    const auto sense = net.find_zone(tmpl_.hysteresis.sensing_zone);
    if (!have_flags_ && !sense) return false;
    double door_g = 0.0;
    if (auto it = all.find(kDoorParam); it != all.end() && sense) door_g = it->second;

    Eigen::VectorXd x = initial_state(*model, all);
    if (!x.allFinite()) return false;
    Eigen::VectorXd flux(x.size());
    temps.resize(static_cast<Eigen::Index>(n_), x.size());
    thermal::CompressorState comp;
    if (applied) applied->assign(n_, 0);

    for (std::size_t s = 0; s < n_; ++s) {
      const double t = 0.0 + static_cast<double>(s) * dt_;
      temps.row(static_cast<Eigen::Index>(s)) = x.transpose();
      if (s + 1 == n_) break;
      bool on = flags_[s] != 0;
      if (!have_flags_) {
        if (set_[s]) {
          comp = thermal::thermostat_transition(comp, x(*sense), *set_[s], tmpl_.hysteresis,
                                                tmpl_.ac, t);
        } else {
          if (comp.on) comp.since = t;
          comp.on = false;
        }
        on = comp.on;
      }
      if (applied) (*applied)[s] = on ? 1 : 0;
      for (int sub = 0; sub < m; ++sub) {
        flux.noalias() = k * x;
        flux += bsum * outdoor_[s] + gain;
        if (on) flux -= cooling;
        if (door_[s] && door_g > 0.0) flux(*sense) += door_g * (outdoor_[s] - x(*sense));
        x += h * flux.cwiseProduct(inv_c);
      }
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e4) return false;
    }
    return true;
  }

  void residuals(const Eigen::MatrixXd &temps, Eigen::VectorXd &out) const {
    out.resize(residual_count());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto [k, z] = entries_[i];
      out(static_cast<Eigen::Index>(i)) = temps(k, z) - observed_(k, z);
    }
  }

  bool residuals(const ParamMap &params, Eigen::VectorXd &out) const {
    Eigen::MatrixXd temps;
    if (!run(params, temps)) {
      out = Eigen::VectorXd::Constant(residual_count(), kFailedResidual);
      return false;
    }
    residuals(temps, out);
    return true;
  }

  [[nodiscard]] double objective(const ParamMap &params) const {
    Eigen::VectorXd r;
    if (!residuals(params, r)) return std::numeric_limits<double>::infinity();
    if (r.size() == 0) return 0.0;
    return r.squaredNorm() / static_cast<double>(r.size());
  }

 private:
  [[nodiscard]] Eigen::Index zone_pos(const std::string &zone) const {
    for (std::size_t i = 0; i < zones_.size(); ++i) {
      if (zones_[i] == zone) return static_cast<Eigen::Index>(i);
    }
    throw Error(ErrorCode::UnknownZone, "observed zone '" + zone + "' not in model");
  }

  const ModelTemplate &tmpl_;
  std::vector<std::string> zones_;
  std::size_t n_ = 0;
  double dt_ = 60.0;
  bool have_flags_ = false;
  std::vector<double> outdoor_;
  std::vector<std::optional<double>> set_;
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint8_t> door_;
  Eigen::MatrixXd observed_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries_;
  std::vector<std::pair<Eigen::Index, double>> initial_sensed_;
};

/// Maps a free-parameter vector in transformed space to named values.
class Coordinates {
 public:
  explicit Coordinates(const ParamSpec &spec) : spec_(spec) {
    const auto n = static_cast<Eigen::Index>(spec.params.size());
    lo_.resize(n);
    hi_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto &p = spec.params[static_cast<std::size_t>(i)];
      lo_(i) = forward(p, p.lower);
      hi_(i) = forward(p, p.upper);
    }
    margin_ = 1e-9 * (hi_ - lo_);
  }

  static double forward(const ParamBound &p, double v) {
    return p.transform == Transform::log ? std::log(v) : v;
  }
  static double inverse(const ParamBound &p, double u) {
    return p.transform == Transform::log ? std::exp(u) : u;
  }

  [[nodiscard]] Eigen::Index size() const { return lo_.size(); }
  [[nodiscard]] const Eigen::VectorXd &lower() const { return lo_; }
  [[nodiscard]] const Eigen::VectorXd &upper() const { return hi_; }

  [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd &u) const {
    return u.cwiseMax(lo_ + margin_).cwiseMin(hi_ - margin_);
  }

  [[nodiscard]] Eigen::VectorXd encode(const ParamMap &values) const {
    Eigen::VectorXd u(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto &p = spec_.params[static_cast<std::size_t>(i)];
      auto it = values.find(p.name);
      u(i) = forward(p, it != values.end() ? it->second : p.initial);
    }
    return clamp(u);
  }

  [[nodiscard]] ParamMap decode(const Eigen::VectorXd &u) const {
    ParamMap out;
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto &p = spec_.params[static_cast<std::size_t>(i)];
      out[p.name] = inverse(p, u(i));
    }
    return out;
  }

 private:
  const ParamSpec &spec_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  Eigen::VectorXd margin_;
};

struct LocalResult {
  Eigen::VectorXd u;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

LocalResult levenberg_marquardt(const Evaluator &ev, const Coordinates &coords,
                                Eigen::VectorXd u, const FitOptions &options) {
  LocalResult res;
  u = coords.clamp(u);
  const auto m = ev.residual_count();
  const auto eval = [&](const Eigen::VectorXd &point, Eigen::VectorXd &r) {
    return ev.residuals(coords.decode(point), r);
  };

  Eigen::VectorXd r;
  res.u = u;
  if (m == 0) {
    res.cost = 0.0;
    res.converged = true;
    return res;
  }
  if (!eval(u, r)) return res;
  double cost = r.squaredNorm() / static_cast<double>(m);
  res.cost = cost;

  const auto n = coords.size();
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd r_step;
  double mu = 1e-3;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    res.iterations = iter;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd probe = u;
      double h = 1e-6 * std::max(1.0, std::abs(u(j)));
      if (probe(j) + h > coords.upper()(j)) h = -h;
      probe(j) += h;
      if (eval(probe, r_step)) {
        jac.col(j) = (r_step - r) / h;
      } else {
        jac.col(j).setZero();
      }
    }
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd scale = a.diagonal();
    scale = scale.cwiseMax(1e-12 * std::max(1.0, scale.maxCoeff()));

    bool accepted = false;
    double rel = 0.0;
    for (int attempt = 0; attempt < 16; ++attempt) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += mu * scale;
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      const Eigen::VectorXd candidate = coords.clamp(u + delta);
      if (eval(candidate, r_step)) {
        const double c = r_step.squaredNorm() / static_cast<double>(m);
        if (c < cost) {
          rel = (cost - c) / std::max(cost, 1e-300);
          u = candidate;
          r = r_step;
          cost = c;
          mu = std::max(mu / 3.0, 1e-12);
          accepted = true;
          break;
        }
      }
      mu *= 4.0;
    }
    if (!accepted || rel < options.tol || cost < 1e-24) {
      res.converged = true;
      break;
    }
  }
  res.u = u;
  res.cost = cost;
  return res;
}

/// Start k >= 1 of the multi-start sequence: row of a seeded Latin hypercube
/// block of eight, so any prefix of starts is independent of the total.
Eigen::VectorXd lhs_start(const Coordinates &coords, std::uint64_t seed, int k) {
  constexpr int kBlock = 8;
  const int block = (k - 1) / kBlock;
  const int row = (k - 1) % kBlock;
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(block) + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u(coords.size());
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    std::vector<int> perm(kBlock);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> jitter(kBlock);
    for (auto &v : jitter) v = unit(rng);
    const double frac = (perm[static_cast<std::size_t>(row)] + jitter[static_cast<std::size_t>(row)]) / kBlock;
    u(j) = coords.lower()(j) + frac * (coords.upper()(j) - coords.lower()(j));
  }
  return coords.clamp(u);
}

FitResult fit_from_start(const ModelTemplate &tmpl, const ObservationSeries &observations,
                         const ParamSpec &spec, const FitOptions &options,
                         const Evaluator &ev) {
  const Coordinates coords(spec);
  ParamMap initial;
  for (const auto &p : spec.params) initial[p.name] = p.initial;

  LocalResult best;
  const int starts = std::max(1, options.multi_start);
  for (int s = 0; s < starts; ++s) {
    const Eigen::VectorXd u0 =
        s == 0 ? coords.encode(initial) : lhs_start(coords, options.seed, s);
    LocalResult local = levenberg_marquardt(ev, coords, u0, options);
    if (local.cost < best.cost || best.u.size() == 0) best = std::move(local);
  }

  FitResult result;
  result.preset = tmpl.preset;
  result.params = merged(tmpl, coords.decode(best.u));
  const double obj = ev.objective(coords.decode(best.u));
  result.rmse = std::isfinite(obj) ? std::sqrt(obj) : std::numeric_limits<double>::infinity();
  result.window_start = observations.front().timestamp;
  result.window_end = observations.back().timestamp;
  result.iterations = best.iterations;
  result.converged = best.converged;
  result.created_at = result.window_end;
  return result;
}

double mean_initial_guess(const ObservationRecord &first) {
  double room = 0.0;
  for (const auto &[z, t] : first.sensed_temps) room += t;
  room /= static_cast<double>(first.sensed_temps.size());
  return 0.5 * (room + first.outdoor_temp);
}

}  // namespace

std::string capacitance_param(std::string_view zone) { return "C_" + std::string(zone); }

std::string resistance_param(std::string_view a, std::string_view b) {
  return "R_" + thermal::edge_key(a, b);
}

std::string initial_temp_param(std::string_view zone) { return "T0_" + std::string(zone); }

void ParamSpec::validate() const {
  std::set<std::string> names;
  for (const auto &p : params) {
    if (!names.insert(p.name).second) {
      throw Error(ErrorCode::InvalidParameter, "duplicate parameter '" + p.name + "'");
    }
    if (!(p.lower < p.upper) || p.initial < p.lower || p.initial > p.upper) {
      throw Error(ErrorCode::InvalidParameter, "bad bounds for '" + p.name + "'");
    }
    const bool positive = p.name.starts_with("R_") || p.name.starts_with("C_");
    if (positive && p.transform != Transform::log) {
      throw Error(ErrorCode::InvalidParameter, "'" + p.name + "' needs a log transform");
    }
    if (p.transform == Transform::log && !(p.lower > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "log-transformed '" + p.name +
                                                   "' needs a positive lower bound");
    }
  }
}

const ParamBound *ParamSpec::find(std::string_view name) const {
  for (const auto &p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

ModelTemplate ModelTemplate::for_preset(thermal::Preset preset) {
  ModelTemplate t;
  t.preset = preset;
  if (preset == thermal::Preset::single_zone) {
    t.ac_fractions = {{std::string(thermal::kRoom), 1.0}};
    t.hysteresis.sensing_zone = std::string(thermal::kRoom);
  } else {
    t.ac_fractions = {{std::string(thermal::kHir), 0.7},
                      {std::string(thermal::kMir), 0.25},
                      {std::string(thermal::kLir), 0.05}};
    t.hysteresis.sensing_zone = std::string(thermal::kHir);
  }
  return t;
}

RoomModel assemble_model(const ModelTemplate &tmpl, const ParamMap &params) {
  const ParamMap all = merged(tmpl, params);
  const auto lookup = [&](const std::string &name) {
    auto it = all.find(name);
    if (it == all.end()) {
      throw Error(ErrorCode::InvalidParameter, "missing parameter '" + name + "'");
    }
    return it->second;
  };
  std::map<std::string, double> caps;
  for (const auto &z : thermal::preset_zones(tmpl.preset)) caps[z] = lookup(capacitance_param(z));
  std::map<std::string, double> res;
  for (const auto &e : thermal::preset_edges(tmpl.preset)) res[e] = lookup("R_" + e);

  RoomModel model{thermal::build_room_model(tmpl.preset, caps, res, tmpl.ac_fractions), tmpl.ac,
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(caps.size()))};
  if (auto it = all.find(kCoolingParam); it != all.end()) {
    model.ac.rated_cooling_power = it->second;
  }
  if (auto it = all.find(kGainParam); it != all.end()) {
    const auto rooms = thermal::preset_room_zones(tmpl.preset);
    for (const auto &z : rooms) {
      model.internal_gain(model.network.zone_index(z)) =
          it->second / static_cast<double>(rooms.size());
    }
  }
  return model;
}

ParamSpec default_param_spec(const ModelTemplate &tmpl, const ObservationSeries &observations,
                             const SpecOptions &options) {
  ParamSpec spec;
  for (const auto &z : thermal::preset_zones(tmpl.preset)) {
    spec.params.push_back({capacitance_param(z), 1e3, 1e7, 1e5, Transform::log});
  }
  for (const auto &e : thermal::preset_edges(tmpl.preset)) {
    spec.params.push_back({"R_" + e, 1e-4, 1.0, 1e-2, Transform::log});
  }
  if (options.fit_cooling) {
    spec.params.push_back({kCoolingParam, 500.0, 1e4, tmpl.ac.rated_cooling_power, Transform::log});
  }
  if (options.fit_gain) {
    spec.params.push_back({kGainParam, 0.0, 5000.0, 500.0, Transform::linear});
  }
  if (options.fit_door && std::any_of(observations.begin(), observations.end(),
                                      [](const auto &r) { return r.door_open; })) {
    spec.params.push_back({kDoorParam, 0.0, 500.0, 50.0, Transform::linear});
  }
  if (!observations.empty()) {
    double lo = observations.front().outdoor_temp;
    double hi = lo;
    for (const auto &r : observations) {
      lo = std::min(lo, r.outdoor_temp);
      hi = std::max(hi, r.outdoor_temp);
      for (const auto &[z, t] : r.sensed_temps) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
    const auto &first = observations.front();
    for (const auto &z : thermal::preset_zones(tmpl.preset)) {
      if (first.sensed_temps.contains(z)) continue;
      const double guess = std::clamp(mean_initial_guess(first), lo - 5.0, hi + 5.0);
      spec.params.push_back({initial_temp_param(z), lo - 5.0, hi + 5.0, guess,
                             Transform::linear});
    }
  }
  return spec;
}

bool is_fresh(const FitResult &fit, double now, double max_age) {
  return fit.fitted() && now - fit.created_at <= max_age;
}

void check_excitation(const ObservationSeries &observations, const FitOptions &options) {
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  const double span = observations.back().timestamp - observations.front().timestamp;
  if (span < options.min_span) {
    throw Error(ErrorCode::IllConditioned,
                "window spans " + std::to_string(span / 3600.0) + " h, need " +
                    std::to_string(options.min_span / 3600.0) + " h");
  }
  int cycles = 0;
  for (std::size_t k = 1; k < observations.size(); ++k) {
    const bool prev = observations[k - 1].compressor_on.value_or(false);
    const bool cur = observations[k].compressor_on.value_or(false);
    if (!prev && cur) ++cycles;
  }
  if (cycles >= 1) return;
  std::map<std::string, std::pair<double, double>> range;
  for (const auto &r : observations) {
    if (r.compressor_on.value_or(false) || r.door_open) continue;
    for (const auto &[z, t] : r.sensed_temps) {
      auto [it, fresh] = range.try_emplace(z, t, t);
      it->second.first = std::min(it->second.first, t);
      it->second.second = std::max(it->second.second, t);
    }
  }
  for (const auto &[z, mm] : range) {
    if (mm.second - mm.first >= options.min_drift) return;
  }
  throw Error(ErrorCode::IllConditioned,
              "no compressor cycle and less than " + std::to_string(options.min_drift) +
                  " °C of passive drift");
}

double objective(const ParamMap &params, const ModelTemplate &tmpl,
                 const ObservationSeries &observations) {
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  return Evaluator(tmpl, observations).objective(params);
}

Eigen::MatrixXd simulate_observed(const ParamMap &params, const ModelTemplate &tmpl,
                                  const ObservationSeries &observations) {
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  Evaluator ev(tmpl, observations);
  Eigen::MatrixXd temps;
  if (!ev.run(params, temps)) {
    throw Error(ErrorCode::UnstableStep, "parameters cannot be simulated on this grid");
  }
  return temps;
}

Replay replay_thermostat(const ParamMap &params, const ModelTemplate &tmpl,
                         const ObservationSeries &observations) {
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  ObservationSeries unflagged = observations;
  for (auto &r : unflagged) r.compressor_on.reset();
  Evaluator ev(tmpl, unflagged);
  Replay out;
  out.zones = ev.zones();
  if (!ev.run(params, out.temperatures, &out.compressor_on)) {
    throw Error(ErrorCode::UnstableStep, "parameters cannot be simulated on this grid");
  }
  return out;
}

FitResult fit_params(const ModelTemplate &tmpl, const ObservationSeries &observations,
                     const ParamSpec &spec, const FitOptions &options) {
  spec.validate();
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  check_excitation(observations, options);
  Evaluator ev(tmpl, observations);
  return fit_from_start(tmpl, observations, spec, options, ev);
}

RefitOutcome refit(const FitResult &previous, const ModelTemplate &tmpl,
                   const ObservationSeries &window, const ParamSpec &spec,
                   const FitOptions &options) {
  RefitOutcome out;
  out.active = previous;
  try {
    check_excitation(window, options);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::IllConditioned && e.code() != ErrorCode::CoverageError) throw;
    out.flagged = true;
    out.reason = e.what();
    return out;
  }
  spec.validate();
  Evaluator ev(tmpl, window);

  // Nuisance initial temperatures belong to the old window; drop them so
  // the incumbent starts from the steady-state estimate on this window.
  ParamMap incumbent;
  for (const auto &[k, v] : previous.params) {
    if (!is_initial_temp(k)) incumbent[k] = v;
  }
  const double inc_obj = ev.objective(incumbent);
  out.incumbent_rmse = std::isfinite(inc_obj) ? std::sqrt(inc_obj)
                                              : std::numeric_limits<double>::infinity();

  ParamSpec warm = spec;
  std::optional<Eigen::VectorXd> steady;
  for (auto &p : warm.params) {
    if (is_initial_temp(p.name)) {
      if (!steady) {
        try {
          steady = ev.initial_state(assemble_model(tmpl, incumbent), merged(tmpl, incumbent));
        } catch (const Error &) {
          steady = Eigen::VectorXd();
        }
      }
      const auto &zones = ev.zones();
      const auto pos = std::find(zones.begin(), zones.end(), p.name.substr(3));
      if (steady->size() > 0 && pos != zones.end()) {
        p.initial = std::clamp((*steady)(pos - zones.begin()), p.lower, p.upper);
      }
    } else if (auto it = incumbent.find(p.name); it != incumbent.end()) {
      p.initial = std::clamp(it->second, p.lower, p.upper);
    }
  }

  FitResult candidate = fit_from_start(tmpl, window, warm, options, ev);
  out.candidate_rmse = candidate.rmse;
  if (candidate.rmse <= out.incumbent_rmse) {
    out.active = candidate;
    out.accepted = true;
  } else {
    out.reason = "candidate rmse exceeds incumbent on the window";
  }
  return out;
}

std::vector<Residual> residual_series(const ParamMap &params, const ModelTemplate &tmpl,
                                      const ObservationSeries &observations) {
  if (observations.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  Evaluator ev(tmpl, observations);
  Eigen::MatrixXd temps;
  if (!ev.run(params, temps)) {
    throw Error(ErrorCode::UnstableStep, "parameters cannot be simulated on this grid");
  }
  std::vector<Residual> out;
  out.reserve(ev.entries().size());
  for (const auto &[k, z] : ev.entries()) {
    out.push_back({observations[static_cast<std::size_t>(k)].timestamp,
                   ev.zones()[static_cast<std::size_t>(z)],
                   ev.observed()(k, z) - temps(k, z)});
  }
  return out;
}

}  // namespace smartstat::fit
