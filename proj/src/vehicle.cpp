// Copyright 2026 The ctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctune/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ctune::vehicle {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

double rms(const std::vector<double>& values) {
  if (values.empty()) throw UsageError("objective: empty trajectory");
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

}  // namespace

nlohmann::json to_json(const VehicleConfig& c) {
  return {
      {"track",
       {{"straight_length", c.track.straight_length},
        {"curve_radius", c.track.curve_radius},
        {"sample_spacing", c.track.sample_spacing},
        {"speed_straight", c.track.speed_straight},
        {"speed_curve", c.track.speed_curve}}},
      {"wheelbase", c.wheelbase},
      {"accel_min", c.accel_min},
      {"accel_max", c.accel_max},
      {"steer_rate_max", c.steer_rate_max},
      {"steer_max", c.steer_max},
      {"sample_time", c.sample_time},
      {"max_time", c.max_time},
      {"horizon_steps", c.horizon_steps},
      {"substeps", c.substeps},
      {"lateral_bound", c.lateral_bound},
      {"heading_weight", c.heading_weight},
      {"exponent_min", c.exponent_min},
      {"exponent_max", c.exponent_max},
      {"mean_steps_per_eval", c.mean_steps_per_eval},
      {"reference_point", c.reference_point},
  };
}

VehicleConfig vehicle_config_from_json(const nlohmann::json& j) {
  VehicleConfig c;
  if (j.contains("track")) {
    const auto& t = j.at("track");
    c.track.straight_length = t.value("straight_length", c.track.straight_length);
    c.track.curve_radius = t.value("curve_radius", c.track.curve_radius);
    c.track.sample_spacing = t.value("sample_spacing", c.track.sample_spacing);
    c.track.speed_straight = t.value("speed_straight", c.track.speed_straight);
    c.track.speed_curve = t.value("speed_curve", c.track.speed_curve);
  }
  c.wheelbase = j.value("wheelbase", c.wheelbase);
  c.accel_min = j.value("accel_min", c.accel_min);
  c.accel_max = j.value("accel_max", c.accel_max);
  c.steer_rate_max = j.value("steer_rate_max", c.steer_rate_max);
  c.steer_max = j.value("steer_max", c.steer_max);
  c.sample_time = j.value("sample_time", c.sample_time);
  c.max_time = j.value("max_time", c.max_time);
  c.horizon_steps = j.value("horizon_steps", c.horizon_steps);
  c.substeps = j.value("substeps", c.substeps);
  c.lateral_bound = j.value("lateral_bound", c.lateral_bound);
  c.heading_weight = j.value("heading_weight", c.heading_weight);
  c.exponent_min = j.value("exponent_min", c.exponent_min);
  c.exponent_max = j.value("exponent_max", c.exponent_max);
  c.mean_steps_per_eval = j.value("mean_steps_per_eval", c.mean_steps_per_eval);
  c.reference_point = j.value("reference_point", c.reference_point);
  if (c.reference_point.size() != 3) throw UsageError("vehicle config: reference_point needs 3 entries");
  if (c.horizon_steps < 1 || c.substeps < 1 || !(c.sample_time > 0.0) || !(c.max_time > 0.0)) {
    throw UsageError("vehicle config: invalid timing");
  }
  if (!(c.track.straight_length > 0.0) || !(c.track.curve_radius > 0.0) || !(c.track.sample_spacing > 0.0) ||
      !(c.track.speed_straight > 0.0) || !(c.track.speed_curve > 0.0)) {
    throw UsageError("vehicle config: invalid track");
  }
  return c;
}

VehicleConfig load_vehicle_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open vehicle config " + path.string());
  return vehicle_config_from_json(nlohmann::json::parse(in));
}

Track::Track(const TrackConfig& config) : config_(config) {
  lap_ = 2.0 * config_.straight_length + 2.0 * kPi * config_.curve_radius;
  const auto n = static_cast<std::size_t>(std::ceil(lap_ / config_.sample_spacing));
  centerline_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = pose(lap_ * static_cast<double>(i) / static_cast<double>(n));
    centerline_.push_back({p.x, p.y});
  }
}

double Track::wrap(double s) const {
  s = std::fmod(s, lap_);
  return s < 0.0 ? s + lap_ : s;
}

// Segments in driving order: bottom straight (+x), right arc, top straight (-x), left arc.
TrackPose Track::pose(double s) const {
  const double ls = config_.straight_length;
  const double r = config_.curve_radius;
  const double arc = kPi * r;
  s = wrap(s);
  if (s < ls) return {s, 0.0, 0.0, 0.0};
  if (s < ls + arc) {
    const double phi = -kPi / 2.0 + (s - ls) / r;
    return {ls + r * std::cos(phi), r + r * std::sin(phi), wrap_angle(phi + kPi / 2.0), 1.0 / r};
  }
  if (s < 2.0 * ls + arc) return {ls - (s - ls - arc), 2.0 * r, kPi, 0.0};
  const double phi = kPi / 2.0 + (s - 2.0 * ls - arc) / r;
  return {r * std::cos(phi), r + r * std::sin(phi), wrap_angle(phi + kPi / 2.0), 1.0 / r};
}

double Track::speed_limit(double s) const {
  const double ls = config_.straight_length;
  const double arc = kPi * config_.curve_radius;
  s = wrap(s);
  const bool straight = s < ls || (s >= ls + arc && s < 2.0 * ls + arc);
  return straight ? config_.speed_straight : config_.speed_curve;
}

Projection Track::project(double x, double y) const {
  const double ls = config_.straight_length;
  const double r = config_.curve_radius;
  const double arc = kPi * r;
  double best_d2 = std::numeric_limits<double>::infinity();
  Projection best;
  auto consider = [&](double s) {
    const auto p = pose(s);
    const double dx = x - p.x;
    const double dy = y - p.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {wrap(s), -std::sin(p.heading) * dx + std::cos(p.heading) * dy};
    }
  };
  consider(std::clamp(x, 0.0, ls));
  consider(ls + arc + std::clamp(ls - x, 0.0, ls));
  double phi = std::atan2(y - r, x - ls);
  consider(ls + (std::clamp(phi, -kPi / 2.0, kPi / 2.0) + kPi / 2.0) * r);
  phi = std::atan2(y - r, x);
  if (phi < 0.0) phi += 2.0 * kPi;
  consider(2.0 * ls + arc + (std::clamp(phi, kPi / 2.0, 3.0 * kPi / 2.0) - kPi / 2.0) * r);
  return best;
}

ControllerWeights weights_from_exponents(std::span<const double> theta, double heading_weight) {
  if (theta.size() != 5) throw UsageError("vehicle: theta must have 5 exponents");
  return {std::pow(10.0, theta[0]), std::pow(10.0, theta[1]), std::pow(10.0, theta[2]),
          std::pow(10.0, theta[3]), std::pow(10.0, theta[4]), heading_weight};
}

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat62 = Eigen::Matrix<double, 6, 2>;

Vec5 to_vec(const VehicleState& s) { return (Vec5() << s.x, s.y, s.psi, s.v, s.delta).finished(); }

VehicleState from_vec(const Vec5& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

Vec5 rhs(const Vec5& s, double accel, double steer_rate, double wheelbase) {
  return (Vec5() << s[3] * std::cos(s[2]), s[3] * std::sin(s[2]), s[3] * std::tan(s[4]) / wheelbase, accel,
          steer_rate)
      .finished();
}

}  // namespace

ControlCommand controller_step(const VehicleState& state, const Track& track, const ControllerWeights& w,
                               const VehicleConfig& config) {
  const int horizon = config.horizon_steps;
  const double ts = config.sample_time;
  const double wb = config.wheelbase;

  // reference states along the track, heading unwrapped next to the vehicle's heading
  std::vector<Vec5> ref(static_cast<std::size_t>(horizon) + 1);
  double s = track.project(state.x, state.y).s;
  double psi_prev = 0.0;
  for (int j = 0; j <= horizon; ++j) {
    const auto p = track.pose(s);
    double psi = p.heading;
    if (j == 0) {
      psi = state.psi - wrap_angle(state.psi - p.heading);
    } else {
      psi = psi_prev + wrap_angle(p.heading - psi_prev);
    }
    psi_prev = psi;
    const double v = track.speed_limit(s);
    const double delta = std::clamp(std::atan(wb * p.curvature), -config.steer_max, config.steer_max);
    ref[static_cast<std::size_t>(j)] << p.x, p.y, psi, v, delta;
    s += v * ts;
  }

  auto stage_cost = [&](const Vec5& r) {
    Mat6 q = Mat6::Zero();
    q(0, 0) = w.position;
    q(1, 1) = w.position;
    q(2, 2) = w.heading;
    q(3, 3) = w.speed;
    const double tan_d = std::tan(r[4]);
    const double cos_d = std::cos(r[4]);
    Vec6 lat = Vec6::Zero();
    lat[3] = 2.0 * r[3] * tan_d / wb;
    lat[4] = r[3] * r[3] / (wb * cos_d * cos_d);
    lat[5] = r[3] * r[3] * tan_d / wb;
    q += w.lateral_accel * lat * lat.transpose();
    return q;
  };

  Mat62 b = Mat62::Zero();
  b(3, 0) = ts;
  b(4, 1) = ts;
  const Eigen::Matrix2d r_in = (Eigen::Matrix2d() << w.accel, 0.0, 0.0, w.steer_rate).finished();

  Mat6 p = stage_cost(ref.back());
  Eigen::Matrix<double, 2, 6> gain;
  for (int j = horizon - 1; j >= 0; --j) {
    const Vec5& r = ref[static_cast<std::size_t>(j)];
    Mat6 a = Mat6::Identity();
    a(0, 2) = -ts * r[3] * std::sin(r[2]);
    a(0, 3) = ts * std::cos(r[2]);
    a(1, 2) = ts * r[3] * std::cos(r[2]);
    a(1, 3) = ts * std::sin(r[2]);
    a(2, 3) = ts * std::tan(r[4]) / wb;
    a(2, 4) = ts * r[3] / (wb * std::cos(r[4]) * std::cos(r[4]));
    a.block<5, 1>(0, 5) = r + ts * rhs(r, 0.0, 0.0, wb) - ref[static_cast<std::size_t>(j) + 1];

    const Eigen::Matrix2d s_mat = r_in + b.transpose() * p * b;
    gain = s_mat.ldlt().solve(b.transpose() * p * a);
    p = stage_cost(r) + a.transpose() * p * (a - b * gain);
    p = 0.5 * (p + p.transpose()).eval();
  }

  Vec6 z;
  z.head<5>() = to_vec(state) - ref.front();
  z[5] = 1.0;
  const Eigen::Vector2d u = -gain * z;
  if (!gain.allFinite() || !u.allFinite()) return {0.0, 0.0, false};
  return {std::clamp(u[0], config.accel_min, config.accel_max),
          std::clamp(u[1], -config.steer_rate_max, config.steer_rate_max), true};
}

VehicleState plant_step(const VehicleState& state, const ControlCommand& u, const VehicleConfig& config) {
  const double h = config.sample_time / config.substeps;
  Vec5 s = to_vec(state);
  for (int i = 0; i < config.substeps; ++i) {
    const Vec5 k1 = rhs(s, u.accel, u.steer_rate, config.wheelbase);
    const Vec5 k2 = rhs(s + 0.5 * h * k1, u.accel, u.steer_rate, config.wheelbase);
    const Vec5 k3 = rhs(s + 0.5 * h * k2, u.accel, u.steer_rate, config.wheelbase);
    const Vec5 k4 = rhs(s + h * k3, u.accel, u.steer_rate, config.wheelbase);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s[3] = std::max(s[3], 0.0);
    s[4] = std::clamp(s[4], -config.steer_max, config.steer_max);
  }
  return from_vec(s);
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::completed: return "completed";
    case Outcome::lateral_bound: return "lateral_bound";
    case Outcome::timeout: return "timeout";
    case Outcome::numerical_failure: return "numerical_failure";
    case Outcome::controller_failure: return "controller_failure";
  }
  return "unknown";
}

void write_trajectory(const TrajectoryLog& log, std::ostream& out) {
  out << "t\tx\ty\tpsi\tv\tdelta\tv_des\te_lat\ta_lat\ta_long\n";
  for (std::size_t k = 0; k < log.size(); ++k) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", log.t[k], log.x[k], log.y[k], log.psi[k], log.v[k],
                       log.delta[k], log.v_des[k], log.e_lat[k], log.a_lat[k], log.a_long[k]);
  }
}

double objective_j1(const TrajectoryLog& log) {
  if (log.v.size() != log.v_des.size()) throw UsageError("objective_j1: ragged log");
  std::vector<double> err(log.v.size());
  for (std::size_t k = 0; k < err.size(); ++k) err[k] = log.v_des[k] - log.v[k];
  return rms(err);
}

double objective_j2(const TrajectoryLog& log) { return rms(log.e_lat); }

double objective_j3(const TrajectoryLog& log) {
  if (log.a_lat.size() != log.a_long.size()) throw UsageError("objective_j3: ragged log");
  std::vector<double> a(log.a_lat.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::hypot(log.a_lat[k], log.a_long[k]);
  return rms(a);
}

bool crash_predicate(const TrajectoryLog& log, double lateral_bound) {
  double worst = 0.0;
  for (double e : log.e_lat) worst = std::max(worst, std::abs(e));
  return worst <= lateral_bound && log.n_laps == 1;
}

SimulationResult simulate_vehicle(std::span<const double> theta, const VehicleConfig& config) {
  const BoxBounds bounds = BoxBounds::uniform(5, config.exponent_min, config.exponent_max);
  if (!bounds.contains(theta)) throw UsageError("simulate_vehicle: theta outside bounds");
  const Track track(config.track);
  const auto weights = weights_from_exponents(theta, config.heading_weight);
  const double ts = config.sample_time;
  const auto max_steps = static_cast<std::int64_t>(std::llround(config.max_time / ts));

  TrajectoryLog log;
  VehicleState state;
  double progress = 0.0;
  double s_prev = 0.0;
  for (std::int64_t k = 1; k <= max_steps; ++k) {
    const auto cmd = controller_step(state, track, weights, config);
    if (!cmd.ok) {
      log.outcome = Outcome::controller_failure;
      break;
    }
    const auto next = plant_step(state, cmd, config);
    if (!std::isfinite(next.x) || !std::isfinite(next.y) || !std::isfinite(next.psi) || !std::isfinite(next.v) ||
        !std::isfinite(next.delta)) {
      log.outcome = Outcome::numerical_failure;
      break;
    }
    const auto proj = track.project(next.x, next.y);
    double ds = proj.s - s_prev;
    if (ds > 0.5 * track.lap_length()) ds -= track.lap_length();
    if (ds < -0.5 * track.lap_length()) ds += track.lap_length();
    progress += ds;
    s_prev = proj.s;

    log.t.push_back(static_cast<double>(k) * ts);
    log.x.push_back(next.x);
    log.y.push_back(next.y);
    log.psi.push_back(next.psi);
    log.v.push_back(next.v);
    log.delta.push_back(next.delta);
    log.v_des.push_back(track.speed_limit(proj.s));
    log.e_lat.push_back(proj.lateral);
    log.a_lat.push_back(next.v * next.v * std::tan(next.delta) / config.wheelbase);
    log.a_long.push_back((next.v - state.v) / ts);
    state = next;

    if (std::abs(proj.lateral) > config.lateral_bound) {
      log.outcome = Outcome::lateral_bound;
      break;
    }
    if (progress >= track.lap_length()) {
      log.outcome = Outcome::completed;
      log.n_laps = 1;
      break;
    }
  }

  const auto steps = static_cast<std::int64_t>(log.size());
  ParameterVector th(theta.begin(), theta.end());
  if (log.outcome == Outcome::completed && crash_predicate(log, config.lateral_bound)) {
    return {Evaluation::success(std::move(th), {objective_j1(log), objective_j2(log), objective_j3(log)}, steps, 0.0),
            std::move(log)};
  }
  if (log.outcome == Outcome::numerical_failure || log.outcome == Outcome::controller_failure) {
    spdlog::debug("vehicle: {} at step {}", to_string(log.outcome), steps);
  }
  return {Evaluation::crash(std::move(th), steps, 0.0), std::move(log)};
}

BenchmarkProblem make_vehicle_problem(const VehicleConfig& config) {
  BenchmarkProblem p("vehicle", BoxBounds::uniform(5, config.exponent_min, config.exponent_max));
  p.num_objectives = 3;
  p.reference_point = config.reference_point;
  p.mean_steps_per_eval = config.mean_steps_per_eval;
  p.evaluate = [config](const ParameterVector& theta) { return simulate_vehicle(theta, config).evaluation; };
  return p;
}

PilotSummary run_pilot(const VehicleConfig& config, std::size_t samples, std::uint64_t seed) {
  const BoxBounds bounds = BoxBounds::uniform(5, config.exponent_min, config.exponent_max);
  Rng rng(seed);
  PilotSummary out;
  std::int64_t steps = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto e = simulate_vehicle(bounds.sample_uniform(rng), config).evaluation;
    steps += e.sim_steps;
    if (!e.crash_ok) continue;
    ++out.successes;
    if (out.reference_point.empty()) {
      out.reference_point = *e.objectives;
    } else {
      for (std::size_t m = 0; m < 3; ++m) {
        out.reference_point[m] = std::max(out.reference_point[m], (*e.objectives)[m]);
      }
    }
  }
  if (out.reference_point.empty()) throw UsageError("run_pilot: no successful pilot evaluation");
  out.mean_steps_per_eval = samples > 0 ? steps / static_cast<std::int64_t>(samples) : 0;
  return out;
}

}  // namespace ctune::vehicle
