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

#ifndef CTUNE_VEHICLE_HPP
#define CTUNE_VEHICLE_HPP

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctune/core.hpp"
#include "ctune/problem.hpp"

namespace ctune::vehicle {

struct TrackConfig {
  double straight_length = 200.0;
  double curve_radius = 30.0;
  double sample_spacing = 1.0;
  double speed_straight = 15.0;
  double speed_curve = 8.0;
};

struct VehicleConfig {
  TrackConfig track;
  double wheelbase = 2.7;
  double accel_min = -4.0;
  double accel_max = 3.0;
  double steer_rate_max = 0.5;
  double steer_max = 0.5;
  double sample_time = 0.05;
  double max_time = 120.0;
  int horizon_steps = 40;
  /// RK4 substeps per sample period.
  int substeps = 2;
  double lateral_bound = 1.5;
  double heading_weight = 1.0;
  double exponent_min = -3.0;
  double exponent_max = 4.0;
  /// Mean simulation steps per evaluation of the 200-sample pilot run (seed 2026).
  std::int64_t mean_steps_per_eval = 827;
  /// HV reference point (J1, J2, J3): componentwise worst success of the same pilot run.
  std::vector<double> reference_point{7.522318210102551, 0.787537937061712, 2.4354582931288147};
};

nlohmann::json to_json(const VehicleConfig& c);
VehicleConfig vehicle_config_from_json(const nlohmann::json& j);
VehicleConfig load_vehicle_config(const std::filesystem::path& path);

struct TrackPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double curvature = 0.0;
};

struct Projection {
  double s = 0.0;
  /// Signed lateral offset, positive to the left of the driving direction.
  double lateral = 0.0;
};

/// Closed rounded-rectangle track driven counter-clockwise: two straights joined by semicircles.
class Track {
public:
  explicit Track(const TrackConfig& config);

  double lap_length() const { return lap_; }
  /// Arc length wrapped into [0, lap).
  double wrap(double s) const;
  TrackPose pose(double s) const;
  double speed_limit(double s) const;
  Projection project(double x, double y) const;
  /// Arc-length-parameterized centerline samples at the configured spacing.
  const std::vector<std::array<double, 2>>& centerline() const { return centerline_; }

private:
  TrackConfig config_;
  double lap_;
  std::vector<std::array<double, 2>> centerline_;
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;
  double delta = 0.0;
};

struct ControllerWeights {
  double position = 1.0;
  double lateral_accel = 1.0;
  double accel = 1.0;
  double steer_rate = 1.0;
  double speed = 1.0;
  double heading = 1.0;
};

/// theta = (log10 position, log10 lateral accel, log10 accel, log10 steer rate, log10 speed).
ControllerWeights weights_from_exponents(std::span<const double> theta, double heading_weight);

struct ControlCommand {
  double accel = 0.0;
  double steer_rate = 0.0;
  /// False when the Riccati recursion produced non-finite gains; the command is then zero.
  bool ok = true;
};

/// One receding-horizon LQ step: linearizes the bicycle about the track reference ahead of the
/// vehicle, solves the finite-horizon Riccati recursion, returns the clipped first input.
ControlCommand controller_step(const VehicleState& state, const Track& track, const ControllerWeights& weights,
                               const VehicleConfig& config);

/// Advances the plant one sample period with the input held.
VehicleState plant_step(const VehicleState& state, const ControlCommand& u, const VehicleConfig& config);

enum class Outcome { completed, lateral_bound, timeout, numerical_failure, controller_failure };

std::string to_string(Outcome outcome);

struct TrajectoryLog {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> psi;
  std::vector<double> v;
  std::vector<double> delta;
  std::vector<double> v_des;
  std::vector<double> e_lat;
  std::vector<double> a_lat;
  std::vector<double> a_long;
  int n_laps = 0;
  Outcome outcome = Outcome::timeout;

  std::size_t size() const { return t.size(); }
  bool operator==(const TrajectoryLog&) const = default;
};

void write_trajectory(const TrajectoryLog& log, std::ostream& out);

double objective_j1(const TrajectoryLog& log);
double objective_j2(const TrajectoryLog& log);
double objective_j3(const TrajectoryLog& log);
bool crash_predicate(const TrajectoryLog& log, double lateral_bound = 1.5);

struct SimulationResult {
  Evaluation evaluation;
  TrajectoryLog log;
};

SimulationResult simulate_vehicle(std::span<const double> theta, const VehicleConfig& config);

BenchmarkProblem make_vehicle_problem(const VehicleConfig& config = {});

struct PilotSummary {
  /// Componentwise worst successful objectives.
  std::vector<double> reference_point;
  std::int64_t mean_steps_per_eval = 0;
  std::size_t successes = 0;
};

/// Uniform random pilot run used to freeze the reporting reference point.
PilotSummary run_pilot(const VehicleConfig& config, std::size_t samples, std::uint64_t seed);

}  // namespace ctune::vehicle

#endif  // CTUNE_VEHICLE_HPP
