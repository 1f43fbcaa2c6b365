#ifndef SLIPNAV_SIM_HPP_
#define SLIPNAV_SIM_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slipnav/nav_core.hpp"

namespace slipnav {

/// Seeded generator with a fixed algorithm: mt19937_64 bits, 53-bit uniforms
/// and Box-Muller normals, so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();   // N(0, 1)
  Vec3 normal3() { return {normal(), normal(), normal()}; }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct SlipSegment {
  double length = 50.0;            // m
  double slip_mean = 0.0;
  double slip_std = 0.0;
  double slip_impulse_rate = 0.0;  // events per minute
  double slope = 0.0;              // rad, nose-up positive
};

struct TerrainProfile {
  std::string name;
  std::vector<SlipSegment> segments;  // repeated cyclically along the route
  double slip_tau = 1.5;              // s, correlation time of the base slip
  double impulse_min = 0.25;
  double impulse_max = 0.6;
  double impulse_duration_min = 1.0;  // s
  double impulse_duration_max = 3.0;  // s

  void validate() const;
  const SlipSegment& segment_at(double distance) const;
  double mean_slip() const;  // length-weighted
};

/// paved, unpaved, gravel, rough (in that order).
std::vector<TerrainProfile> terrain_presets();
TerrainProfile terrain_preset(const std::string& name);

struct SensorErrorModel {
  double gyro_noise_density = 3.5e-5;   // rad/s/sqrt(Hz)
  double accel_noise_density = 1.4e-4;  // m/s^2/sqrt(Hz)
  double gyro_bias_sigma = 1.0e-4;      // rad/s, turn-on
  double accel_bias_sigma = 2.0e-3;     // m/s^2, turn-on
  double gyro_bias_rw = 1.0e-6;         // rad/s/sqrt(s)
  double accel_bias_rw = 1.0e-5;        // m/s^2/sqrt(s)
  Vec3 gyro_bias_fixed = Vec3::Zero();  // added to the drawn turn-on bias
  Vec3 accel_bias_fixed = Vec3::Zero();
  double vibration_accel = 0.3;        // m/s^2 amplitude at full speed
  double vibration_gyro = 0.01;        // rad/s amplitude at full speed
  double encoder_resolution = 2.0 * 3.14159265358979323846 / 4096.0;  // rad/tick
  std::uint64_t seed = 1;

  void validate() const;
  /// Everything zeroed except the seed and a fine encoder resolution.
  static SensorErrorModel ideal(std::uint64_t seed = 1);
};

struct DrivePlan {
  std::vector<Eigen::Vector2d> waypoints;  // local East/North, m
  double speed = 0.8;          // m/s
  double distance = 100.0;     // m, run ends once this much path is driven
  double max_accel = 0.5;      // m/s^2
  double max_yaw_rate = 0.3;   // rad/s
  double heading_gain = 1.0;   // 1/s
  double pitch_tau = 1.0;      // s
  double initial_hold = 5.0;   // s stationary before the first drive command

  void validate() const;
};

/// Meandering route: legs of 20 to 40 m with heading changes of at most 60 deg.
DrivePlan make_plan(double distance, std::uint64_t seed, double speed = 0.8);

/// Straight route along East.
DrivePlan straight_plan(double distance, double speed = 0.8);

struct TruthSample {
  double t = 0.0;
  NavState nav;
  double speed = 0.0;
  double slip = 0.0;
  double distance = 0.0;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
};

struct SimStep {
  TruthSample truth;
  ImuSample imu;
  std::optional<WheelOdomSample> odo;
};

/// Incremental generator: one call per IMU period. Stop requests are honored
/// by decelerating to zero; slip is zero while stopped.
class RoverSim {
 public:
  RoverSim(const DrivePlan& plan, const TerrainProfile& terrain,
           const SensorErrorModel& errors, const VehicleParams& params,
           double imu_rate = 50.0, int odo_every = 5);

  SimStep step(bool stop_requested);

  /// True once the planned distance has been driven.
  bool finished() const { return truth_.distance >= plan_.distance; }
  const TruthSample& truth() const { return truth_; }
  const NavState& initial_state() const { return initial_; }
  double dt() const { return dt_; }
  int odo_every() const { return odo_every_; }

 private:
  double update_slip(bool moving);

  DrivePlan plan_;
  TerrainProfile terrain_;
  SensorErrorModel errors_;
  VehicleParams params_;
  double dt_;
  int odo_every_;
  Rng rng_;
  NavState initial_;
  TruthSample truth_;
  double heading_;
  double pitch_ = 0.0;
  std::size_t waypoint_ = 1;
  long k_ = 0;
  double base_slip_;
  double impulse_left_ = 0.0;
  double impulse_duration_ = 0.0;
  double impulse_amp_ = 0.0;
  Vec4 wheel_angle_ = Vec4::Zero();
  Vec4 wheel_rate_ = Vec4::Zero();
  Eigen::Matrix<long long, 4, 1> last_ticks_ = Eigen::Matrix<long long, 4, 1>::Zero();
  double vib_phase_a_;
  double vib_phase_g_;
};

struct SimRun {
  NavState initial;
  std::vector<TruthSample> truth;  // one per IMU sample (plus t = 0)
  std::vector<ImuSample> imu;
  std::vector<WheelOdomSample> odo;
};

struct StopWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// Open-loop run following the plan with the given stop windows.
SimRun generate_run(const DrivePlan& plan, const TerrainProfile& terrain,
                    const SensorErrorModel& errors, const VehicleParams& params,
                    const std::vector<StopWindow>& stops = {});

}  // namespace slipnav

#endif  // SLIPNAV_SIM_HPP_
