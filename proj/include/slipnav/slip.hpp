#ifndef SLIPNAV_SLIP_HPP_
#define SLIPNAV_SLIP_HPP_

#include <vector>

#include "slipnav/nav_core.hpp"

namespace slipnav {

inline constexpr double kSlipDeadband = 0.02;  // m/s

struct SlipRatio {
  double s = 0.0;
  bool full_skid = false;  // wheel stopped while the vehicle moves
};

/// Longitudinal slip ratio from vehicle speed `v_x` and wheel rate `omega`.
/// Driving: 1 - v/(r w); braking: r w / v - 1; clamped to [-1, 1].
SlipRatio slip_ratio(double v_x, double omega, double r,
                     double deadband = kSlipDeadband);

/// Sideslip angle atan2(v_y, v_x); zero when both are inside the deadband.
double slip_angle(double v_y, double v_x, double deadband = kSlipDeadband);

/// Slip ratio of one odometry tick, with r*omega taken from wheel_speed().
SlipRatio odometry_slip(double v_x, const WheelOdomSample& sample,
                        const VehicleParams& params,
                        double deadband = kSlipDeadband);

struct SlipSample {
  double t = 0.0;
  double s = 0.0;
  double beta = 0.0;
  bool full_skid = false;
};

/// Stop-free learning window [t0, t1] of slip samples.
struct SlipWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<SlipSample> samples;
  double mean_forward_speed = 0.0;  // m/s, filter estimate over the window

  std::vector<double> times() const;
  std::vector<double> values() const;
};

/// Accumulates one slip sample per odometry tick until the configured
/// learning duration is covered. Any stop inside the window discards it.
class SlipCollector {
 public:
  SlipCollector(double window_duration, double odo_rate);

  /// Number of samples that makes a complete window.
  int target_samples() const { return target_; }

  void reset();

  /// Adds the sample for one odometry tick. `moving` is false while the
  /// vehicle is stopped or commanded to stop; that restarts collection.
  /// Returns true once the window is complete.
  bool add(double t, const Vec3& body_velocity, const WheelOdomSample& odo,
           const VehicleParams& params, bool moving);

  bool ready() const { return static_cast<int>(buffer_.size()) >= target_; }
  int size() const { return static_cast<int>(buffer_.size()); }

  /// Mean forward speed over the samples collected so far.
  double mean_forward_speed() const;

  /// Hands out the completed window and starts a new one.
  SlipWindow take();

  int restarts() const { return restarts_; }

 private:
  int target_;
  std::vector<SlipSample> buffer_;
  double speed_sum_ = 0.0;
  int restarts_ = 0;
};

}  // namespace slipnav

#endif  // SLIPNAV_SLIP_HPP_
