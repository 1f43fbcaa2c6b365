#ifndef SLIPNAV_METRICS_HPP_
#define SLIPNAV_METRICS_HPP_

#include <iosfwd>
#include <vector>

#include "slipnav/nav_core.hpp"
#include "slipnav/pipeline.hpp"

namespace slipnav {

/// Reference trajectory sample (local ENU).
struct TruthRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct MetricsReport {
  double traversed_distance = 0.0;  // m, truth path length
  double traversal_time = 0.0;      // s
  int stop_count = 0;
  double stop_rate = 0.0;           // % of the traversal time spent stopped
  double enu_error_pct = 0.0;       // final 3-D error / distance * 100
  double final_error = 0.0;         // m, 3-D
  double median_horizontal_error = 0.0;  // m
  Vec3 rmse = Vec3::Zero();         // m, East/North/Up
  double velocity_rmse = 0.0;       // m/s, 3-D
  int matched = 0;
};

struct EvaluateOptions {
  double match_tolerance = 0.06;  // s, nearest-neighbour time alignment
  double stopped_speed = 0.01;    // m/s
  double min_stop_duration = 1.0; // s
};

/// Aligns each truth sample with the nearest estimate (within the tolerance)
/// and computes the accuracy and stop statistics. Stationary spans that begin
/// at the first truth sample (initial alignment) are not counted as stops.
MetricsReport evaluate(const std::vector<TraceRow>& estimate, const std::vector<TruthRow>& truth,
                       const EvaluateOptions& options = {});

void write_metrics(std::ostream& out, const MetricsReport& m);

}  // namespace slipnav

#endif  // SLIPNAV_METRICS_HPP_
