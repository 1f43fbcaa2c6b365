#include "slipnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "slipnav/csv.hpp"

namespace slipnav {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

MetricsReport evaluate(const std::vector<TraceRow>& estimate, const std::vector<TruthRow>& truth,
                       const EvaluateOptions& options) {
  if (estimate.empty() || truth.empty()) {
    throw InputError("evaluate: empty estimate or truth");
  }
  if (estimate.back().t < truth.front().t - options.match_tolerance ||
      truth.back().t < estimate.front().t - options.match_tolerance) {
    throw InputError("evaluate: estimate and truth time ranges do not overlap");
  }

  MetricsReport m;
  m.traversal_time = truth.back().t - truth.front().t;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    m.traversed_distance += (truth[i].p - truth[i - 1].p).norm();
  }

  // Stops from the reference speed.
  double stopped_time = 0.0;
  std::size_t i = 0;
  while (i < truth.size()) {
    if (truth[i].v.norm() >= options.stopped_speed) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < truth.size() && truth[j + 1].v.norm() < options.stopped_speed) ++j;
    const double span = truth[j].t - truth[i].t;
    if (i != 0 && span >= options.min_stop_duration) {
      ++m.stop_count;
      stopped_time += span;
    }
    i = j + 1;
  }
  m.stop_rate = m.traversal_time > 0.0 ? 100.0 * stopped_time / m.traversal_time : 0.0;

  // Nearest-neighbour alignment; both streams are time ordered.
  std::vector<double> horizontal;
  Vec3 sq = Vec3::Zero();
  double vel_sq = 0.0;
  Vec3 last_error = Vec3::Zero();
  std::size_t k = 0;
  for (const auto& tr : truth) {
    while (k + 1 < estimate.size() &&
           std::abs(estimate[k + 1].t - tr.t) <= std::abs(estimate[k].t - tr.t)) {
      ++k;
    }
    if (std::abs(estimate[k].t - tr.t) > options.match_tolerance) continue;
    const Vec3 e = estimate[k].p - tr.p;
    sq += e.cwiseAbs2();
    vel_sq += (estimate[k].v - tr.v).squaredNorm();
    horizontal.push_back(e.head<2>().norm());
    last_error = e;
    ++m.matched;
  }
  if (m.matched == 0) {
    throw InputError("evaluate: no estimate sample within the matching tolerance");
  }
  const double n = static_cast<double>(m.matched);
  m.rmse = (sq / n).cwiseSqrt();
  m.velocity_rmse = std::sqrt(vel_sq / n);
  m.median_horizontal_error = median(std::move(horizontal));
  m.final_error = last_error.norm();
  m.enu_error_pct =
      m.traversed_distance > 0.0 ? 100.0 * m.final_error / m.traversed_distance : 0.0;
  return m;
}

void write_metrics(std::ostream& out, const MetricsReport& m) {
  out << "traversed_distance_m=" << format_double(m.traversed_distance) << '\n'
      << "traversal_time_s=" << format_double(m.traversal_time) << '\n'
      << "stop_count=" << m.stop_count << '\n'
      << "stop_rate_pct=" << format_double(m.stop_rate) << '\n'
      << "enu_error_pct=" << format_double(m.enu_error_pct) << '\n'
      << "final_error_m=" << format_double(m.final_error) << '\n'
      << "median_horizontal_error_m=" << format_double(m.median_horizontal_error) << '\n'
      << "rmse_e_m=" << format_double(m.rmse.x()) << '\n'
      << "rmse_n_m=" << format_double(m.rmse.y()) << '\n'
      << "rmse_u_m=" << format_double(m.rmse.z()) << '\n'
      << "velocity_rmse_mps=" << format_double(m.velocity_rmse) << '\n'
      << "matched_samples=" << m.matched << '\n';
}

}  // namespace slipnav
