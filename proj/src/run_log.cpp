#include "slipnav/run_log.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "slipnav/csv.hpp"

namespace slipnav {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) {
    if (!out.empty()) out += ',';
    out += format_double(x);
  }
  return out;
}

std::vector<double> split_numbers(const std::string& text, const std::string& file,
                                  std::size_t expected) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_double(std::string_view(text).substr(start, end - start), file, 0));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected) {
    throw InputError(file + ": expected " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

const std::string& require(const KeyValueMap& meta, const std::string& key,
                           const std::string& file) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw InputError(file + ": missing key '" + key + "'");
  return it->second;
}

void check_increasing(const CsvTable& table, const std::string& file) {
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (!(table.rows[i][0] > table.rows[i - 1][0])) {
      throw ParseError(file, table.line_numbers[i], "timestamps must be strictly increasing");
    }
  }
}

void check_rate(const CsvTable& table, double declared, const std::string& file) {
  if (table.rows.size() < 2) return;
  const double span = table.rows.back()[0] - table.rows.front()[0];
  const double rate = static_cast<double>(table.rows.size() - 1) / span;
  if (std::abs(rate - declared) > 0.01 * declared) {
    throw InputError(file + ": data rate " + format_double(rate) +
                     " Hz differs from the declared " + format_double(declared) + " Hz");
  }
}

}  // namespace

void write_run_log(const std::string& dir, const RunLog& log) {
  fs::create_directories(dir);
  {
    CsvWriter w((fs::path(dir) / "imu.csv").string(), kImuColumns);
    for (const auto& s : log.imu) {
      w.row({s.t, s.omega_ib_b.x(), s.omega_ib_b.y(), s.omega_ib_b.z(), s.f_ib_b.x(),
             s.f_ib_b.y(), s.f_ib_b.z()});
    }
  }
  {
    CsvWriter w((fs::path(dir) / "odo.csv").string(), kOdoColumns);
    for (const auto& s : log.odo) {
      w.row({s.t, s.omega_wheel(0), s.omega_wheel(1), s.omega_wheel(2), s.omega_wheel(3)});
    }
  }
  {
    CsvWriter w((fs::path(dir) / "truth.csv").string(), kTruthColumns);
    for (const auto& s : log.truth) {
      w.row({s.t, s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z()});
    }
  }
  KeyValueMap meta = log.meta;
  meta["t0"] = format_double(log.t0);
  meta["imu_rate"] = format_double(log.imu_rate);
  meta["odo_rate"] = format_double(log.odo_rate);
  const Mat3& C = log.initial.C_b_n;
  meta["initial_attitude"] = join({C(0, 0), C(0, 1), C(0, 2), C(1, 0), C(1, 1), C(1, 2),
                                   C(2, 0), C(2, 1), C(2, 2)});
  meta["initial_velocity"] =
      join({log.initial.v_eb_n.x(), log.initial.v_eb_n.y(), log.initial.v_eb_n.z()});
  meta["initial_position"] =
      join({log.initial.p_b.x(), log.initial.p_b.y(), log.initial.p_b.z()});
  write_key_value_file((fs::path(dir) / "meta.txt").string(), meta);
}

RunLog read_run_log(const std::string& dir) {
  RunLog log;
  const std::string meta_path = (fs::path(dir) / "meta.txt").string();
  log.meta = read_key_value_file(meta_path);
  log.t0 = parse_double(require(log.meta, "t0", meta_path), meta_path, 0);
  log.imu_rate = parse_double(require(log.meta, "imu_rate", meta_path), meta_path, 0);
  log.odo_rate = parse_double(require(log.meta, "odo_rate", meta_path), meta_path, 0);
  if (!(log.imu_rate > 0.0) || !(log.odo_rate > 0.0)) {
    throw InputError(meta_path + ": rates must be positive");
  }
  const auto a = split_numbers(require(log.meta, "initial_attitude", meta_path), meta_path, 9);
  log.initial.C_b_n << a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8];
  const auto v = split_numbers(require(log.meta, "initial_velocity", meta_path), meta_path, 3);
  log.initial.v_eb_n << v[0], v[1], v[2];
  const auto p = split_numbers(require(log.meta, "initial_position", meta_path), meta_path, 3);
  log.initial.p_b << p[0], p[1], p[2];
  if ((log.initial.C_b_n * log.initial.C_b_n.transpose() - Mat3::Identity()).norm() > 1e-6) {
    throw InputError(meta_path + ": initial_attitude is not a rotation matrix");
  }
  for (const char* key : {"t0", "imu_rate", "odo_rate", "initial_attitude", "initial_velocity",
                          "initial_position"}) {
    log.meta.erase(key);
  }

  const std::string imu_path = (fs::path(dir) / "imu.csv").string();
  const CsvTable imu = read_csv(imu_path, kImuColumns);
  check_increasing(imu, imu_path);
  check_rate(imu, log.imu_rate, imu_path);
  for (const auto& r : imu.rows) {
    log.imu.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }

  const std::string odo_path = (fs::path(dir) / "odo.csv").string();
  const CsvTable odo = read_csv(odo_path, kOdoColumns);
  check_increasing(odo, odo_path);
  check_rate(odo, log.odo_rate, odo_path);
  for (const auto& r : odo.rows) {
    log.odo.push_back({r[0], Vec4(r[1], r[2], r[3], r[4])});
  }

  log.truth = read_truth((fs::path(dir) / "truth.csv").string());
  if (!log.imu.empty() && !(log.imu.front().t > log.t0)) {
    throw InputError(imu_path + ": first sample must follow t0");
  }
  return log;
}

std::vector<TruthRow> read_truth(const std::string& path) {
  const CsvTable table = read_csv(path, kTruthColumns);
  check_increasing(table, path);
  std::vector<TruthRow> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    out.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  return out;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
  CsvWriter w(path, kTraceColumns);
  for (const auto& s : trace) {
    w.row({s.t, s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z(), s.sigma_h});
  }
}

std::vector<TraceRow> read_trace(const std::string& path) {
  const CsvTable table = read_csv(path, kTraceColumns);
  check_increasing(table, path);
  std::vector<TraceRow> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    out.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6]), r[7]});
  }
  return out;
}

void write_decisions(const std::string& path, const std::vector<Decision>& decisions) {
  CsvWriter w(path, {"t_s", "mode", "predicted_stop_time_s", "epsilon_m",
                     "sigma_h_at_horizon_m", "fallback"});
  for (const auto& d : decisions) {
    w.text_row({format_double(d.t), to_string(d.mode),
                d.predicted_stop_time ? format_double(*d.predicted_stop_time) : "",
                format_double(d.epsilon), format_double(d.sigma_h_at_horizon),
                d.fallback ? "1" : "0"});
  }
}

void write_forecast_records(const std::string& path, const std::vector<ForecastRecord>& records) {
  CsvWriter w(path, {"t_s", "mu_vel_mps", "sigma2_rbf", "ell_s", "sigma2_b", "sigma2_noise",
                     "optimizer_fallback", "stop_time_s", "sigma_h_start_m", "sigma_h_end_m",
                     "failed"});
  for (const auto& r : records) {
    w.text_row({format_double(r.t), format_double(r.mu_vel), format_double(r.params.sigma2_rbf),
                format_double(r.params.ell), format_double(r.params.sigma2_b),
                format_double(r.params.sigma2_noise), r.optimizer_fallback ? "1" : "0",
                r.stop_time ? format_double(*r.stop_time) : "", format_double(r.sigma_h_start),
                format_double(r.sigma_h_end), r.failed ? "1" : "0"});
  }
}

void write_forecast_curve(const std::string& path, const ForecastResult& result) {
  CsvWriter w(path, {"t_s", "sigma_h_m"});
  for (Eigen::Index k = 0; k < result.t.size(); ++k) {
    w.row({result.t(k), result.sigma_h(k)});
  }
}

}  // namespace slipnav
