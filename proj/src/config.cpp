#include "slipnav/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "slipnav/csv.hpp"

namespace slipnav {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return parse_double(value, "config key '" + key + "'", 0);
  } catch (const ParseError&) {
    throw InputError("config key '" + key + "': invalid number '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InputError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw InputError("config key '" + key + "': expected a non-negative integer, got '" +
                     value + "'");
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

Field number(const std::string& key, std::function<double&(RunConfig&)> ref) {
  return {key,
          [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

Field flag(const std::string& key, std::function<bool&(RunConfig&)> ref) {
  return {key,
          [ref](const RunConfig& c) {
            return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
          },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = to_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"mode", [](const RunConfig& c) { return std::string(to_string(c.pipeline.mode)); },
                 [](RunConfig& c, const std::string& v) { c.pipeline.mode = parse_stop_mode(v); }});
    f.push_back(number("periodic_interval", [](RunConfig& c) -> double& { return c.pipeline.periodic_interval; }));
    f.push_back(number("window", [](RunConfig& c) -> double& { return c.pipeline.autonomy.window_duration; }));
    f.push_back(number("horizon", [](RunConfig& c) -> double& { return c.pipeline.autonomy.horizon; }));
    f.push_back(number("epsilon", [](RunConfig& c) -> double& { return c.pipeline.autonomy.epsilon; }));
    f.push_back(number("zupt_duration", [](RunConfig& c) -> double& { return c.pipeline.autonomy.zupt_duration; }));
    f.push_back(number("min_stop_interval", [](RunConfig& c) -> double& { return c.pipeline.autonomy.min_stop_interval; }));
    f.push_back(number("speed", [](RunConfig& c) -> double& { return c.pipeline.autonomy.forward_speed_cmd; }));
    f.push_back(number("sigma_multiplier", [](RunConfig& c) -> double& { return c.pipeline.autonomy.sigma_multiplier; }));
    f.push_back(number("zupt_timeout", [](RunConfig& c) -> double& { return c.pipeline.autonomy.zupt_timeout; }));

    f.push_back(number("gyro_noise_psd", [](RunConfig& c) -> double& { return c.pipeline.filter.gyro_noise_psd; }));
    f.push_back(number("accel_noise_psd", [](RunConfig& c) -> double& { return c.pipeline.filter.accel_noise_psd; }));
    f.push_back(number("accel_bias_rw_psd", [](RunConfig& c) -> double& { return c.pipeline.filter.accel_bias_rw_psd; }));
    f.push_back(number("gyro_bias_rw_psd", [](RunConfig& c) -> double& { return c.pipeline.filter.gyro_bias_rw_psd; }));
    f.push_back(number("R_odo", [](RunConfig& c) -> double& { return c.pipeline.filter.R_odo; }));
    f.push_back(number("R_odo_yaw", [](RunConfig& c) -> double& { return c.pipeline.filter.R_odo_yaw; }));
    f.push_back(number("R_nhc", [](RunConfig& c) -> double& { return c.pipeline.filter.R_nhc; }));
    f.push_back(number("R_zupt_v", [](RunConfig& c) -> double& { return c.pipeline.filter.R_zupt_v; }));
    f.push_back(number("R_zupt_g", [](RunConfig& c) -> double& { return c.pipeline.filter.R_zupt_g; }));
    f.push_back(number("beta_max", [](RunConfig& c) -> double& { return c.pipeline.filter.beta_max; }));
    f.push_back(number("gate_probability", [](RunConfig& c) -> double& { return c.pipeline.filter.gate_probability; }));
    f.push_back(number("odo_max_age", [](RunConfig& c) -> double& { return c.pipeline.filter.odo_max_age; }));
    f.push_back(number("init_att_sigma", [](RunConfig& c) -> double& { return c.pipeline.filter.init_att_sigma; }));
    f.push_back(number("init_vel_sigma", [](RunConfig& c) -> double& { return c.pipeline.filter.init_vel_sigma; }));
    f.push_back(number("init_pos_sigma", [](RunConfig& c) -> double& { return c.pipeline.filter.init_pos_sigma; }));
    f.push_back(number("init_accel_bias_sigma", [](RunConfig& c) -> double& { return c.pipeline.filter.init_accel_bias_sigma; }));
    f.push_back(number("init_gyro_bias_sigma", [](RunConfig& c) -> double& { return c.pipeline.filter.init_gyro_bias_sigma; }));

    f.push_back(number("wheel_radius", [](RunConfig& c) -> double& { return c.pipeline.vehicle.wheel_radius; }));
    f.push_back(number("track_width", [](RunConfig& c) -> double& { return c.pipeline.vehicle.track_width; }));
    f.push_back(number("lever_arm_x", [](RunConfig& c) -> double& { return c.pipeline.vehicle.lever_arm.x(); }));
    f.push_back(number("lever_arm_y", [](RunConfig& c) -> double& { return c.pipeline.vehicle.lever_arm.y(); }));
    f.push_back(number("lever_arm_z", [](RunConfig& c) -> double& { return c.pipeline.vehicle.lever_arm.z(); }));
    f.push_back(number("gravity", [](RunConfig& c) -> double& { return c.pipeline.vehicle.gravity_magnitude; }));
    f.push_back(flag("include_earth_rate", [](RunConfig& c) -> bool& { return c.pipeline.vehicle.include_earth_rate; }));
    f.push_back(number("earth_rate", [](RunConfig& c) -> double& { return c.pipeline.vehicle.earth_rate; }));
    f.push_back(number("latitude", [](RunConfig& c) -> double& { return c.pipeline.vehicle.latitude; }));

    f.push_back(number("gp_sigma2_rbf", [](RunConfig& c) -> double& { return c.pipeline.gp_init.sigma2_rbf; }));
    f.push_back(number("gp_ell", [](RunConfig& c) -> double& { return c.pipeline.gp_init.ell; }));
    f.push_back(number("gp_sigma2_b", [](RunConfig& c) -> double& { return c.pipeline.gp_init.sigma2_b; }));
    f.push_back(number("gp_sigma2_noise", [](RunConfig& c) -> double& { return c.pipeline.gp_init.sigma2_noise; }));

    f.push_back(number("stationarity_accel_var", [](RunConfig& c) -> double& { return c.pipeline.stationarity.accel_var; }));
    f.push_back(number("stationarity_gyro_var", [](RunConfig& c) -> double& { return c.pipeline.stationarity.gyro_var; }));
    f.push_back(number("stationarity_window", [](RunConfig& c) -> double& { return c.pipeline.stationarity_window; }));
    f.push_back(number("blind_odometry_noise", [](RunConfig& c) -> double& { return c.pipeline.blind_odometry_noise; }));
    f.push_back(number("slip_compensation_min", [](RunConfig& c) -> double& { return c.pipeline.slip_compensation_min; }));
    f.push_back(number("odometry_noise_prior", [](RunConfig& c) -> double& { return c.pipeline.odometry_noise_prior; }));
    f.push_back(number("stationary_wheel_speed", [](RunConfig& c) -> double& { return c.pipeline.stationary_wheel_speed; }));
    f.push_back(number("nhc_min_speed", [](RunConfig& c) -> double& { return c.pipeline.nhc_min_speed; }));
    f.push_back(number("forecast_yaw_var", [](RunConfig& c) -> double& { return c.pipeline.forecast_yaw_var; }));
    f.push_back(flag("forecast_from_last_stop", [](RunConfig& c) -> bool& { return c.pipeline.forecast_from_last_stop; }));
    f.push_back(flag("initial_alignment", [](RunConfig& c) -> bool& { return c.pipeline.initial_alignment; }));
    f.push_back(flag("slip_compensation", [](RunConfig& c) -> bool& { return c.pipeline.slip_compensation; }));

    f.push_back({"terrain", [](const RunConfig& c) { return c.sim.terrain; },
                 [](RunConfig& c, const std::string& v) { c.sim.terrain = v; }});
    f.push_back(number("distance", [](RunConfig& c) -> double& { return c.sim.distance; }));
    f.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.sim.seed); },
                 [](RunConfig& c, const std::string& v) {
                   c.sim.seed = to_u64("seed", v);
                   c.sim.sensor.seed = c.sim.seed;
                 }});
    f.push_back(number("sensor_gyro_noise_density", [](RunConfig& c) -> double& { return c.sim.sensor.gyro_noise_density; }));
    f.push_back(number("sensor_accel_noise_density", [](RunConfig& c) -> double& { return c.sim.sensor.accel_noise_density; }));
    f.push_back(number("sensor_gyro_bias_sigma", [](RunConfig& c) -> double& { return c.sim.sensor.gyro_bias_sigma; }));
    f.push_back(number("sensor_accel_bias_sigma", [](RunConfig& c) -> double& { return c.sim.sensor.accel_bias_sigma; }));
    f.push_back(number("sensor_gyro_bias_rw", [](RunConfig& c) -> double& { return c.sim.sensor.gyro_bias_rw; }));
    f.push_back(number("sensor_accel_bias_rw", [](RunConfig& c) -> double& { return c.sim.sensor.accel_bias_rw; }));
    f.push_back(number("sensor_vibration_accel", [](RunConfig& c) -> double& { return c.sim.sensor.vibration_accel; }));
    f.push_back(number("sensor_vibration_gyro", [](RunConfig& c) -> double& { return c.sim.sensor.vibration_gyro; }));
    f.push_back(number("sensor_encoder_resolution", [](RunConfig& c) -> double& { return c.sim.sensor.encoder_resolution; }));
    return f;
  }();
  return table;
}

}  // namespace

KeyValueMap parse_key_values(const std::string& text, const std::string& source) {
  KeyValueMap out;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, line_no, "expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    out[key] = value;
  }
  return out;
}

KeyValueMap read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

void write_key_value_file(const std::string& path, const KeyValueMap& values) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
  if (!out) throw InputError("write failed: " + path);
}

void apply_config(const KeyValueMap& values, RunConfig& config, bool ignore_unknown) {
  for (const auto& [key, value] : values) {
    bool known = false;
    for (const auto& f : fields()) {
      if (f.key == key) {
        f.set(config, value);
        known = true;
        break;
      }
    }
    if (!known && !ignore_unknown) {
      throw InputError("unknown config key '" + key + "'");
    }
  }
}

KeyValueMap config_to_map(const RunConfig& config) {
  KeyValueMap out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

}  // namespace slipnav
