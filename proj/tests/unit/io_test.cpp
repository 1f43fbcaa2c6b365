#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "slipnav/config.hpp"
#include "slipnav/csv.hpp"
#include "slipnav/run_log.hpp"
#include "slipnav/runner.hpp"
#include "test_support.hpp"

namespace slipnav {
namespace {

using testing::TempDir;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-20.0, 20.0));
    EXPECT_EQ(parse_double(format_double(x), "test", 1), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ParseDouble, RejectsGarbage) {
  EXPECT_THROW(parse_double("1.5x", "f", 1), ParseError);
  EXPECT_THROW(parse_double("", "f", 1), ParseError);
  EXPECT_EQ(parse_double(" 2.5 ", "f", 1), 2.5);
}

TEST(Csv, WriteThenRead) {
  TempDir dir("csv_rw");
  const std::string path = dir.file("a.csv");
  {
    CsvWriter w(path, {"t_s", "x"});
    w.row({0.0, 1.0 / 3.0});
    w.row({0.1, -2.5e-300});
    EXPECT_THROW(w.row({1.0}), InputError);
  }
  const CsvTable t = read_csv(path, {"t_s", "x"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], 1.0 / 3.0);
  EXPECT_EQ(t.rows[1][1], -2.5e-300);
  EXPECT_EQ(t.line_numbers[1], 3);
}

TEST(Csv, TruncatedLineNamesFileAndLine) {
  TempDir dir("csv_trunc");
  const std::string path = dir.file("imu.csv");
  write_text(path, "t_s,a,b\n0.0,1,2\n0.1,1\n");
  try {
    read_csv(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.file(), path);
    EXPECT_NE(std::string(e.what()).find("imu.csv:3"), std::string::npos);
  }
}

TEST(Csv, HeaderMismatchAndBadValues) {
  TempDir dir("csv_bad");
  const std::string path = dir.file("x.csv");
  write_text(path, "t_s,b\n0.0,1\n");
  EXPECT_THROW(read_csv(path, {"t_s", "a"}), ParseError);
  write_text(path, "t_s,b\n0.0,nan\n");
  EXPECT_THROW(read_csv(path), ParseError);
  write_text(path, "");
  EXPECT_THROW(read_csv(path), ParseError);
  EXPECT_THROW(read_csv(dir.file("missing.csv")), InputError);
}

TEST(KeyValues, ParsesCommentsAndBlanks) {
  const KeyValueMap m = parse_key_values("# header\n a = 1 \n\nb=two # note\n", "cfg");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("a"), "1");
  EXPECT_EQ(m.at("b"), "two");
  try {
    parse_key_values("a=1\nnonsense\n", "cfg");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.file(), "cfg");
  }
}

TEST(Config, RoundTrip) {
  RunConfig a;
  a.pipeline.mode = StopMode::kPeriodic;
  a.pipeline.autonomy.epsilon = 2.0 / 3.0;
  a.pipeline.filter.R_odo = 3.7e-5;
  a.pipeline.slip_compensation = false;
  a.sim.terrain = "gravel";
  a.sim.seed = 123456789012345ULL;
  const KeyValueMap m = config_to_map(a);
  EXPECT_EQ(m.size(), config_keys().size());

  RunConfig b;
  apply_config(m, b);
  EXPECT_EQ(config_to_map(b), m);
  EXPECT_EQ(b.pipeline.mode, StopMode::kPeriodic);
  EXPECT_EQ(b.pipeline.autonomy.epsilon, 2.0 / 3.0);
  EXPECT_EQ(b.sim.seed, 123456789012345ULL);

  TempDir dir("config_rt");
  write_key_value_file(dir.file("run.cfg"), m);
  EXPECT_EQ(read_key_value_file(dir.file("run.cfg")), m);
}

TEST(Config, RejectsUnknownAndMalformed) {
  RunConfig c;
  EXPECT_THROW(apply_config({{"no_such_key", "1"}}, c), InputError);
  EXPECT_NO_THROW(apply_config({{"no_such_key", "1"}}, c, true));
  EXPECT_THROW(apply_config({{"epsilon", "three"}}, c), InputError);
  EXPECT_THROW(apply_config({{"mode", "sometimes"}}, c), InputError);
  EXPECT_THROW(apply_config({{"seed", "-4"}}, c), InputError);
}

RunLog small_log() {
  RunConfig cfg;
  cfg.sim.terrain = "gravel";
  cfg.sim.distance = 12.0;
  cfg.sim.seed = 8;
  cfg.pipeline.mode = StopMode::kNone;
  return simulate_run(cfg, true).log;
}

TEST(RunLogTest, RoundTripIsExact) {
  const RunLog log = small_log();
  TempDir dir("runlog_rt");
  write_run_log(dir.str(), log);
  const RunLog back = read_run_log(dir.str());
  ASSERT_EQ(back.imu.size(), log.imu.size());
  ASSERT_EQ(back.odo.size(), log.odo.size());
  ASSERT_EQ(back.truth.size(), log.truth.size());
  for (std::size_t i = 0; i < log.imu.size(); ++i) {
    ASSERT_EQ(back.imu[i].t, log.imu[i].t);
    ASSERT_EQ(back.imu[i].f_ib_b, log.imu[i].f_ib_b);
    ASSERT_EQ(back.imu[i].omega_ib_b, log.imu[i].omega_ib_b);
  }
  for (std::size_t i = 0; i < log.odo.size(); ++i) {
    ASSERT_EQ(back.odo[i].omega_wheel, log.odo[i].omega_wheel);
  }
  EXPECT_EQ(back.initial.C_b_n, log.initial.C_b_n);
  EXPECT_EQ(back.imu_rate, log.imu_rate);
  EXPECT_EQ(back.meta, log.meta);
}

TEST(RunLogTest, NonIncreasingTimestampNamesLine) {
  RunLog log = small_log();
  log.odo[4].t = log.odo[3].t;
  TempDir dir("runlog_ts");
  write_run_log(dir.str(), log);
  try {
    read_run_log(dir.str());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(e.file().find("odo.csv"), std::string::npos);
    EXPECT_EQ(e.line(), 6);  // header plus five rows
  }
}

TEST(RunLogTest, RateMismatchRejected) {
  RunLog log = small_log();
  log.imu_rate = 100.0;
  TempDir dir("runlog_rate");
  write_run_log(dir.str(), log);
  EXPECT_THROW(read_run_log(dir.str()), InputError);
}

TEST(RunLogTest, TraceRoundTrip) {
  std::vector<TraceRow> trace = {{0.0, Vec3(1, 2, 3), Vec3(0.1, 0.2, 0.3), 0.5},
                                 {0.02, Vec3(1.5, 2, 3), Vec3(0.1, 0.2, 0.3), 0.51}};
  TempDir dir("trace_rt");
  write_trace(dir.file("trace.csv"), trace);
  const auto back = read_trace(dir.file("trace.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].p, trace[1].p);
  EXPECT_EQ(back[1].sigma_h, 0.51);
}

TEST(RunLogTest, ForecastRecordsHaveOneRowEach) {
  ForecastRecord a;
  a.t = 15.0;
  a.stop_time = 42.0;
  ForecastRecord b;
  b.t = 30.0;
  b.failed = true;
  TempDir dir("records");
  write_forecast_records(dir.file("forecasts.csv"), {a, b});
  std::ifstream in(dir.file("forecasts.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);
}

}  // namespace
}  // namespace slipnav
