#include <cmath>

#include <gtest/gtest.h>

#include "slipnav/sim.hpp"

namespace slipnav {
namespace {

TerrainProfile constant_slip(double s) {
  TerrainProfile t;
  t.name = "constant";
  SlipSegment seg;
  seg.length = 1000.0;
  seg.slip_mean = s;
  t.segments = {seg};
  return t;
}

// Path length reported by the encoders over a straight run.
struct Distances {
  double truth = 0.0;
  double encoder = 0.0;
};

Distances drive(double slip, double distance) {
  const VehicleParams params;
  RoverSim sim(straight_plan(distance), constant_slip(slip), SensorErrorModel::ideal(3), params);
  Distances d;
  double last_t = 0.0;
  while (!sim.finished()) {
    const SimStep s = sim.step(false);
    if (s.odo) {
      d.encoder += s.odo->omega_wheel.mean() * params.wheel_radius * (s.odo->t - last_t);
      last_t = s.odo->t;
    }
  }
  d.truth = sim.truth().distance;
  return d;
}

TEST(RngTest, FixedStream) {
  Rng a(9), b(9), c(10);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RoverSimTest, SameSeedSameStreams) {
  const DrivePlan plan = make_plan(40.0, 4);
  SensorErrorModel sensor;
  sensor.seed = 4;
  RoverSim a(plan, terrain_preset("rough"), sensor, VehicleParams{});
  RoverSim b(plan, terrain_preset("rough"), sensor, VehicleParams{});
  while (!a.finished()) {
    const SimStep x = a.step(false);
    const SimStep y = b.step(false);
    ASSERT_EQ(x.imu.f_ib_b, y.imu.f_ib_b);
    ASSERT_EQ(x.imu.omega_ib_b, y.imu.omega_ib_b);
    ASSERT_EQ(x.odo.has_value(), y.odo.has_value());
    if (x.odo) {
      ASSERT_EQ(x.odo->omega_wheel, y.odo->omega_wheel);
    }
  }
  EXPECT_TRUE(b.finished());
}

TEST(RoverSimTest, EncodersOverstateDistanceUnderSlip) {
  const Distances d = drive(0.3, 60.0);
  EXPECT_NEAR(d.encoder, d.truth / 0.7, 0.01 * d.truth / 0.7);
}

TEST(RoverSimTest, EncodersMatchDistanceWithoutSlip) {
  const Distances d = drive(0.0, 60.0);
  EXPECT_NEAR(d.encoder, d.truth, 0.005 * d.truth);
}

TEST(RoverSimTest, StopRequestHaltsVehicle) {
  RoverSim sim(straight_plan(100.0), constant_slip(0.1), SensorErrorModel::ideal(), VehicleParams{});
  for (int k = 0; k < 50 * 10; ++k) sim.step(false);
  EXPECT_GT(sim.truth().speed, 0.5);
  SimStep s;
  for (int k = 0; k < 50 * 5; ++k) s = sim.step(true);
  EXPECT_EQ(s.truth.speed, 0.0);
  EXPECT_EQ(s.truth.slip, 0.0);
  ASSERT_TRUE(s.odo.has_value() || sim.step(true).odo.has_value());
}

TEST(RoverSimTest, StandingImuReadsGravity) {
  DrivePlan plan = straight_plan(10.0);
  plan.initial_hold = 1e6;
  RoverSim sim(plan, constant_slip(0.0), SensorErrorModel::ideal(), VehicleParams{});
  const SimStep s = sim.step(false);
  EXPECT_NEAR(s.imu.f_ib_b.norm(), 9.8, 0.05);
  EXPECT_LT(s.imu.omega_ib_b.norm(), 1e-4);
}

TEST(TerrainPresets, OrderedBySlip) {
  const auto presets = terrain_presets();
  ASSERT_EQ(presets.size(), 4u);
  EXPECT_EQ(presets[0].name, "paved");
  EXPECT_EQ(presets[3].name, "rough");
  for (std::size_t i = 1; i < presets.size(); ++i) {
    EXPECT_LT(presets[i - 1].mean_slip(), presets[i].mean_slip());
  }
  EXPECT_THROW(terrain_preset("sand"), InputError);
}

TEST(TerrainPresets, SegmentsRepeat) {
  const TerrainProfile t = terrain_preset("gravel");
  double total = 0.0;
  for (const auto& s : t.segments) total += s.length;
  EXPECT_EQ(&t.segment_at(1.0), &t.segment_at(total + 1.0));
}

TEST(GenerateRun, HonoursStopWindows) {
  const SimRun run = generate_run(straight_plan(30.0), constant_slip(0.1), SensorErrorModel::ideal(),
                                  VehicleParams{}, {{20.0, 30.0}});
  ASSERT_FALSE(run.truth.empty());
  EXPECT_EQ(run.imu.size() + 1, run.truth.size());
  EXPECT_NEAR(static_cast<double>(run.odo.size()), run.imu.size() / 5.0, 1.0);
  bool halted = false;
  for (const auto& s : run.truth) {
    if (s.t > 25.0 && s.t < 30.0 && s.speed == 0.0) halted = true;
  }
  EXPECT_TRUE(halted);
}

TEST(SensorModel, Validation) {
  SensorErrorModel m;
  EXPECT_NO_THROW(m.validate());
  m.gyro_noise_density = -1.0;
  EXPECT_THROW(m.validate(), InputError);
}

}  // namespace
}  // namespace slipnav
