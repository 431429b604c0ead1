#include <doctest.h>

#include <cmath>
#include <random>

#include "pointing/model.hpp"
#include "pointing/reference_models.hpp"

using namespace pointing;

namespace {

ModelParams params600() { return {.k = 600.0, .d = 30.0, .r = 1e-5, .delta = {}}; }

}  // namespace

TEST_CASE("build_dynamics produces the forward-Euler matrices") {
  const double h = 0.002;
  const DynamicsMatrices dyn = build_dynamics(params600(), h);
  CHECK(dyn.A(0, 0) == 1.0);
  CHECK(dyn.A(0, 1) == h);
  CHECK(dyn.A(0, 2) == 0.0);
  CHECK(dyn.A(1, 0) == -h * 600.0);
  CHECK(dyn.A(1, 1) == 1.0 - h * 30.0);
  CHECK(dyn.A(1, 2) == 0.0);
  CHECK(dyn.A.row(2) == Eigen::RowVector3d(0, 0, 1));
  CHECK(dyn.A(1, 0) == doctest::Approx(-1.2).epsilon(1e-14));
  CHECK(dyn.A(1, 1) == doctest::Approx(0.94).epsilon(1e-14));
  CHECK(dyn.B == Eigen::Vector3d(0, h, 0));
  CHECK(dyn.stiffness() == doctest::Approx(600.0).epsilon(1e-14));
  CHECK(dyn.damping() == doctest::Approx(30.0).epsilon(1e-14));
}

TEST_CASE("build_dynamics accepts the zero-parameter double integrator") {
  const DynamicsMatrices dyn = build_dynamics({.k = 0, .d = 0, .r = 1e-5, .delta = {}}, 0.002);
  Eigen::Matrix3d expected;
  expected << 1, 0.002, 0, 0, 1, 0, 0, 0, 1;
  CHECK(dyn.A == expected);
}

TEST_CASE("build_dynamics rejects a degenerate step") {
  CHECK_THROWS_AS(build_dynamics(params600(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_dynamics(params600(), -0.002), std::invalid_argument);
}

TEST_CASE("augment_system block structure") {
  const AugmentedSystem sys = augment_system(build_dynamics(params600(), 0.002));
  CHECK(sys.A.row(3) == Eigen::RowVector4d(0, 0, 0, 0));
  CHECK(sys.A.col(3) == Eigen::Vector4d(0, 0, 0, 0));
  CHECK(sys.B == Eigen::Vector4d(0, 0.002, 0, 1));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector4d info(dist(rng), dist(rng), dist(rng), dist(rng));
    const double u = dist(rng);
    const Eigen::Vector4d next = sys.A * info + sys.B * u;
    // The fourth component stores the applied control.
    CHECK((sys.Iu * next)(0) == u);
    // The state block evolves by the plant matrices.
    const Eigen::Vector3d via_plant =
        sys.A.topLeftCorner<3, 3>() * (sys.Ix * info) + sys.B.head<3>() * u;
    CHECK((sys.Ix * next - via_plant).norm() == 0.0);
  }
}

TEST_CASE("build_cost: LQR2 schedules") {
  const CostSpec spec = build_cost(CostVariant::kLqr2, params600(), 500, 0.002);
  CHECK(spec.horizon == 500);
  REQUIRE(spec.q_active.size() == 500);
  REQUIRE(spec.r_schedule.size() == 499);
  for (auto active : spec.q_active) CHECK(active == 1);
  for (double r : spec.r_schedule) CHECK(r == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(spec.state_cost(123) == CostSpec::distance_block());
}

TEST_CASE("build_cost: LQR1 puts distance cost at the last step only") {
  const CostSpec spec = build_cost(CostVariant::kLqr1, params600(), 500, 0.002);
  for (std::size_t i = 0; i + 1 < 500; ++i) CHECK(spec.q_active[i] == 0);
  CHECK(spec.q_active.back() == 1);
  CHECK(spec.state_cost(0).isZero());
}

TEST_CASE("build_cost: LQR3 onset step and inflated pre-movement weights") {
  ModelParams params = params600();
  params.delta = 0.1;
  const CostSpec spec = build_cost(CostVariant::kLqr3, params, 500, 0.002, 100000.0);
  CHECK(spec.onset_step == 51);
  for (int n = 1; n < 51; ++n) CHECK(spec.q_active[static_cast<std::size_t>(n - 1)] == 0);
  for (int n = 51; n <= 500; ++n) CHECK(spec.q_active[static_cast<std::size_t>(n - 1)] == 1);
  // f(1) = c exactly, so R_1 = c * r / h^2.
  const double r_base = 1e-5 / (0.002 * 0.002);
  CHECK(spec.r_schedule[0] == 100000.0 * r_base);
  CHECK(spec.r_schedule[50] == r_base);  // step 51 is past the pre-movement range

  SUBCASE("onset-step rounding is nearest with ties toward the earlier step") {
    params.delta = 0.0031;  // 1.55 steps -> between t_2 and t_3, closer to t_3
    CHECK(build_cost(CostVariant::kLqr3, params, 500, 0.002).onset_step == 3);
    params.delta = 0.003;  // exactly between t_2 (0.002) and t_3 (0.004)
    CHECK(build_cost(CostVariant::kLqr3, params, 500, 0.002).onset_step == 2);
    params.delta = 10.0;  // beyond the horizon
    CHECK(build_cost(CostVariant::kLqr3, params, 500, 0.002).onset_step == 500);
    params.delta = 0.0;
    CHECK(build_cost(CostVariant::kLqr3, params, 500, 0.002).onset_step == 1);
  }

  SUBCASE("variant 3 without delta is rejected") {
    CHECK_THROWS_AS(build_cost(CostVariant::kLqr3, params600(), 500, 0.002),
                    std::invalid_argument);
  }
}

TEST_CASE("jerk_weight_f") {
  CHECK(jerk_weight_f(1, 51, 100000.0) == 100000.0);
  const double expected = (100000.0 - 1.0) * std::exp(1.0 / 50.0 - 1.0) + 1.0;
  CHECK(jerk_weight_f(50, 51, 100000.0) == expected);
  CHECK(expected == doctest::Approx(3.75e4).epsilon(0.01));
  CHECK_THROWS_AS(jerk_weight_f(51, 51, 100000.0), std::domain_error);
  CHECK_THROWS_AS(jerk_weight_f(0, 51, 100000.0), std::domain_error);

  SUBCASE("monotonically nonincreasing, always in (1, c]") {
    double previous = jerk_weight_f(1, 51, 100000.0);
    for (int n = 2; n <= 50; ++n) {
      const double value = jerk_weight_f(n, 51, 100000.0);
      CHECK(value <= previous);
      CHECK(value > 1.0);
      CHECK(value <= 100000.0);
      previous = value;
    }
  }

  SUBCASE("n_delta = 2 has f(1) = c") { CHECK(jerk_weight_f(1, 2, 1000.0) == 1000.0); }
}

TEST_CASE("initial_control") {
  CHECK(initial_control(params600(), 0.1, 0.0, 0.0) == doctest::Approx(60.0).epsilon(1e-15));
  CHECK(initial_control(params600(), 0.0, 0.0, 0.0) == 0.0);
  CHECK(initial_control(params600(), 0.1, 0.2, 1.5) == doctest::Approx(67.5).epsilon(1e-15));
}

namespace {

Trajectory constant_trajectory(int n, double position, double control, double h) {
  Trajectory traj;
  traj.step = h;
  traj.positions.assign(static_cast<std::size_t>(n), position);
  traj.controls.assign(static_cast<std::size_t>(n - 1), control);
  return traj;
}

}  // namespace

TEST_CASE("evaluate_cost") {
  const double h = 0.002;
  const CostSpec lqr2 = build_cost(CostVariant::kLqr2, params600(), 3, h);

  SUBCASE("stationary at the target costs nothing") {
    const Trajectory traj = constant_trajectory(3, 0.1, 60.0, h);
    CHECK(evaluate_cost(lqr2, traj, 0.1, 60.0) == 0.0);
  }

  SUBCASE("constant offset accumulates pure distance cost") {
    const Trajectory traj = constant_trajectory(3, 0.11, 60.0, h);
    CHECK(evaluate_cost(lqr2, traj, 0.1, 60.0) == doctest::Approx(3e-4).epsilon(1e-12));
  }

  SUBCASE("length mismatch is rejected") {
    const Trajectory traj = constant_trajectory(4, 0.1, 60.0, h);
    CHECK_THROWS_AS(evaluate_cost(lqr2, traj, 0.1, 60.0), std::invalid_argument);
    Trajectory missing = constant_trajectory(3, 0.1, 60.0, h);
    missing.controls.pop_back();
    CHECK_THROWS_AS(evaluate_cost(lqr2, missing, 0.1, 60.0), std::invalid_argument);
  }

  SUBCASE("translation invariance of the distance block") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Trajectory traj;
    traj.step = h;
    for (int i = 0; i < 3; ++i) traj.positions.push_back(dist(rng));
    for (int i = 0; i < 2; ++i) traj.controls.push_back(10.0 * dist(rng));
    const double base = evaluate_cost(lqr2, traj, 0.05, 1.0);
    Trajectory shifted = traj;
    const double offset = 3.7;
    for (double& p : shifted.positions) p += offset;
    const double moved = evaluate_cost(lqr2, shifted, 0.05 + offset, 1.0);
    CHECK(moved == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("distance block identity on random information vectors") {
  const Eigen::Matrix4d q = CostSpec::distance_block();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector4d info(dist(rng), dist(rng), dist(rng), dist(rng));
    const double via_matrix = info.dot(q * info);
    const double direct = (info(2) - info(0)) * (info(2) - info(0));
    CHECK(via_matrix == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("jerk-cost identity: R_n (u_n - u_prev)^2 = w_n ((u_n - u_prev)/h)^2") {
  const double h = 0.002;
  ModelParams params = params600();
  params.delta = 0.05;
  const CostSpec spec = build_cost(CostVariant::kLqr3, params, 100, h, 1000.0);
  const double du = 0.37;
  for (int n = 1; n <= 99; ++n) {
    const double weight = n < spec.onset_step
                              ? jerk_weight_f(n, spec.onset_step, 1000.0) * params.r
                              : params.r;
    const double lhs = spec.r_schedule[static_cast<std::size_t>(n - 1)] * du * du;
    const double rhs = weight * (du / h) * (du / h);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("rollout satisfies the state equation exactly") {
  const DynamicsMatrices dyn = build_dynamics(params600(), 0.002);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-20.0, 80.0);
  std::vector<double> controls(49);
  for (double& u : controls) u = dist(rng);
  const Eigen::Vector3d x1(0.01, -0.2, 0.1);
  const Trajectory traj = rollout(dyn, x1, controls);

  REQUIRE(traj.samples() == 50);
  Eigen::Vector3d x = x1;
  for (std::size_t i = 0; i + 1 < traj.samples(); ++i) {
    CHECK(traj.positions[i] == x(0));
    CHECK(traj.velocities[i] == x(1));
    x = dyn.A * x + dyn.B * controls[i];
  }
  CHECK(traj.positions.back() == x(0));

  SUBCASE("acceleration is consistent with the velocity update") {
    // v_{n+1} - v_n = h a_n by construction of the reconstruction.
    for (std::size_t i = 0; i + 1 < traj.samples(); ++i) {
      CHECK(traj.velocities[i + 1] - traj.velocities[i] ==
            doctest::Approx(dyn.h * traj.accelerations[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("degenerate horizons are rejected") {
  CHECK_THROWS_AS(build_cost(CostVariant::kLqr2, params600(), 1, 0.002),
                  std::invalid_argument);
  Trajectory traj;
  traj.step = 0.002;
  traj.positions = {0.0};
  CHECK_THROWS_AS(traj.validate(), std::invalid_argument);
}

TEST_CASE("TaskSpec validates the index of difficulty") {
  TaskSpec task;
  task.target_width = 0.01;
  task.initial_distance = 0.07;
  task.index_of_difficulty = 3.0;  // log2(8) = 3
  CHECK_NOTHROW(task.validate());
  task.index_of_difficulty = 3.001;
  CHECK_THROWS_AS(task.validate(), std::invalid_argument);
  task.index_of_difficulty = 0.0;  // unset is fine
  CHECK_NOTHROW(task.validate());
  task.target_width = 0.0;
  CHECK_THROWS_AS(task.validate(), std::invalid_argument);
}

TEST_CASE("ModelParams invariants") {
  CHECK_NOTHROW(params600().validate());
  ModelParams bad = params600();
  bad.r = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params600();
  bad.delta = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
