#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dockpilot/geometry.hpp"

using namespace dockpilot;
constexpr double pi = std::numbers::pi;

namespace {

// independent homogeneous-matrix oracle
using M3 = std::array<double, 9>;
M3 mat(double x, double y, double t) {
  return {std::cos(t), -std::sin(t), x, std::sin(t), std::cos(t), y, 0, 0, 1};
}
M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return c;
}
Pose2 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-10.0, 10.0), a(-4.0, 4.0);
  return {u(rng), u(rng), a(rng)};
}

}  // namespace

TEST_CASE("normalize_angle wraps into [-pi, pi)") {
  CHECK(normalize_angle(0.0) == 0.0);
  CHECK(normalize_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(normalize_angle(-pi) == -pi);
  CHECK(normalize_angle(pi) == -pi);
  CHECK_THROWS_AS(normalize_angle(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(normalize_angle(INFINITY), std::invalid_argument);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const double t = u(rng), w = normalize_angle(t);
    CHECK(w >= -pi);
    CHECK(w < pi);
    const double k = (t - w) / (2 * pi);
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
}

TEST_CASE("compose examples") {
  SUBCASE("identity") {
    const Pose2 r = compose(Pose2::identity(), {2, 3, 0.5});
    CHECK(r.x() == 2);
    CHECK(r.y() == 3);
    CHECK(r.theta() == 0.5);
  }
  SUBCASE("translations chain") {
    const Pose2 r = compose({1, 0, 0}, {2, 0, 0});
    CHECK(r.x() == 3);
    CHECK(r.y() == 0);
  }
  SUBCASE("rotated frame, matrix oracle") {
    const Pose2 r = compose({0, 0, pi / 2}, {2, 0, 0});
    const M3 m = mul(mat(0, 0, pi / 2), mat(2, 0, 0));
    CHECK(std::abs(r.x() - m[2]) < 1e-12);
    CHECK(std::abs(r.y() - m[5]) < 1e-12);
    CHECK(std::abs(r.y() - 2.0) < 1e-12);
    CHECK(std::abs(r.theta() - pi / 2) < 1e-12);
  }
}

TEST_CASE("inverse examples") {
  const Pose2 i = inverse(Pose2::identity());
  CHECK(i.x() == 0);
  CHECK(i.y() == 0);
  CHECK(i.theta() == 0);
  const Pose2 a = inverse({1, 0, 0});
  CHECK(a.x() == -1);
  CHECK(std::abs(a.y()) < 1e-15);
  const Pose2 b = inverse({0, 2, pi / 2});
  CHECK(std::abs(b.x() + 2) < 1e-12);
  CHECK(std::abs(b.y()) < 1e-12);
  CHECK(std::abs(b.theta() + pi / 2) < 1e-12);
}

TEST_CASE("relative_pose and apply_relative examples") {
  Pose2 r = relative_pose({1, 0, 0}, {3, 0, 0});
  CHECK(std::abs(r.x() - 2) < 1e-12);
  CHECK(pose_distance_inf(relative_pose({4, -1, 2.0}, {4, -1, 2.0}), Pose2::identity()) < 1e-12);
  r = relative_pose({0, 0, pi / 2}, {0, 2, pi / 2});
  CHECK(std::abs(r.x() - 2) < 1e-12);
  CHECK(std::abs(r.y()) < 1e-12);
  CHECK(std::abs(r.theta()) < 1e-12);

  Pose2 d = apply_relative({1, 0, 0}, {2, 0, 0});
  CHECK(std::abs(d.x() - 3) < 1e-12);
  const Pose2 base(0.3, -2.0, 1.1);
  CHECK(pose_distance_inf(apply_relative(base, Pose2::identity()), base) < 1e-12);
  d = apply_relative({0, 0, pi / 2}, {2, 0, 0});
  CHECK(std::abs(d.x()) < 1e-12);
  CHECK(std::abs(d.y() - 2) < 1e-12);
  CHECK(std::abs(d.theta() - pi / 2) < 1e-12);
}

TEST_CASE("matrix round trip") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 p = random_pose(rng);
    CHECK(pose_distance_inf(Pose2::from_matrix(p.matrix()), p) < 1e-12);
    const M3 m = mat(p.x(), p.y(), p.theta());
    const auto pm = p.matrix();
    for (int k = 0; k < 9; ++k) CHECK(std::abs(pm[k] - m[k]) < 1e-12);
  }
}

TEST_CASE("compose matches the matrix product") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    const M3 m = mul(mat(a.x(), a.y(), a.theta()), mat(b.x(), b.y(), b.theta()));
    const Pose2 c = compose(a, b);
    CHECK(std::abs(c.x() - m[2]) < 1e-10);
    CHECK(std::abs(c.y() - m[5]) < 1e-10);
    CHECK(std::abs(normalize_angle(c.theta() - std::atan2(m[3], m[0]))) < 1e-10);
  }
}

TEST_CASE("group properties over random poses") {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 2000; ++i) {
    const Pose2 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    CHECK(pose_distance_inf(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-10);
    CHECK(pose_distance_inf(apply_relative(b, relative_pose(b, c)), c) < 1e-10);
    CHECK(pose_distance_inf(inverse(inverse(a)), a) < 1e-12);
    CHECK(pose_distance_inf(compose(a, inverse(a)), Pose2::identity()) < 1e-12);
    CHECK(pose_distance_inf(relative_pose(b, b), Pose2::identity()) < 1e-12);
    CHECK(pose_distance_inf(relative_pose(b, apply_relative(b, a)), a) < 1e-10);
    CHECK(a.theta() >= -pi);
    CHECK(a.theta() < pi);
  }
}

TEST_CASE("transform_point") {
  const Pose2 p(1, 2, pi / 2);
  const auto q = p.transform_point(1, 0);
  CHECK(std::abs(q[0] - 1) < 1e-12);
  CHECK(std::abs(q[1] - 3) < 1e-12);
}
