#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "msim/model.hpp"

using namespace msim;

namespace {

bool has(const std::vector<Violation>& v, ViolationKind kind) {
  for (const auto& item : v)
    if (item.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_scene accepts the unit cube") {
  const Scene cube = fixtures::cube();
  CHECK(cube.masses.size() == 8);
  CHECK(cube.springs.size() == 28);
  CHECK(validate_scene(cube).empty());
}

TEST_CASE("validate_scene reports an out-of-range endpoint") {
  Scene scene = fixtures::cube();
  scene.springs[5].j = static_cast<Index>(scene.masses.size());
  const auto v = validate_scene(scene);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::InvalidEndpoint);
  CHECK(v[0].index == 5);
  CHECK(v[0].field == "springs[5].j");
}

TEST_CASE("validate_scene reports a non-positive dt") {
  Scene scene = fixtures::cube();
  scene.dt = 0;
  const auto v = validate_scene(scene);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::NonPositiveDt);
}

TEST_CASE("validate_scene covers every invariant") {
  Scene scene = fixtures::cube();
  scene.damping = 1.0;
  scene.masses[2].mass = 0;
  scene.springs[0].stiffness = -1;
  scene.springs[1].rest_length = 0;
  scene.springs[2].j = scene.springs[2].i;
  scene.springs[3].group = "missing";
  scene.springs[4].i = scene.springs[5].i;
  scene.springs[4].j = scene.springs[5].j;
  scene.actuation_groups.push_back({"pump", ActuationMode::Sinusoid, 1.0, 1.0, 0.0});
  scene.contact_planes.push_back({Vec3d(0, 2, 0), 0, 1e5, -0.5});

  const auto v = validate_scene(scene);
  CHECK(has(v, ViolationKind::DampingOutOfRange));
  CHECK(has(v, ViolationKind::NonPositiveMass));
  CHECK(has(v, ViolationKind::NonPositiveStiffness));
  CHECK(has(v, ViolationKind::NonPositiveRestLength));
  CHECK(has(v, ViolationKind::SelfLoop));
  CHECK(has(v, ViolationKind::UnknownActuationGroup));
  CHECK(has(v, ViolationKind::DuplicateSpring));
  CHECK(has(v, ViolationKind::AmplitudeOutOfRange));
  CHECK(has(v, ViolationKind::NonUnitNormal));
  CHECK(has(v, ViolationKind::NegativeFriction));
}

TEST_CASE("actuated rest length") {
  Spring s;
  s.rest_length = 1.0;
  ActuationGroup g{"a", ActuationMode::Sinusoid, 0.0, 3.0, 0.4};

  SUBCASE("zero amplitude leaves l0 unchanged") {
    for (double t : {0.0, 0.1, 0.37, 12.5}) CHECK(actuated_rest_length(s, g, t) == 1.0);
  }
  SUBCASE("sinusoid quarter period") {
    g = {"a", ActuationMode::Sinusoid, 0.2, 1.0, 0.0};
    CHECK(actuated_rest_length(s, g, 0.25) == doctest::Approx(1.2).epsilon(1e-15));
  }
  SUBCASE("constant expansion") {
    s.rest_length = 2.0;
    g = {"a", ActuationMode::ConstantExpansion, 0.5, 0.0, 0.0};
    CHECK(actuated_rest_length(s, g, 0.0) == 3.0);
    CHECK(actuated_rest_length(s, g, 7.0) == 3.0);
  }
}

TEST_CASE("actuated rest length is periodic and positive") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> amp(-0.99, 0.99), freq(0.1, 50), phase(-10, 10), time(0, 100),
      len(0.01, 5);
  for (int trial = 0; trial < 500; ++trial) {
    Spring s;
    s.rest_length = len(rng);
    ActuationGroup g{"a", ActuationMode::Sinusoid, amp(rng), freq(rng), phase(rng)};
    const double t = time(rng);
    const double a = actuated_rest_length(s, g, t);
    const double b = actuated_rest_length(s, g, t + 1.0 / g.frequency);
    CHECK(a > 0);
    // the phase argument grows with t, so the bound scales with it
    CHECK(std::abs(a - b) < 1e-12 * s.rest_length * std::max(1.0, g.frequency * t));
  }
}

TEST_CASE("scene builder never creates duplicate springs") {
  std::mt19937 rng(3);
  SceneBuilder b;
  for (int i = 0; i < 20; ++i) b.add_mass(0.1, Vec3d(i, i * i, 0.5 * i));
  std::uniform_int_distribution<Index> pick(0, 19);
  for (int trial = 0; trial < 400; ++trial) {
    const Index i = pick(rng), j = pick(rng);
    if (i == j) {
      CHECK_THROWS_AS(b.connect(i, j, 10.0), std::invalid_argument);
      continue;
    }
    const Index before = static_cast<Index>(b.scene().springs.size());
    const Index id = b.connect(i, j, 10.0);
    if (id == before) CHECK(b.scene().springs.size() == before + 1u);
    CHECK(b.connect(j, i, 10.0) == id);
  }
  CHECK(validate_scene(b.scene()).empty());
  CHECK_THROWS_AS(b.connect(0, 99, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(b.connect(0, 1, -1.0), std::invalid_argument);
}
