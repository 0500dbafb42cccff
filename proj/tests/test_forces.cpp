#include <doctest.h>

#include "fixtures.hpp"
#include "msim/forces.hpp"

using namespace msim;

TEST_CASE("spring force at rest length is zero") {
  const auto r = spring_force<double>(Vec3d(0, 0, 0), Vec3d(0.6, 0.8, 0), 100.0, 1.0);
  CHECK(r.on_i.norm() < 1e-13);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("spring force in tension pulls i toward j") {
  const auto r = spring_force<double>(Vec3d(0, 0, 0), Vec3d(2, 0, 0), 100.0, 1.0);
  CHECK(r.on_i.x() == 100.0);
  CHECK(r.on_i.y() == 0.0);
  CHECK(r.on_i.z() == 0.0);
}

TEST_CASE("spring force in compression pushes apart") {
  const auto r = spring_force<double>(Vec3d(0, 0, 0), Vec3d(0.5, 0, 0), 100.0, 1.0);
  CHECK(r.on_i.x() == -50.0);
}

TEST_CASE("coincident endpoints give zero force and flag the spring") {
  const auto r = spring_force<double>(Vec3d(1, 2, 3), Vec3d(1, 2, 3), 100.0, 1.0);
  CHECK(r.degenerate);
  CHECK(r.on_i == Vec3d::Zero());
}

TEST_CASE("float scalar instantiation") {
  const auto r = spring_force<float>(Vec3<float>(0, 0, 0), Vec3<float>(2, 0, 0), 100.0f, 1.0f);
  CHECK(r.on_i.x() == 100.0f);
}

TEST_CASE("total force: gravity on an isolated mass") {
  SceneBuilder b;
  b.add_mass(0.1, Vec3d(0, 3, 0));
  Scene scene = std::move(b).build();
  const std::vector<Vec3d> x{scene.masses[0].position}, v{Vec3d::Zero()};
  const Vec3d f = total_force(0, scene, x, v, 0.0);
  CHECK(f.x() == 0.0);
  CHECK(f.y() == doctest::Approx(-0.981).epsilon(1e-15));
  CHECK(f.z() == 0.0);
}

TEST_CASE("total force: springs at rest without gravity is zero") {
  Scene scene = fixtures::cube();
  scene.gravity.setZero();
  std::vector<Vec3d> x, v;
  for (const auto& m : scene.masses) {
    x.push_back(m.position);
    v.push_back(Vec3d::Zero());
  }
  for (Index i = 0; i < 8; ++i) CHECK(total_force(i, scene, x, v, 0.0).norm() < 1e-10);
}

TEST_CASE("total force: external force passes through") {
  SceneBuilder b;
  b.add_mass(0.1, Vec3d::Zero());
  Scene scene = std::move(b).build();
  scene.gravity.setZero();
  scene.masses[0].external_force = Vec3d(1, 2, 3);
  const std::vector<Vec3d> x{Vec3d::Zero()}, v{Vec3d::Zero()};
  CHECK(total_force(0, scene, x, v, 0.0) == Vec3d(1, 2, 3));
}

TEST_CASE("total force uses the actuated rest length") {
  SceneBuilder b;
  b.add_mass(1.0, Vec3d::Zero());
  b.add_mass(1.0, Vec3d(1, 0, 0));
  b.connect(0, 1, 10.0, 1.0, "pump");
  Scene scene = std::move(b).build();
  scene.gravity.setZero();
  scene.actuation_groups.push_back({"pump", ActuationMode::ConstantExpansion, 0.5, 0.0, 0.0});
  const std::vector<Vec3d> x{scene.masses[0].position, scene.masses[1].position}, v(2, Vec3d::Zero());
  // rest length 1.5 at length 1: compression of 0.5 pushes mass 0 toward -x
  CHECK(total_force(0, scene, x, v, 0.0).x() == doctest::Approx(-5.0));
  CHECK(total_force(1, scene, x, v, 0.0).x() == doctest::Approx(5.0));
}

TEST_CASE("contact plane") {
  ContactPlane plane{Vec3d(0, 1, 0), 0.0, 1e5, 0.5};

  SUBCASE("mass above the plane feels nothing") {
    CHECK(contact_force<double>(Vec3d(0, 0.2, 0), Vec3d(1, -1, 0), 0.1, plane, 1e-4) == Vec3d::Zero());
  }
  SUBCASE("penalty law") {
    plane.friction = 0;
    const Vec3d f = contact_force<double>(Vec3d(0, -0.01, 0), Vec3d::Zero(), 0.1, plane, 1e-4);
    CHECK(f.norm() == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(f.y() > 0);
  }
  SUBCASE("frictionless contact is exactly normal") {
    plane.friction = 0;
    const Vec3d f = contact_force<double>(Vec3d(0.3, -0.02, 0.1), Vec3d(5, -1, -3), 0.1, plane, 1e-4);
    CHECK(f.x() == 0.0);
    CHECK(f.z() == 0.0);
    CHECK(f.y() == doctest::Approx(2000.0));
  }
  SUBCASE("friction opposes sliding and is capped by mu*Fn") {
    const Vec3d f = contact_force<double>(Vec3d(0, -0.01, 0), Vec3d(3, 0, 4), 0.1, plane, 1e-4);
    const Vec3d tangential(f.x(), 0, f.z());
    CHECK(tangential.norm() == doctest::Approx(0.5 * 1000.0));
    CHECK(tangential.normalized().isApprox(Vec3d(-0.6, 0, -0.8)));
  }
  SUBCASE("friction never more than stops the mass in one step") {
    // |v_t| m / dt = 1e-6 * 0.1 / 1e-4 = 1e-3 N, far below mu*Fn
    const Vec3d f = contact_force<double>(Vec3d(0, -0.01, 0), Vec3d(1e-6, 0, 0), 0.1, plane, 1e-4);
    CHECK(f.x() == doctest::Approx(-1e-3));
  }
}

TEST_CASE("topology rows are sorted by spring id") {
  const Scene scene = fixtures::block(3, 2, 2);
  const Topology topo = Topology::build(scene);
  CHECK(topo.max_degree() <= 26);
  for (Index m = 0; m < scene.masses.size(); ++m)
    for (Index e = topo.offsets[m] + 1; e < topo.offsets[m + 1]; ++e) CHECK(topo.springs[e - 1] < topo.springs[e]);
  CHECK(topo.springs.size() == 2 * scene.springs.size());
}
