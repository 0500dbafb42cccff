#pragma once

#include <algorithm>
#include <vector>

#include "msim/model.hpp"

namespace msim {

/// Below this endpoint separation (m) a spring has no defined direction.
inline constexpr double kDegenerateLength = 1e-12;

template <typename Scalar>
struct SpringForce {
  Vec3<Scalar> on_i = Vec3<Scalar>::Zero();  ///< force on endpoint i; j receives the negation
  bool degenerate = false;
};

/// Hooke's law along l = x_j - x_i: k (|l| - l0) l / |l|.
template <typename Scalar>
SpringForce<Scalar> spring_force(const Vec3<Scalar>& xi, const Vec3<Scalar>& xj, Scalar stiffness, Scalar rest_length) {
  const Vec3<Scalar> l = xj - xi;
  const Scalar length = l.norm();
  if (!(length >= Scalar(kDegenerateLength))) return {Vec3<Scalar>::Zero(), true};
  return {(stiffness * (length - rest_length) / length) * l, false};
}

/// Penalty normal force plus Coulomb friction clamped so that it can at most
/// cancel the tangential velocity within one step.
template <typename Scalar>
Vec3<Scalar> contact_force(const Vec3<Scalar>& x, const Vec3<Scalar>& v, Scalar mass,
                           const BasicContactPlane<Scalar>& plane, Scalar dt) {
  const Scalar depth = plane.offset - x.dot(plane.normal);
  if (!(depth > 0)) return Vec3<Scalar>::Zero();
  const Vec3<Scalar> normal_force = (plane.penalty * depth) * plane.normal;
  if (!(plane.friction > 0)) return normal_force;
  const Vec3<Scalar> tangential = v - v.dot(plane.normal) * plane.normal;
  const Scalar speed = tangential.norm();
  if (!(speed > 0)) return normal_force;
  const Scalar magnitude = std::min(plane.friction * normal_force.norm(), speed * mass / dt);
  return normal_force - (magnitude / speed) * tangential;
}

/// Per-mass incident springs in ascending spring id (CSR layout). `sign` is
/// +1 when the mass is endpoint i of the spring and -1 when it is endpoint j.
struct Topology {
  std::vector<Index> offsets;  ///< size masses + 1
  std::vector<Index> springs;
  std::vector<signed char> sign;

  Index degree(Index mass) const { return offsets[mass + 1] - offsets[mass]; }
  Index max_degree() const {
    Index d = 0;
    for (std::size_t m = 0; m + 1 < offsets.size(); ++m) d = std::max<Index>(d, degree(static_cast<Index>(m)));
    return d;
  }

  template <typename Scalar>
  static Topology build(const BasicScene<Scalar>& scene) {
    Topology t;
    const std::size_t n = scene.masses.size();
    t.offsets.assign(n + 1, 0);
    for (const auto& s : scene.springs) {
      ++t.offsets[s.i + 1];
      ++t.offsets[s.j + 1];
    }
    for (std::size_t m = 0; m < n; ++m) t.offsets[m + 1] += t.offsets[m];
    t.springs.resize(t.offsets[n]);
    t.sign.resize(t.offsets[n]);
    std::vector<Index> fill(t.offsets.begin(), t.offsets.end() - 1);
    // springs are visited in id order, so every row comes out sorted
    for (const auto& s : scene.springs) {
      t.springs[fill[s.i]] = s.id;
      t.sign[fill[s.i]++] = 1;
      t.springs[fill[s.j]] = s.id;
      t.sign[fill[s.j]++] = -1;
    }
    return t;
  }
};

/// Actuation resolved once per scene: group index per spring (-1 = passive).
template <typename Scalar>
class RestLengths {
 public:
  RestLengths() = default;
  explicit RestLengths(const BasicScene<Scalar>& scene) {
    group_of_.reserve(scene.springs.size());
    for (const auto& s : scene.springs) {
      const int g = s.group.empty() ? -1 : scene.group_index(s.group);
      group_of_.push_back(g);
      any_ |= g >= 0;
    }
  }

  Scalar at(const BasicSpring<Scalar>& spring, const std::vector<BasicActuationGroup<Scalar>>& groups,
            Scalar t) const {
    if (!any_) return spring.rest_length;
    const int g = group_of_[spring.id];
    return g < 0 ? spring.rest_length : actuated_rest_length(spring, groups[g], t);
  }

 private:
  std::vector<int> group_of_;
  bool any_ = false;
};

/// Non-spring contributions, always added in the same order after the
/// spring sum so every execution mode rounds identically.
template <typename Scalar>
Vec3<Scalar> finish_force(const BasicScene<Scalar>& scene, Index mass_index, Vec3<Scalar> spring_sum,
                          const Vec3<Scalar>& x, const Vec3<Scalar>& v) {
  const auto& m = scene.masses[mass_index];
  spring_sum += m.mass * scene.gravity;
  spring_sum += m.external_force;
  for (const auto& plane : scene.contact_planes) spring_sum += contact_force(x, v, m.mass, plane, scene.dt);
  return spring_sum;
}

/// Total force on mass i: gravity + external + incident springs + contacts.
template <typename Scalar>
Vec3<Scalar> total_force(Index i, const BasicScene<Scalar>& scene, const Topology& topology,
                         const std::vector<Vec3<Scalar>>& positions, const std::vector<Vec3<Scalar>>& velocities,
                         Scalar t, const RestLengths<Scalar>& rest) {
  Vec3<Scalar> sum = Vec3<Scalar>::Zero();
  for (Index e = topology.offsets[i]; e < topology.offsets[i + 1]; ++e) {
    const auto& s = scene.springs[topology.springs[e]];
    const Vec3<Scalar> f = spring_force(positions[s.i], positions[s.j], s.stiffness, rest.at(s, scene.actuation_groups, t)).on_i;
    if (topology.sign[e] > 0)
      sum += f;
    else
      sum += -f;
  }
  return finish_force(scene, i, sum, positions[i], velocities[i]);
}

template <typename Scalar>
Vec3<Scalar> total_force(Index i, const BasicScene<Scalar>& scene, const std::vector<Vec3<Scalar>>& positions,
                         const std::vector<Vec3<Scalar>>& velocities, Scalar t) {
  return total_force(i, scene, Topology::build(scene), positions, velocities, t, RestLengths<Scalar>(scene));
}

}  // namespace msim
