#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "msim/types.hpp"

namespace msim {

template <typename Scalar>
struct BasicMass {
  Index id = 0;
  Scalar mass = Scalar(0.1);
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
  Vec3<Scalar> velocity = Vec3<Scalar>::Zero();
  Vec3<Scalar> external_force = Vec3<Scalar>::Zero();
  bool fixed = false;
};

/// Hookean element. The current length is always derived from the endpoint
/// positions; `group` names an actuation group, empty when passive.
template <typename Scalar>
struct BasicSpring {
  Index id = 0;
  Index i = 0;
  Index j = 0;
  Scalar stiffness = Scalar(1e4);
  Scalar rest_length = Scalar(1);
  std::string group;
};

/// Exactly one of `density`, `total_mass`, `node_mass` is expected to be set.
/// Spring stiffness follows k = base_stiffness * reference_length / l0.
struct Material {
  std::string name = "default";
  std::optional<double> density;
  std::optional<double> total_mass;
  std::optional<double> node_mass = 0.1;
  double base_stiffness = 1e4;
  double reference_length = 1.0;

  double stiffness_for_length(double rest_length) const {
    return base_stiffness * reference_length / rest_length;
  }
};

enum class ActuationMode { Sinusoid, ConstantExpansion };

template <typename Scalar>
struct BasicActuationGroup {
  std::string label;
  ActuationMode mode = ActuationMode::Sinusoid;
  Scalar amplitude = 0;
  Scalar frequency = 0;
  Scalar phase = 0;
};

/// Half-space boundary. Penetration depth is offset - x.normal.
template <typename Scalar>
struct BasicContactPlane {
  Vec3<Scalar> normal = Vec3<Scalar>::UnitY();
  Scalar offset = 0;
  Scalar penalty = Scalar(1e5);
  Scalar friction = 0;
};

template <typename Scalar>
struct BasicScene {
  std::vector<BasicMass<Scalar>> masses;
  std::vector<BasicSpring<Scalar>> springs;
  Vec3<Scalar> gravity = Vec3<Scalar>(0, Scalar(-9.81), 0);
  Scalar dt = Scalar(1e-4);
  Scalar damping = 0;
  std::vector<BasicActuationGroup<Scalar>> actuation_groups;
  std::vector<BasicContactPlane<Scalar>> contact_planes;
  std::vector<Material> materials;

  /// Position of the actuation group with this label, or -1.
  int group_index(const std::string& label) const {
    for (std::size_t g = 0; g < actuation_groups.size(); ++g)
      if (actuation_groups[g].label == label) return static_cast<int>(g);
    return -1;
  }
};

using Mass = BasicMass<double>;
using Spring = BasicSpring<double>;
using ActuationGroup = BasicActuationGroup<double>;
using ContactPlane = BasicContactPlane<double>;
using Scene = BasicScene<double>;

enum class ViolationKind {
  NonPositiveMass,
  NonFiniteValue,
  IdMismatch,
  InvalidEndpoint,
  SelfLoop,
  DuplicateSpring,
  NonPositiveStiffness,
  NonPositiveRestLength,
  UnknownActuationGroup,
  DuplicateActuationGroup,
  AmplitudeOutOfRange,
  NegativeFrequency,
  NonUnitNormal,
  NonPositivePenalty,
  NegativeFriction,
  NonPositiveDt,
  DampingOutOfRange,
  InvalidMaterial,
};

struct Violation {
  ViolationKind kind;
  std::size_t index;  ///< offending element within its list (0 for scalars)
  std::string field;  ///< e.g. "springs[3].k"
  std::string message;
};

namespace detail {

inline std::uint64_t pair_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(a) << 32) | b;
}

template <typename Scalar>
bool finite3(const Vec3<Scalar>& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

inline std::string at(const char* list, std::size_t i, const char* field) {
  return std::string(list) + "[" + std::to_string(i) + "]." + field;
}

}  // namespace detail

/// Every invariant violation in `scene`; empty iff the scene is valid.
template <typename Scalar>
std::vector<Violation> validate_scene(const BasicScene<Scalar>& scene) {
  using detail::at;
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::size_t index, std::string field, std::string message) {
    out.push_back({kind, index, std::move(field), std::move(message)});
  };

  if (!(scene.dt > 0)) add(ViolationKind::NonPositiveDt, 0, "dt", "dt must be > 0");
  if (!(scene.damping >= 0 && scene.damping < 1))
    add(ViolationKind::DampingOutOfRange, 0, "damping", "damping must satisfy 0 <= damping < 1");
  if (!detail::finite3(scene.gravity))
    add(ViolationKind::NonFiniteValue, 0, "gravity", "gravity must be finite");

  const std::size_t n = scene.masses.size();
  for (std::size_t m = 0; m < n; ++m) {
    const auto& mass = scene.masses[m];
    if (mass.id != m) add(ViolationKind::IdMismatch, m, at("masses", m, "id"), "mass id must equal its position in the list");
    if (!(mass.mass > 0)) add(ViolationKind::NonPositiveMass, m, at("masses", m, "m"), "mass must satisfy m > 0");
    if (!detail::finite3(mass.position)) add(ViolationKind::NonFiniteValue, m, at("masses", m, "x"), "position must be finite");
    if (!detail::finite3(mass.velocity)) add(ViolationKind::NonFiniteValue, m, at("masses", m, "v"), "velocity must be finite");
    if (!detail::finite3(mass.external_force))
      add(ViolationKind::NonFiniteValue, m, at("masses", m, "f_ext"), "external force must be finite");
  }

  std::unordered_map<std::uint64_t, std::size_t> seen;
  seen.reserve(scene.springs.size());
  for (std::size_t s = 0; s < scene.springs.size(); ++s) {
    const auto& spring = scene.springs[s];
    if (spring.id != s) add(ViolationKind::IdMismatch, s, at("springs", s, "id"), "spring id must equal its position in the list");
    bool endpoints_ok = true;
    if (spring.i >= n) {
      add(ViolationKind::InvalidEndpoint, s, at("springs", s, "i"), "endpoint i out of range");
      endpoints_ok = false;
    }
    if (spring.j >= n) {
      add(ViolationKind::InvalidEndpoint, s, at("springs", s, "j"), "endpoint j out of range");
      endpoints_ok = false;
    }
    if (spring.i == spring.j) {
      add(ViolationKind::SelfLoop, s, at("springs", s, "j"), "spring endpoints must differ (i != j)");
      endpoints_ok = false;
    }
    if (endpoints_ok && !seen.emplace(detail::pair_key(spring.i, spring.j), s).second)
      add(ViolationKind::DuplicateSpring, s, at("springs", s, "j"), "duplicate spring for the same endpoint pair");
    if (!(spring.stiffness > 0))
      add(ViolationKind::NonPositiveStiffness, s, at("springs", s, "k"), "stiffness must satisfy k > 0");
    if (!(spring.rest_length > 0))
      add(ViolationKind::NonPositiveRestLength, s, at("springs", s, "l0"), "rest length must satisfy l0 > 0");
    if (!spring.group.empty() && scene.group_index(spring.group) < 0)
      add(ViolationKind::UnknownActuationGroup, s, at("springs", s, "group"), "unknown actuation group '" + spring.group + "'");
  }

  for (std::size_t g = 0; g < scene.actuation_groups.size(); ++g) {
    const auto& group = scene.actuation_groups[g];
    if (scene.group_index(group.label) != static_cast<int>(g))
      add(ViolationKind::DuplicateActuationGroup, g, at("actuation_groups", g, "label"), "duplicate actuation group label");
    if (!(std::abs(group.amplitude) < 1))
      add(ViolationKind::AmplitudeOutOfRange, g, at("actuation_groups", g, "amplitude"), "actuation amplitude must satisfy |A| < 1");
    if (!(group.frequency >= 0) || !std::isfinite(group.frequency))
      add(ViolationKind::NegativeFrequency, g, at("actuation_groups", g, "frequency"), "actuation frequency must be finite and >= 0");
    if (!std::isfinite(group.phase))
      add(ViolationKind::NonFiniteValue, g, at("actuation_groups", g, "phase"), "phase must be finite");
  }

  for (std::size_t p = 0; p < scene.contact_planes.size(); ++p) {
    const auto& plane = scene.contact_planes[p];
    if (!(std::abs(plane.normal.norm() - 1) < 1e-9))
      add(ViolationKind::NonUnitNormal, p, at("contact_planes", p, "normal"), "contact plane normal must have unit length");
    if (!(plane.penalty > 0))
      add(ViolationKind::NonPositivePenalty, p, at("contact_planes", p, "penalty"), "penalty stiffness must be > 0");
    if (!(plane.friction >= 0))
      add(ViolationKind::NegativeFriction, p, at("contact_planes", p, "friction"), "friction coefficient must be >= 0");
    if (!std::isfinite(plane.offset))
      add(ViolationKind::NonFiniteValue, p, at("contact_planes", p, "offset"), "offset must be finite");
  }

  for (std::size_t k = 0; k < scene.materials.size(); ++k) {
    const auto& mat = scene.materials[k];
    const int set = int(mat.density.has_value()) + int(mat.total_mass.has_value()) + int(mat.node_mass.has_value());
    const bool positive = (!mat.density || *mat.density > 0) && (!mat.total_mass || *mat.total_mass > 0) &&
                          (!mat.node_mass || *mat.node_mass > 0);
    if (set != 1 || !positive)
      add(ViolationKind::InvalidMaterial, k, at("materials", k, "density"),
          "exactly one positive mass source (density, total_mass, node_mass) is required");
    if (!(mat.base_stiffness > 0) || !(mat.reference_length > 0))
      add(ViolationKind::InvalidMaterial, k, at("materials", k, "k0"), "material requires k0 > 0 and L_ref > 0");
  }
  return out;
}

/// Rest length of `spring` at time t under its actuation group.
template <typename Scalar>
Scalar actuated_rest_length(const BasicSpring<Scalar>& spring, const BasicActuationGroup<Scalar>& group, Scalar t) {
  switch (group.mode) {
    case ActuationMode::ConstantExpansion:
      return spring.rest_length * (1 + group.amplitude);
    case ActuationMode::Sinusoid:
    default:
      return spring.rest_length *
             (1 + group.amplitude * std::sin(2 * std::numbers::pi_v<Scalar> * group.frequency * t + group.phase));
  }
}

/// Incrementally assembles a scene. Springs are unique per unordered pair:
/// connecting an existing pair returns the existing spring.
template <typename Scalar>
class BasicSceneBuilder {
 public:
  BasicSceneBuilder() = default;
  explicit BasicSceneBuilder(BasicScene<Scalar> base) : scene_(std::move(base)) {
    for (const auto& s : scene_.springs) index_.emplace(detail::pair_key(s.i, s.j), s.id);
  }

  Index add_mass(Scalar mass, const Vec3<Scalar>& position, bool fixed = false) {
    if (!(mass > 0)) throw std::invalid_argument("mass must be > 0");
    BasicMass<Scalar> m;
    m.id = static_cast<Index>(scene_.masses.size());
    m.mass = mass;
    m.position = position;
    m.fixed = fixed;
    scene_.masses.push_back(m);
    return m.id;
  }

  /// Rest length defaults to the current endpoint distance.
  Index connect(Index i, Index j, Scalar stiffness, std::optional<Scalar> rest_length = std::nullopt,
                std::string group = {}) {
    if (i >= scene_.masses.size() || j >= scene_.masses.size())
      throw std::invalid_argument("spring endpoint out of range");
    if (i == j) throw std::invalid_argument("spring endpoints must differ");
    if (!(stiffness > 0)) throw std::invalid_argument("spring stiffness must be > 0");
    const Scalar l0 = rest_length ? *rest_length : (scene_.masses[j].position - scene_.masses[i].position).norm();
    if (!(l0 > 0)) throw std::invalid_argument("spring rest length must be > 0");

    const auto [it, inserted] = index_.emplace(detail::pair_key(i, j), static_cast<Index>(scene_.springs.size()));
    if (!inserted) return it->second;
    BasicSpring<Scalar> s;
    s.id = it->second;
    s.i = i;
    s.j = j;
    s.stiffness = stiffness;
    s.rest_length = l0;
    s.group = std::move(group);
    scene_.springs.push_back(std::move(s));
    return it->second;
  }

  bool connected(Index i, Index j) const { return index_.count(detail::pair_key(i, j)) != 0; }

  BasicScene<Scalar>& scene() { return scene_; }
  const BasicScene<Scalar>& scene() const { return scene_; }
  BasicScene<Scalar> build() && { return std::move(scene_); }

 private:
  BasicScene<Scalar> scene_;
  std::unordered_map<std::uint64_t, Index> index_;
};

using SceneBuilder = BasicSceneBuilder<double>;

}  // namespace msim
