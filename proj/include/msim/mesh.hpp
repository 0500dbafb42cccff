#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "msim/types.hpp"

namespace msim {

/// Closed triangle surface bounding the region to fill.
struct TriangleMesh {
  std::vector<Vec3d> vertices;
  std::vector<std::array<Index, 3>> triangles;

  bool empty() const noexcept { return triangles.empty(); }
  /// Axis-aligned bounds {min, max}; zero box for an empty mesh.
  std::array<Vec3d, 2> bounds() const;
  /// Enclosed volume from the divergence theorem (absolute value).
  double volume() const;
};

/// Reads "v x y z" and "f a b c ..." records (1-based or negative relative
/// indices, "a/b/c" tokens allowed, polygons fan-triangulated). All other
/// records are ignored. Throws msim::Error with the line number on bad input.
TriangleMesh parse_obj(std::istream& in);
TriangleMesh load_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriangleMesh& mesh);

/// Axis-aligned box with outward-facing triangles.
TriangleMesh make_box_mesh(const Vec3d& lo, const Vec3d& hi);

/// Ray-parity inside test. Points on the surface count as inside; when a ray
/// grazes an edge or vertex, or runs parallel to a triangle, another
/// direction from a fixed sequence is tried.
bool point_inside(const TriangleMesh& mesh, const Vec3d& p);

}  // namespace msim
