#include "msim/mesh.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

namespace msim {

std::array<Vec3d, 2> TriangleMesh::bounds() const {
  if (vertices.empty()) return {Vec3d::Zero(), Vec3d::Zero()};
  Vec3d lo = vertices.front(), hi = vertices.front();
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

double TriangleMesh::volume() const {
  double six = 0;
  for (const auto& t : triangles) six += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
  return std::abs(six) / 6.0;
}

namespace {

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw Error("obj line " + std::to_string(line) + ": " + what);
}

Index resolve_index(const std::string& token, std::size_t count, std::size_t line) {
  const std::string head = token.substr(0, token.find('/'));
  long long raw = 0;
  try {
    std::size_t used = 0;
    raw = std::stoll(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    bad_line(line, "bad face index '" + token + "'");
  }
  const long long resolved = raw > 0 ? raw - 1 : static_cast<long long>(count) + raw;
  if (raw == 0 || resolved < 0 || resolved >= static_cast<long long>(count))
    bad_line(line, "face index " + head + " out of range");
  return static_cast<Index>(resolved);
}

}  // namespace

TriangleMesh parse_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream row(text);
    std::string tag;
    if (!(row >> tag)) continue;
    if (tag == "v") {
      Vec3d v;
      if (!(row >> v.x() >> v.y() >> v.z())) bad_line(line, "vertex needs three coordinates");
      if (!v.allFinite()) bad_line(line, "non-finite vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<Index> face;
      for (std::string token; row >> token;) face.push_back(resolve_index(token, mesh.vertices.size(), line));
      if (face.size() < 3) bad_line(line, "face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < face.size(); ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    }
  }
  return mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh '" + path.string() + "'");
  return parse_obj(in);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh make_box_mesh(const Vec3d& lo, const Vec3d& hi) {
  TriangleMesh mesh;
  for (int c = 0; c < 8; ++c)
    mesh.vertices.emplace_back(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(), c & 4 ? hi.z() : lo.z());
  // two triangles per face, counter-clockwise seen from outside
  const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  for (const auto& q : quads) {
    mesh.triangles.push_back({Index(q[0]), Index(q[1]), Index(q[2])});
    mesh.triangles.push_back({Index(q[0]), Index(q[2]), Index(q[3])});
  }
  return mesh;
}

namespace {

enum class Cast { Inside, Outside, OnSurface, Degenerate };

Cast cast_ray(const TriangleMesh& mesh, const Vec3d& p, const Vec3d& dir, double scale) {
  constexpr double kBary = 1e-10;
  const double eps_t = 1e-12 * scale;
  int hits = 0;
  for (const auto& tri : mesh.triangles) {
    const Vec3d& a = mesh.vertices[tri[0]];
    const Vec3d e1 = mesh.vertices[tri[1]] - a;
    const Vec3d e2 = mesh.vertices[tri[2]] - a;
    const Vec3d h = dir.cross(e2);
    const double det = e1.dot(h);
    const Vec3d s = p - a;
    if (std::abs(det) <= 1e-12 * e1.norm() * e2.norm()) {
      // parallel: only a problem when the ray lies in the triangle's plane
      const Vec3d n = e1.cross(e2);
      if (std::abs(n.normalized().dot(s)) <= eps_t) return Cast::Degenerate;
      continue;
    }
    const double inv = 1.0 / det;
    const double u = s.dot(h) * inv;
    if (u < -kBary || u > 1 + kBary) continue;
    const Vec3d q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < -kBary || u + v > 1 + kBary) continue;
    const double t = e2.dot(q) * inv;
    if (std::abs(t) <= eps_t) return Cast::OnSurface;
    if (t < 0) continue;
    if (u < kBary || v < kBary || u + v > 1 - kBary) return Cast::Degenerate;
    ++hits;
  }
  return hits % 2 ? Cast::Inside : Cast::Outside;
}

const std::vector<Vec3d>& ray_directions() {
  static const std::vector<Vec3d> dirs = [] {
    std::vector<Vec3d> out{Vec3d(1.0, 0.7548776662466927, 0.5698402909980532).normalized()};
    std::mt19937 rng(2024);
    std::normal_distribution<double> n;
    while (out.size() < 16) out.push_back(Vec3d(n(rng), n(rng), n(rng)).normalized());
    return out;
  }();
  return dirs;
}

}  // namespace

bool point_inside(const TriangleMesh& mesh, const Vec3d& p) {
  if (mesh.empty()) return false;
  const auto [lo, hi] = mesh.bounds();
  const double scale = std::max((hi - lo).norm(), 1e-300);
  const double slack = 1e-12 * scale;
  if ((p.array() < lo.array() - slack).any() || (p.array() > hi.array() + slack).any()) return false;
  int inside_votes = 0, outside_votes = 0;
  for (const auto& dir : ray_directions()) {
    switch (cast_ray(mesh, p, dir, scale)) {
      case Cast::OnSurface: return true;
      case Cast::Inside: return true;
      case Cast::Outside: return false;
      case Cast::Degenerate: break;
    }
  }
  // every direction grazed something; fall back to a loose majority
  for (const auto& dir : ray_directions()) {
    int hits = 0;
    for (const auto& tri : mesh.triangles) {
      const Vec3d& a = mesh.vertices[tri[0]];
      const Vec3d e1 = mesh.vertices[tri[1]] - a, e2 = mesh.vertices[tri[2]] - a;
      const Vec3d h = dir.cross(e2);
      const double det = e1.dot(h);
      if (det == 0) continue;
      const Vec3d s = p - a, q = s.cross(e1);
      const double u = s.dot(h) / det, v = dir.dot(q) / det, t = e2.dot(q) / det;
      if (u >= 0 && v >= 0 && u + v <= 1 && t > 0) ++hits;
    }
    (hits % 2 ? inside_votes : outside_votes)++;
  }
  return inside_votes > outside_votes;
}

}  // namespace msim
