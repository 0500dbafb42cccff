#include "msim/scene_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace msim {

using nlohmann::json;

SceneParseError::SceneParseError(std::string message, std::string field, std::size_t line,
                                 std::vector<Violation> violations)
    : Error(std::move(message)), field_(std::move(field)), line_(line), violations_(std::move(violations)) {}

namespace {

json vec(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

const char* mode_name(ActuationMode m) { return m == ActuationMode::Sinusoid ? "sinusoid" : "constant-expansion"; }

json mass_json(const Mass& m) {
  return json{{"id", m.id}, {"m", m.mass}, {"x", vec(m.position)}, {"v", vec(m.velocity)},
              {"f_ext", vec(m.external_force)}, {"fixed", m.fixed}};
}

json spring_json(const Spring& s) {
  json j{{"id", s.id}, {"i", s.i}, {"j", s.j}, {"k", s.stiffness}, {"l0", s.rest_length}};
  if (!s.group.empty()) j["group"] = s.group;
  return j;
}

json group_json(const ActuationGroup& g) {
  return json{{"label", g.label}, {"mode", mode_name(g.mode)}, {"amplitude", g.amplitude},
              {"frequency", g.frequency}, {"phase", g.phase}};
}

json plane_json(const ContactPlane& p) {
  return json{{"normal", vec(p.normal)}, {"offset", p.offset}, {"penalty", p.penalty}, {"friction", p.friction}};
}

json material_json(const Material& m) {
  json j{{"name", m.name}, {"k0", m.base_stiffness}, {"l_ref", m.reference_length}};
  if (m.density) j["density"] = *m.density;
  if (m.total_mass) j["total_mass"] = *m.total_mass;
  if (m.node_mass) j["node_mass"] = *m.node_mass;
  return j;
}

template <typename T, typename Fn>
void render_list(std::ostringstream& out, const char* key, const std::vector<T>& items, Fn&& to_json, bool last) {
  out << "  \"" << key << "\": [";
  for (std::size_t k = 0; k < items.size(); ++k) out << (k ? ",\n    " : "\n    ") << to_json(items[k]).dump();
  out << (items.empty() ? "]" : "\n  ]") << (last ? "\n" : ",\n");
}

/// Reads one JSON object with a fixed key set, reporting paths on failure.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  /// Rejects any key that was never read.
  void done() const {
    for (const auto& [key, value] : node_.items())
      if (!used_.count(key)) fail(join(key), "unknown field '" + key + "'");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& require(const std::string& key) {
    used_.insert(key);
    if (!node_.contains(key)) fail(join(key), "missing required field '" + join(key) + "'");
    return node_.at(key);
  }

  double number(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number()) fail(join(key), "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  Index index(const std::string& key) {
    const json& v = require(key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<Index>::max())
      fail(join(key), "expected a non-negative integer index");
    return v.get<Index>();
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = require(key);
    if (!v.is_boolean()) fail(join(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = require(key);
    if (!v.is_string()) fail(join(key), "expected a string");
    return v.get<std::string>();
  }

  Vec3d vector(const std::string& key) {
    const json& v = require(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
      fail(join(key), "expected an array of three numbers");
    return Vec3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  }

  Vec3d vector_or(const std::string& key, const Vec3d& fallback) { return has(key) ? vector(key) : fallback; }

  template <typename Fn>
  void list(const std::string& key, bool required, Fn&& each) {
    if (!required && !has(key)) return;
    const json& v = require(key);
    if (!v.is_array()) fail(join(key), "expected an array");
    for (std::size_t k = 0; k < v.size(); ++k) each(v[k], join(key) + "[" + std::to_string(k) + "]");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw SceneParseError("scene: " + (field.empty() ? what : field + ": " + what), field);
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::size_t line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

}  // namespace

std::string render_scene(const Scene& scene) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"version\": " << kSceneSchemaVersion << ",\n";
  out << "  \"dt\": " << json(scene.dt).dump() << ",\n";
  out << "  \"damping\": " << json(scene.damping).dump() << ",\n";
  out << "  \"gravity\": " << vec(scene.gravity).dump() << ",\n";
  render_list(out, "materials", scene.materials, material_json, false);
  render_list(out, "actuation_groups", scene.actuation_groups, group_json, false);
  render_list(out, "contact_planes", scene.contact_planes, plane_json, false);
  render_list(out, "masses", scene.masses, mass_json, false);
  render_list(out, "springs", scene.springs, spring_json, true);
  out << "}\n";
  return out.str();
}

Scene parse_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw SceneParseError("scene: syntax error on line " + std::to_string(line) + ": " + e.what(), {}, line);
  }

  Scene scene;
  {
    Reader top(doc, "");
    const json& version = top.require("version");
    if (!version.is_number_integer() || version.get<long long>() != kSceneSchemaVersion)
      Reader::fail("version", "unsupported schema version (expected " + std::to_string(kSceneSchemaVersion) + ")");
    scene.dt = top.number("dt");
    scene.damping = top.number("damping");
    scene.gravity = top.vector("gravity");

    top.list("materials", false, [&](const json& node, const std::string& path) {
      Reader r(node, path);
      Material m;
      m.name = r.text("name");
      m.node_mass.reset();
      if (r.has("density")) m.density = r.number("density");
      if (r.has("total_mass")) m.total_mass = r.number("total_mass");
      if (r.has("node_mass")) m.node_mass = r.number("node_mass");
      m.base_stiffness = r.number("k0");
      m.reference_length = r.number("l_ref");
      r.done();
      scene.materials.push_back(std::move(m));
    });
    top.list("actuation_groups", false, [&](const json& node, const std::string& path) {
      Reader r(node, path);
      ActuationGroup g;
      g.label = r.text("label");
      const std::string mode = r.text("mode");
      if (mode == "sinusoid") g.mode = ActuationMode::Sinusoid;
      else if (mode == "constant-expansion") g.mode = ActuationMode::ConstantExpansion;
      else Reader::fail(path + ".mode", "expected \"sinusoid\" or \"constant-expansion\"");
      g.amplitude = r.number("amplitude");
      g.frequency = r.number_or("frequency", 0);
      g.phase = r.number_or("phase", 0);
      r.done();
      scene.actuation_groups.push_back(std::move(g));
    });
    top.list("contact_planes", false, [&](const json& node, const std::string& path) {
      Reader r(node, path);
      ContactPlane p;
      p.normal = r.vector("normal");
      p.offset = r.number("offset");
      p.penalty = r.number_or("penalty", p.penalty);
      p.friction = r.number_or("friction", 0);
      r.done();
      scene.contact_planes.push_back(p);
    });
    top.list("masses", true, [&](const json& node, const std::string& path) {
      Reader r(node, path);
      Mass m;
      m.id = r.index("id");
      m.mass = r.number("m");
      m.position = r.vector("x");
      m.velocity = r.vector_or("v", Vec3d::Zero());
      m.external_force = r.vector_or("f_ext", Vec3d::Zero());
      m.fixed = r.boolean_or("fixed", false);
      r.done();
      scene.masses.push_back(m);
    });
    top.list("springs", true, [&](const json& node, const std::string& path) {
      Reader r(node, path);
      Spring s;
      s.id = r.index("id");
      s.i = r.index("i");
      s.j = r.index("j");
      s.stiffness = r.number("k");
      s.rest_length = r.number("l0");
      if (r.has("group")) s.group = r.text("group");
      r.done();
      scene.springs.push_back(std::move(s));
    });
    top.done();
  }

  if (auto violations = validate_scene(scene); !violations.empty()) {
    std::string message = "scene: invalid";
    for (const auto& v : violations) message += "\n  " + v.field + ": " + v.message;
    const std::string field = violations.front().field;
    throw SceneParseError(message, field, 0, std::move(violations));
  }
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scene '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str());
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scene '" + path.string() + "'");
  out << render_scene(scene);
  if (!out) throw IoError("failed writing scene '" + path.string() + "'");
}

}  // namespace msim
