#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msim/model.hpp"

namespace msim {

inline constexpr int kSceneSchemaVersion = 1;

/// Malformed or invalid scene document. `field` is a path such as
/// "springs[4].k" (empty for syntax errors); `line` is 1-based, 0 if unknown.
class SceneParseError : public Error {
 public:
  SceneParseError(std::string message, std::string field = {}, std::size_t line = 0,
                  std::vector<Violation> violations = {});

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::string field_;
  std::size_t line_;
  std::vector<Violation> violations_;
};

/// JSON document, one mass/spring/group/plane/material per line. Doubles are
/// written in shortest round-trip form, so parse(render(s)) is bit-exact.
std::string render_scene(const Scene& scene);

/// Strict parse: unknown keys, missing required keys and wrong types are
/// errors, and the result must pass validate_scene.
Scene parse_scene(std::string_view text);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);

}  // namespace msim
