#ifndef REACHZONO_IO_HPP_
#define REACHZONO_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "reachzono/setalg.hpp"

namespace reachzono {

using json = nlohmann::json;

/// Thrown when an artifact required by a stage is absent.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(const std::filesystem::path& path)
      : std::runtime_error("missing artifact: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

/// Row-major nested arrays.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// { "center": [...], "generators": [[...], ...] }, one inner array per generator.
json zonotope_to_json(const Zonotope& z);
Zonotope zonotope_from_json(const json& j);

/// { "center": [[...]...], "generators": [[[...]...]...] }
json matzono_to_json(const MatrixZonotope& m);
MatrixZonotope matzono_from_json(const json& j);

json box_to_json(const IntervalBox& b);

json read_json(const std::filesystem::path& path);

/// Writes with a trailing newline; output is byte-stable for identical values.
void write_json(const std::filesystem::path& path, const json& j, int indent = 1);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Hex SHA-256 digest.
std::string sha256_hex(const std::string& bytes);

}  // namespace reachzono

#endif  // REACHZONO_IO_HPP_
