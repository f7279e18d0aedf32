#include "reachzono/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace reachzono {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of rows");
  if (j.empty()) return Matrix(0, 0);
  const size_t cols = j[0].size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw std::invalid_argument("ragged matrix in JSON");
    }
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json zonotope_to_json(const Zonotope& z) {
  json gens = json::array();
  for (Index j = 0; j < z.num_generators(); ++j) gens.push_back(vector_to_json(z.generator(j)));
  return json{{"center", vector_to_json(z.center())}, {"generators", gens}};
}

Zonotope zonotope_from_json(const json& j) {
  Vector c = vector_from_json(j.at("center"));
  const json& gens = j.at("generators");
  Matrix g(c.size(), static_cast<Index>(gens.size()));
  for (size_t k = 0; k < gens.size(); ++k) {
    Vector col = vector_from_json(gens[k]);
    if (col.size() != c.size()) {
      throw DimensionError("zonotope JSON: generator " + std::to_string(k) + " has dimension " +
                           std::to_string(col.size()) + ", center has " +
                           std::to_string(c.size()));
    }
    g.col(static_cast<Index>(k)) = col;
  }
  return Zonotope(std::move(c), std::move(g));
}

json matzono_to_json(const MatrixZonotope& m) {
  json gens = json::array();
  for (const auto& g : m.generators()) gens.push_back(matrix_to_json(g));
  return json{{"center", matrix_to_json(m.center())}, {"generators", gens}};
}

MatrixZonotope matzono_from_json(const json& j) {
  Matrix c = matrix_from_json(j.at("center"));
  std::vector<Matrix> gens;
  for (const auto& g : j.at("generators")) gens.push_back(matrix_from_json(g));
  return MatrixZonotope(std::move(c), std::move(gens));
}

json box_to_json(const IntervalBox& b) {
  return json{{"lower", vector_to_json(b.lower)}, {"upper", vector_to_json(b.upper)}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j, int indent) {
  write_text(path, j.dump(indent) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

}  // namespace reachzono
