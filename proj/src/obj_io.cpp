#include "arapreg/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace arapreg {

namespace {

// "12/5/7" -> 12; rejects zero and non-numeric prefixes.
int parse_face_index(const std::string& token, size_t line_no) {
  size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (pos < token.size() && token[pos] != '/')
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  if (value <= 0)
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": face indices are 1-based, got " + std::to_string(value));
  return static_cast<int>(value);
}

}  // namespace

Mesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  size_t line_no = 0;
  bool warned_other = false;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ss >> p.x() >> p.y() >> p.z()))
        throw std::runtime_error("line " + std::to_string(line_no) + ": malformed vertex record");
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.size() != 3)
        throw std::runtime_error("line " + std::to_string(line_no) + ": only triangular faces are supported (got " +
                                 std::to_string(tokens.size()) + " vertices)");
      std::array<int, 3> tri{};
      for (int c = 0; c < 3; ++c) {
        const int idx = parse_face_index(tokens[static_cast<size_t>(c)], line_no);
        if (idx > static_cast<int>(vertices.size()))
          throw std::runtime_error("line " + std::to_string(line_no) + ": face index " +
                                   std::to_string(idx) + " out of range");
        tri[static_cast<size_t>(c)] = idx - 1;
      }
      faces.push_back(tri);
    } else if (!warned_other) {
      std::cerr << "load_obj: ignoring '" << tag << "' records in " << path << "\n";
      warned_other = true;
    }
  }
  return Mesh::build(std::move(vertices), std::move(faces));
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  char buf[128];
  for (const auto& p : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace arapreg
