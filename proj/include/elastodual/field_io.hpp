#pragma once
// Plain-text field files.
//
// Vector field: whitespace-separated numbers, node order x fastest then y then z,
// three components per node (components innermost).  Lines starting with '#'
// are comments.
//
// Traction file: one block per Gamma1 face, introduced by a line "face <name>"
// (name in x-, x+, y-, y+, z-, z+) and followed by 3 numbers per face node; the
// face nodes run with the lower-numbered in-plane axis fastest.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "elastodual/grid.hpp"

namespace elastodual {

namespace detail {

inline std::string strip_comments(std::istream& in) {
  std::ostringstream os;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    os << line << '\n';
  }
  return os.str();
}

inline VectorField read_vectors(std::istream& in, std::size_t count, const std::string& what) {
  VectorField v(count);
  for (std::size_t n = 0; n < count; ++n)
    for (int c = 0; c < 3; ++c)
      if (!(in >> v[n](c))) throw ValidationError(what + ": expected " + std::to_string(3 * count) + " numbers");
  return v;
}

}  // namespace detail

inline void write_vector_field(std::ostream& out, const VectorField& v) {
  out << std::setprecision(17);
  for (const Vec3& x : v) out << x(0) << ' ' << x(1) << ' ' << x(2) << '\n';
}

inline VectorField read_vector_field(std::istream& in, const Grid& g) {
  std::istringstream body(detail::strip_comments(in));
  VectorField v = detail::read_vectors(body, g.node_count(), "vector field");
  double extra;
  if (body >> extra) throw ValidationError("vector field: more values than grid nodes");
  return v;
}

inline VectorField load_vector_field(const std::string& path, const Grid& g) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open field file '" + path + "'");
  return read_vector_field(in, g);
}

inline void write_traction(std::ostream& out, const Loads& loads, const Grid& g) {
  for (Face f : kAllFaces) {
    if (g.tag(f) != BoundaryTag::Gamma1) continue;
    out << "face " << face_name(f) << '\n';
    write_vector_field(out, loads.traction[static_cast<int>(f)]);
  }
}

/// Reads traction blocks into loads.traction; faces without a block keep zero traction.
inline void read_traction(std::istream& in, const Grid& g, Loads& loads) {
  std::istringstream body(detail::strip_comments(in));
  std::string word;
  while (body >> word) {
    if (word != "face") throw ValidationError("traction file: expected 'face <name>', got '" + word + "'");
    std::string name;
    body >> name;
    const Face f = parse_face(name);
    if (g.tag(f) != BoundaryTag::Gamma1)
      throw ValidationError(std::string("traction file: face ") + name + " is not tagged Gamma1");
    loads.traction[static_cast<int>(f)] =
        detail::read_vectors(body, g.face_nodes(f).size(), std::string("traction face ") + name);
  }
}

inline void load_traction(const std::string& path, const Grid& g, Loads& loads) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open traction file '" + path + "'");
  read_traction(in, g, loads);
}

}  // namespace elastodual
