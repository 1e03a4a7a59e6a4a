#include "weierlab/mesh_io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <vector>

namespace weierlab::mesh_io {

namespace {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

void require_3d(const weier::Immersion& im) {
  if (im.dim() < 3) throw ConfigError("mesh export needs at least three coordinates");
  if (im.grid.nx() < 2 || im.grid.ny() < 2) throw ConfigError("mesh export needs at least 2x2 nodes");
}

std::vector<std::array<std::size_t, 3>> triangles(const cgrid::Grid& g) {
  std::vector<std::array<std::size_t, 3>> t;
  t.reserve(2 * (g.nx() - 1) * (g.ny() - 1));
  for (std::size_t j = 0; j + 1 < g.ny(); ++j) {
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i + 1, j);
      const std::size_t c = g.index(i + 1, j + 1), d = g.index(i, j + 1);
      t.push_back({a, b, c});
      t.push_back({a, c, d});
    }
  }
  return t;
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "obj") return Format::obj;
  if (s == "ply") return Format::ply;
  throw ConfigError("unknown mesh format '" + s + "' (expected obj or ply)");
}

std::string extension(Format f) { return f == Format::obj ? ".obj" : ".ply"; }

void write_obj(std::ostream& os, const weier::Immersion& im) {
  require_3d(im);
  const auto& g = im.grid;
  os << "# weierlab " << im.mode << " " << g.nx() << "x" << g.ny() << "\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    os << "v " << fmt9(im.coords[0].values[k]) << ' ' << fmt9(im.coords[1].values[k]) << ' '
       << fmt9(im.coords[2].values[k]) << '\n';
  }
  for (const auto& t : triangles(g)) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_ply(std::ostream& os, const weier::Immersion& im) {
  require_3d(im);
  const auto& g = im.grid;
  const auto tris = triangles(g);
  os << "ply\nformat ascii 1.0\n"
     << "comment weierlab " << im.mode << " " << g.nx() << "x" << g.ny() << "\n"
     << "element vertex " << g.size() << "\n"
     << "property double x\nproperty double y\nproperty double z\n"
     << "element face " << tris.size() << "\n"
     << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    os << fmt9(im.coords[0].values[k]) << ' ' << fmt9(im.coords[1].values[k]) << ' '
       << fmt9(im.coords[2].values[k]) << '\n';
  }
  for (const auto& t : tris) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_mesh(const std::string& path, const weier::Immersion& im, Format f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  if (f == Format::obj) write_obj(os, im);
  else write_ply(os, im);
  if (!os) throw Error("write to '" + path + "' failed");
}

}  // namespace weierlab::mesh_io
