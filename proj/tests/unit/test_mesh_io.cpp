#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "weierlab/mesh_io.hpp"

using namespace wt;

namespace {

weier::Immersion plane(std::size_t dims = 3) {
  const Grid g = Grid::square(1.0, 8);
  weier::Immersion im;
  im.grid = g;
  im.mode = "cmc";
  std::vector<double> x(g.size()), y(g.size()), z(g.size(), -0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    x[k] = g.z(g.node(k)).real();
    y[k] = g.z(g.node(k)).imag() / 3.0;
  }
  im.coords = {RealField(g, x), RealField(g, y), RealField(g, z)};
  im.coords.resize(dims, RealField(g, 0.0));
  return im;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("OBJ layout") {
  std::ostringstream os;
  mesh_io::write_obj(os, plane());
  const auto l = lines(os.str());
  REQUIRE(l.size() == 1 + 64 + 98);
  CHECK(l[0] == "# weierlab cmc 8x8");
  CHECK(l[1] == "v -1 -0.333333333 0");
  CHECK(l[2] == "v -0.714285714 -0.333333333 0");
  CHECK(l[64] == "v 1 0.333333333 0");
  CHECK(l[65] == "f 1 2 10");
  CHECK(l[66] == "f 1 10 9");
  CHECK(l.back() == "f 55 64 63");
  CHECK(os.str().find("-0 ") == std::string::npos);
}

TEST_CASE("PLY layout") {
  std::ostringstream os;
  mesh_io::write_ply(os, plane());
  const auto l = lines(os.str());
  REQUIRE(l.size() == 10 + 64 + 98);
  CHECK(l[0] == "ply");
  CHECK(l[1] == "format ascii 1.0");
  CHECK(l[3] == "element vertex 64");
  CHECK(l[7] == "element face 98");
  CHECK(l[9] == "end_header");
  CHECK(l[10] == "-1 -0.333333333 0");
  CHECK(l[74] == "3 0 1 9");
  CHECK(l[75] == "3 0 9 8");
}

TEST_CASE("export is deterministic and needs three coordinates") {
  std::ostringstream a, b;
  mesh_io::write_obj(a, plane(8));
  mesh_io::write_obj(b, plane(8));
  CHECK(a.str() == b.str());
  std::ostringstream c;
  CHECK_THROWS_AS(mesh_io::write_obj(c, plane(2)), ConfigError);
  CHECK(mesh_io::format_from_string("ply") == mesh_io::Format::ply);
  CHECK(mesh_io::extension(mesh_io::Format::obj) == ".obj");
  CHECK_THROWS_AS(mesh_io::format_from_string("stl"), ConfigError);
  CHECK_THROWS_AS(mesh_io::write_mesh("/nonexistent-dir/x.obj", plane(), mesh_io::Format::obj), Error);
}
