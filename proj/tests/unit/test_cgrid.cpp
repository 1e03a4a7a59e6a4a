#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace wt;
using cgrid::GridPath;
using cgrid::Quadrature;
using cgrid::Scheme;
using cgrid::Stencil;

namespace {

const Stencil kStencils[] = {{2, Scheme::explicit_fd}, {4, Scheme::explicit_fd}, {4, Scheme::compact}};

std::string name(const Stencil& st) {
  return std::to_string(st.order) + (st.scheme == Scheme::compact ? "/compact" : "/explicit");
}

// Random 4-connected walk from a to b that only steps towards b.
GridPath random_staircase(const Node& a, const Node& b, std::mt19937_64& rng) {
  std::vector<Node> nodes{a};
  Node cur = a;
  std::bernoulli_distribution coin(0.5);
  while (!(cur == b)) {
    const bool can_x = cur.i != b.i, can_y = cur.j != b.j;
    const bool step_x = can_x && (!can_y || coin(rng));
    if (step_x) cur.i = cur.i < b.i ? cur.i + 1 : cur.i - 1;
    else cur.j = cur.j < b.j ? cur.j + 1 : cur.j - 1;
    nodes.push_back(cur);
  }
  return GridPath(std::move(nodes));
}

}  // namespace

TEST_CASE("grid nodes are row-major and reproducible") {
  const Grid g(-1.0, 3.0, -2.0, 2.0, 9, 17);
  CHECK(g.hx() == 0.5);
  CHECK(g.hy() == 0.25);
  CHECK(g.index(3, 2) == 2 * 9 + 3);
  CHECK(g.node(g.index(5, 11)) == Node{5, 11});
  CHECK(g.z(2, 4) == cplx{0.0, -1.0});

  const Grid h(-1.0, 3.0, -2.0, 2.0, 9, 17);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g.z(g.node(k)) == h.z(h.node(k)));

  CHECK_THROWS_AS(Grid(-1, 1, -1, 1, 7, 8), ConfigError);
  CHECK_THROWS_AS(Grid(1, -1, -1, 1, 8, 8), ConfigError);
  CHECK_THROWS_AS((Stencil{3, Scheme::explicit_fd}.validate(g)), ConfigError);
  CHECK(cgrid::tolerance(Grid::square(1.0, 21), 4) == doctest::Approx(10.0 * std::pow(0.1, 4)));
}

TEST_CASE("fields reject non-finite values and mismatched grids") {
  const Grid g = Grid::square(1.0, 8);
  CHECK_THROWS_AS(ComplexField(g, cplx{NAN, 0.0}), SingularityError);
  CHECK_THROWS_AS(ComplexField(g, std::vector<cplx>(5)), ConfigError);
  const ComplexField a(g, cplx{1.0}), b(Grid::square(2.0, 8), cplx{1.0});
  CHECK_THROWS_AS(a + b, ConfigError);
  CHECK_THROWS_AS(cgrid::divide(a, ComplexField(g, cplx{}), 1e-12), SingularityError);
}

TEST_CASE("Wirtinger derivatives of linear fields are exact") {
  const Grid g = Grid::square(1.5, 24);
  const auto z = field(g, [](cplx c) { return c; });
  const auto zb = z.conj();
  for (const auto& st : kStencils) {
    CAPTURE(name(st));
    CHECK(max_diff(cgrid::d_z(z, st), ComplexField(g, cplx{1.0})) < 1e-12);
    CHECK(cgrid::d_zbar(z, st).max_abs() < 1e-12);
    CHECK(cgrid::d_z(zb, st).max_abs() < 1e-12);
    CHECK(max_diff(cgrid::d_zbar(zb, st), ComplexField(g, cplx{1.0})) < 1e-12);
  }
}

TEST_CASE("d_z of z^2 at 1+i") {
  const Grid g = Grid::square(2.0, 33);  // h = 1/8, 1+i is node (24, 24)
  const auto f = field(g, [](cplx c) { return c * c; });
  for (const auto& st : kStencils) {
    CAPTURE(name(st));
    const cplx d = cgrid::d_z(f, st)(24, 24);
    CHECK(std::abs(d - cplx{2.0, 2.0}) < cgrid::tolerance(g, st.order));
  }
}

TEST_CASE("derivative error decreases at the stencil order") {
  auto fn = [](cplx c) { return std::exp(c) + std::sin(std::conj(c)) * 0.5; };
  auto dz = [](cplx c) { return std::exp(c); };
  for (const auto& st : kStencils) {
    CAPTURE(name(st));
    std::vector<double> err;
    for (std::size_t n : {33, 65, 129}) {
      const Grid g = Grid::square(1.0, n);
      err.push_back(max_diff(cgrid::d_z(field(g, fn), st), field(g, dz)));
    }
    CHECK(order_of(err[0], err[1]) > st.order - 0.3);
    CHECK(order_of(err[1], err[2]) > st.order - 0.3);
  }
}

TEST_CASE("derivatives are linear and commute with conjugation") {
  const Grid g = Grid::square(1.0, 40);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const RandomOmega a(rng), b(rng);
    const auto fa = field(g, [&](cplx c) { return std::exp(a(c)) * 0.1; });
    const auto fb = field(g, [&](cplx c) { return b(c); });
    const cplx s{0.3, -1.7};
    for (const auto& st : kStencils) {
      const auto lhs = cgrid::d_z(fa * s + fb, st);
      const auto rhs = cgrid::d_z(fa, st) * s + cgrid::d_z(fb, st);
      CHECK(max_diff(lhs, rhs) < 1e-12 * (1.0 + rhs.max_abs()));
      CHECK(max_diff(cgrid::d_zbar(fa.conj(), st), cgrid::d_z(fa, st).conj()) < 1e-13);
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const Grid g = Grid::square(2.0, 97);
  const auto f = field(g, [](cplx c) { return std::exp(0.3 * c) / (1.0 + std::norm(c)); });
  const std::size_t saved = cgrid::threads();
  cgrid::set_threads(1);
  const auto a = cgrid::d_z(f);
  const double sa = cgrid::summarize(cgrid::abs(f)).l2;
  cgrid::set_threads(4);
  const auto b = cgrid::d_z(f);
  const double sb = cgrid::summarize(cgrid::abs(f)).l2;
  cgrid::set_threads(saved);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(a[k] == b[k]);
  CHECK(sa == sb);
}

TEST_CASE("harmonic residual") {
  const Grid g = Grid::square(1.0, 128);
  SUBCASE("x^2 - y^2 is harmonic") {
    const auto f = field(g, [](cplx c) { return cplx{(c * c).real()}; });
    CHECK(max_of(cgrid::harmonic_residual(f)) < 1e-9);
  }
  SUBCASE("x^2 has Laplacian 2") {
    const auto f = field(g, [](cplx c) { return cplx{c.real() * c.real()}; });
    const auto r = cgrid::harmonic_residual(f);
    CHECK(max_of(r) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(min_of(r) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("e^x cos y") {
    const auto f = field(g, [](cplx c) { return cplx{std::exp(c.real()) * std::cos(c.imag())}; });
    CHECK(max_of(cgrid::harmonic_residual(f)) < 1e-4);
  }
}

TEST_CASE("harmonic conjugate") {
  const Grid g = Grid::square(1.0, 65);  // base node at z = 0
  REQUIRE(g.z(g.base_node()) == cplx{});
  SUBCASE("rho = x gives beta = y") {
    const auto beta = cgrid::harmonic_conjugate(field(g, [](cplx c) { return cplx{c.real()}; }));
    CHECK(max_diff(beta, field(g, [](cplx c) { return cplx{c.imag()}; })) < 1e-12);
  }
  SUBCASE("rho = x^2 - y^2 gives beta = 2xy") {
    const auto beta = cgrid::harmonic_conjugate(field(g, [](cplx c) { return cplx{(c * c).real()}; }));
    CHECK(max_diff(beta, field(g, [](cplx c) { return cplx{(c * c).imag()}; })) < 1e-10);
  }
  SUBCASE("constant rho gives zero") {
    CHECK(cgrid::harmonic_conjugate(ComplexField(g, cplx{3.0})).max_abs() < 1e-14);
  }
  SUBCASE("non-harmonic input is rejected") {
    const auto f = field(g, [](cplx c) { return cplx{c.real() * c.real()}; });
    CHECK_THROWS_AS(cgrid::harmonic_conjugate(f), PreconditionError);
  }
  SUBCASE("Cauchy-Riemann holds for Re exp(z)") {
    const auto rho = field(g, [](cplx c) { return cplx{std::exp(c).real()}; });
    const auto beta = cgrid::harmonic_conjugate(rho);
    const auto gamma = rho + cplx{0.0, 1.0} * beta;
    CHECK(max_of(cgrid::abs(cgrid::d_zbar(gamma)), cgrid::Stencil{}.radius()) < cgrid::tolerance(g, 4));
  }
}

TEST_CASE("integrate_oneform") {
  const Grid g = Grid::square(2.0, 65);  // h = 1/16; z = 0 at (32, 32)
  const Node origin{32, 32};
  SUBCASE("exact differential of Re z^2 from 0 to 1+i") {
    const auto phi = field(g, [](cplx c) { return cplx{(c * c).real()}; });
    const auto path = GridPath::staircase(origin, {48, 48});
    for (auto q : {Quadrature::trapezoid, Quadrature::corrected}) {
      CHECK(std::abs(cgrid::integrate_oneform(cgrid::d_z(phi), cgrid::d_zbar(phi), path, q)) < 1e-12);
    }
  }
  SUBCASE("dz from 0 to 1") {
    const auto path = GridPath::staircase(origin, {48, 32});
    const cplx v = cgrid::integrate_oneform(ComplexField(g, cplx{1.0}), ComplexField(g, cplx{}), path);
    CHECK(std::abs(v - cplx{1.0}) < 1e-14);
  }
  SUBCASE("closed loop of a closed form") {
    const auto phi = field(g, [](cplx c) { return std::exp(0.5 * c) + std::norm(c); });
    const auto loop = GridPath::through({origin, {60, 32}, {60, 50}, {10, 50}, {10, 5}, origin});
    const cplx v = cgrid::integrate_oneform(cgrid::d_z(phi), cgrid::d_zbar(phi), loop, Quadrature::corrected);
    CHECK(std::abs(v) < 1e-9);
  }
  SUBCASE("invalid paths") {
    CHECK_THROWS_AS(GridPath({{0, 0}, {1, 1}}), ConfigError);
    const GridPath outside({{63, 0}, {64, 0}, {65, 0}});
    CHECK_THROWS_AS(cgrid::integrate_oneform(ComplexField(g, cplx{1.0}), ComplexField(g, cplx{}), outside),
                    ConfigError);
  }
}

TEST_CASE("closedness residual") {
  const Grid g = Grid::square(1.0, 32);
  const auto z = field(g, [](cplx c) { return c; });
  CHECK(max_of(cgrid::closedness_residual(z, z.conj())) < 1e-12);
  const auto r = cgrid::closedness_residual(z.conj(), ComplexField(g, cplx{}));
  CHECK(max_of(r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(min_of(r) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closedness of exact differentials stays below tol(h) under refinement") {
  auto phi = [](cplx c) { return std::exp(0.7 * c.real()) * std::cos(1.3 * c.imag()) + std::norm(c) * c; };
  for (const auto& st : kStencils) {
    CAPTURE(name(st));
    for (std::size_t n : {33, 65, 129}) {
      const Grid g = Grid::square(1.0, n);
      const auto f = field(g, phi);
      CHECK(max_of(cgrid::closedness_residual(cgrid::d_z(f, st), cgrid::d_zbar(f, st), st)) <
            cgrid::tolerance(g, st.order));
    }
  }
}

TEST_CASE("staircase paths with equal endpoints agree for closed forms") {
  const Grid g = Grid::square(1.0, 81);
  std::mt19937_64 rng(11);
  auto phi = [](cplx c) { return c * c * c - 3.0 * std::norm(c) + cplx{0.0, 1.0} * c.real() * c.imag(); };
  const auto f = field(g, phi);
  const auto F = cgrid::d_z(f), G = cgrid::d_zbar(f);
  REQUIRE(max_of(cgrid::closedness_residual(F, G)) < 1e-7);
  const cgrid::OneFormIntegrator integ(F, G, Quadrature::corrected);
  std::uniform_int_distribution<std::size_t> pick(0, 80);
  for (int trial = 0; trial < 20; ++trial) {
    const Node a{pick(rng), pick(rng)}, b{pick(rng), pick(rng)};
    const cplx p = integ.along(random_staircase(a, b, rng));
    const cplx q = integ.along(random_staircase(a, b, rng));
    const cplx exact = phi(g.z(b)) - phi(g.z(a));
    CHECK(std::abs(p - q) <= 1e-8 * std::max(1.0, std::abs(exact)));
    CHECK(std::abs(p - exact) <= 1e-8 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("cumulative integration families") {
  const Grid g = Grid::square(1.0, 41);
  const auto f = field(g, [](cplx c) { return std::sin(c) + 0.2 * std::norm(c); });
  const cgrid::OneFormIntegrator integ(cgrid::d_z(f), cgrid::d_zbar(f), Quadrature::corrected);
  const Node base = g.base_node();
  const auto xf = integ.cumulative(base, true), yf = integ.cumulative(base, false);
  CHECK(xf.at(base) == cplx{});
  CHECK(max_diff(xf, yf) < 1e-7);
  for (std::size_t k = 0; k < g.size(); k += 37) {
    CHECK(std::abs(xf[k] - integ.along(GridPath::staircase(base, g.node(k)))) < 1e-12);
  }
}

TEST_CASE("cubic sampling") {
  const Grid g = Grid::square(1.0, 17);
  auto cubic = [](cplx c) { return c * c * c - 2.0 * std::conj(c) * c + cplx{0.5, 0.25}; };
  const auto f = field(g, cubic);
  for (cplx p : {cplx{0.013, -0.77}, cplx{0.999, 0.999}, cplx{-1.0, 0.3}}) {
    CHECK(std::abs(cgrid::sample(f, p) - cubic(p)) < 1e-12);
  }
  CHECK_THROWS_AS(cgrid::sample(f, {1.5, 0.0}), ConfigError);
}

TEST_CASE("pairwise summation") {
  std::vector<double> xs(1001, 0.1);
  CHECK(cgrid::pairwise_sum(xs) == doctest::Approx(100.1).epsilon(1e-14));
  CHECK(cgrid::pairwise_sum({}) == 0.0);
}
