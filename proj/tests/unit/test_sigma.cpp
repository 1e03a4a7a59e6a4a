#include <doctest.h>

#include "support.hpp"
#include "weierlab/sigma.hpp"

using namespace wt;
using fields::OmegaField;
using sigma::LaxDerivative;
using sigma::LaxProduct;

namespace {

constexpr cplx I{0.0, 1.0};

OmegaField omega(const Grid& g, const std::function<cplx(cplx)>& fn) { return OmegaField(field(g, fn)); }

double mat_err(const Mat& a, const Mat& b) { return (a - b).norm(); }

Mat identity(int n) { return Mat::Identity(n, n); }

}  // namespace

TEST_CASE("sigma residual") {
  const Grid g = Grid::square(2.0, 33);  // z = 2 at (32, 16)
  CHECK(sigma::sigma_residual(omega(g, [](cplx c) { return c; })).max_abs() < 1e-12);
  CHECK(sigma::sigma_residual(omega(g, [](cplx c) { return std::conj(c); })).max_abs() < 1e-12);
  const auto r = sigma::sigma_residual(omega(g, [](cplx c) { return cplx{std::norm(c)}; }));
  CHECK(std::abs(r(32, 16) - (-15.0 / 17.0)) < 1e-12);
}

TEST_CASE("general residual reduces to the sigma residual bitwise") {
  const Grid g = Grid::square(1.0, 40);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = omega(g, RandomOmega(rng));
    const ComplexField zero(g, cplx{});
    const auto a = sigma::general_residual(w, zero, zero), b = sigma::sigma_residual(w);
    for (std::size_t k = 0; k < g.size(); ++k) REQUIRE(a[k] == b[k]);
  }
}

TEST_CASE("curved background: rho = x, omega = z at 1+i") {
  const Grid g = Grid::square(2.0, 33);  // 1+i at (24, 24)
  const auto w = omega(g, [](cplx c) { return c; });
  const auto rho = field(g, [](cplx c) { return cplx{c.real()}; });
  const Grid shifted(0.5, 1.5, 0.5, 1.5, 9, 9);  // keeps Re(rho) away from 0
  const auto ws = omega(shifted, [](cplx c) { return c; });
  const auto rs = field(shifted, [](cplx c) { return cplx{c.real()}; });
  CHECK(std::abs(sigma::curved_h2(ws, rs)(4, 4) + 0.125) < 1e-12);
  CHECK(std::abs(sigma::curved_residual(ws, rs)(4, 4) - 0.25) < 1e-12);
  CHECK_THROWS_AS(sigma::curved_h2(w, rho), SingularityError);
}

TEST_CASE("Ernst forcing") {
  const Grid g(1.0, 2.0, -0.5, 0.5, 17, 17);
  const auto zf = field(g, [](cplx c) { return c; });
  const auto pot = sigma::HarmonicPotential::from_p(zf);
  CHECK(max_of(pot.harmonic_residual()) < 1e-10);
  CHECK(max_diff(pot.p(), zf) == 0.0);
  SUBCASE("holomorphic omega has no forcing") {
    const auto w = OmegaField(zf);
    CHECK(sigma::ernst_f(pot, w).max_abs() < 1e-12);
    CHECK(sigma::ernst_residual(w, pot).max_abs() < 1e-12);
  }
  SUBCASE("Re(p) = 0 on the grid") {
    const Grid bad = Grid::square(1.0, 17);
    const auto p = sigma::HarmonicPotential::from_p(field(bad, [](cplx c) { return c; }));
    CHECK_THROWS_AS(sigma::ernst_f(p, omega(bad, [](cplx c) { return c + std::conj(c); })), SingularityError);
  }
}

TEST_CASE("relaxation solver") {
  const Grid g = Grid::square(1.0, 32);
  sigma::RelaxParams prm;
  prm.theta = 1.0;
  prm.tol_target = 1e-10;
  SUBCASE("constant boundary is a fixed point") {
    const ComplexField c(g, cplx{0.3, -0.4});
    const auto r = sigma::relax_solve(sigma::Mode::o3, c, c, prm);
    CHECK(r.converged);
    CHECK(max_diff(r.omega.omega(), c) < 1e-14);
  }
  SUBCASE("holomorphic boundary data gives the holomorphic interpolant") {
    const auto target = field(g, [](cplx c) { return 0.2 + c + 0.1 * c * c; });
    const auto r = sigma::relax_solve(sigma::Mode::o3, target, ComplexField(g, cplx{}), prm);
    CHECK(r.converged);
    CHECK(r.residual <= prm.tol_target);
    CHECK(max_diff(r.omega.omega(), target) < 1e-6);
    CHECK(sigma::relax_residual(sigma::Mode::o3, r.omega.omega()) == doctest::Approx(r.residual));
    CHECK(r.history.size() == r.iterations);
  }
  SUBCASE("Ernst mode with p = z agrees with the O(3) solution") {
    const Grid s(1.0, 2.0, -0.5, 0.5, 24, 24);
    const auto zf = field(s, [](cplx c) { return c; });
    const auto pot = sigma::HarmonicPotential::from_p(zf);
    const ComplexField init(s, cplx{1.5});
    const auto e = sigma::relax_solve(sigma::Mode::ernst, zf, init, prm, pot);
    const auto o = sigma::relax_solve(sigma::Mode::o3, zf, init, prm);
    CHECK(e.converged);
    CHECK(max_diff(e.omega.omega(), zf) < 1e-6);
    CHECK(max_diff(e.omega.omega(), o.omega.omega()) < 1e-10);
    CHECK(max_of(cgrid::abs(sigma::ernst_residual(e.omega, pot))) < 1e-6);
  }
  SUBCASE("running out of sweeps returns the best iterate") {
    prm.max_iters = 3;
    const auto r = sigma::relax_solve(sigma::Mode::o3, field(g, [](cplx c) { return c; }),
                                      ComplexField(g, cplx{}), prm);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
  }
  SUBCASE("modes that need a potential") {
    const auto zf = field(g, [](cplx c) { return c; });
    CHECK_THROWS_AS(sigma::relax_solve(sigma::Mode::curved, zf, zf, prm), ConfigError);
    CHECK(sigma::mode_from_string(sigma::to_string(sigma::Mode::ernst)) == sigma::Mode::ernst);
    CHECK_THROWS_AS(sigma::mode_from_string("o4"), ConfigError);
  }
}

TEST_CASE("spin matrix and projector at fixed points") {
  Mat s0(2, 2), s1(2, 2), p0(2, 2), p3(3, 3);
  s0 << I, 0.0, 0.0, -I;
  s1 << 0.0, -I, -I, 0.0;
  p0 << 1.0, 0.0, 0.0, 0.0;
  p3.setZero();
  p3(0, 0) = 1.0;
  CHECK(mat_err(sigma::spin_matrix(cplx{0.0}), s0) < 1e-15);
  CHECK(mat_err(sigma::spin_matrix(cplx{1.0}), s1) < 1e-15);
  CHECK(mat_err(sigma::projector2(cplx{0.0}), p0) < 1e-15);
  CHECK(mat_err(sigma::projector3(cplx{0.0}, cplx{0.0}), p3) < 1e-15);
}

TEST_CASE("spin matrix and projector identities for random values") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const cplx w{n(rng), n(rng)}, w2{n(rng), n(rng)};
    const Mat S = sigma::spin_matrix(w);
    CHECK(mat_err(S * S, -identity(2)) < 1e-12);
    CHECK(mat_err(S.adjoint(), -S) < 1e-12);
    CHECK(std::abs(S.trace()) < 1e-12);
    const Mat P = sigma::projector2(w);
    CHECK(mat_err(P * P, P) < 1e-12);
    CHECK(mat_err(P.adjoint(), P) < 1e-12);
    CHECK(std::abs(P.trace() - 1.0) < 1e-12);
    CHECK(mat_err(S, I * (2.0 * sigma::projector2(-w) - identity(2))) < 1e-12);
    const Mat P3 = sigma::projector3(w, w2);
    CHECK(mat_err(P3 * P3, P3) < 1e-12);
    CHECK(mat_err(P3.adjoint(), P3) < 1e-12);
    CHECK(std::abs(P3.trace() - 1.0) < 1e-12);
  }
}

TEST_CASE("field versions agree with the pointwise matrices") {
  const Grid g = Grid::square(1.0, 12);
  const auto w = omega(g, [](cplx c) { return c * c - 0.5 * std::conj(c); });
  const auto S = sigma::spin_matrix(w);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(mat_err(S.at(k), sigma::spin_matrix(w.omega()[k])) == 0.0);
}

TEST_CASE("Lax data and matrices") {
  const Grid g = Grid::square(2.0, 64);
  const ComplexField one(g, cplx{1.0});
  const auto lx = sigma::LaxData::make(one, cplx{2.0});
  SUBCASE("constant rho, lambda = 2") {
    CHECK(max_diff(lx.gamma, one) < 1e-13);
    CHECK(max_diff(lx.varrho, ComplexField(g, cplx{-2.0 + std::sqrt(3.0)})) < 1e-14);
    const auto w = omega(g, [](cplx c) { return c; });
    const auto S = sigma::spin_matrix(w);
    const auto [U, V] = sigma::lax_matrices(w, lx, {LaxDerivative::zbar, LaxProduct::reversed});
    const auto expect = (1.0 / (std::sqrt(3.0) - 1.0)) * (S * d_z(S));
    CHECK(max_of(frobenius(U - expect)) < 1e-13);
  }
  SUBCASE("constant omega gives U = V = 0") {
    const OmegaField w(ComplexField(g, cplx{0.4, 0.1}));
    for (const auto& v : sigma::lax_variants()) {
      const auto [U, V] = sigma::lax_matrices(w, lx, v);
      CHECK(max_of(frobenius(U)) < 1e-13);
      CHECK(max_of(frobenius(V)) < 1e-13);
    }
  }
  SUBCASE("compatibility of trivial pairs") {
    const MatrixField Z(g, 2);
    CHECK(max_of(sigma::lax_residual(Z, Z)) == 0.0);
    const auto C = MatrixField::from_function(g, 2, [](std::size_t) {
      Mat m(2, 2);
      m << 1.0, I, 2.0, -1.0;
      return m;
    });
    CHECK(max_of(sigma::lax_residual(C, C)) < 1e-13);
  }
  SUBCASE("spectral parameter on a pole") {
    const auto bad = sigma::LaxData::make(one, cplx{1.0});
    CHECK_THROWS_AS(sigma::lax_matrices(omega(g, [](cplx c) { return c; }), bad), SpectralParameterError);
  }
}

TEST_CASE("Lax variant selection and convergence order") {
  const auto sel = sigma::select_lax_variant(48);
  CHECK(sel.selected == sigma::LaxVariant{LaxDerivative::zbar, LaxProduct::reversed});
  CHECK(sel.residuals.size() == 4);

  const cgrid::Stencil st{};
  std::vector<double> res;
  for (std::size_t n : {48, 96}) {
    const Grid g = Grid::square(2.0, n);
    const auto w = omega(g, [](cplx c) { return c; });
    const auto lx = sigma::LaxData::make(ComplexField(g, cplx{0.5}), cplx{2.0});
    const auto [U, V] = sigma::lax_matrices(w, lx, sel.selected);
    res.push_back(cgrid::summarize(sigma::lax_residual(U, V), st.radius()).interior_max);
    CHECK(res.back() < cgrid::tolerance(g, 4));
  }
  CHECK(order_of(res[0], res[1]) > st.order - 0.3);
}
