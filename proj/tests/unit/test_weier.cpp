#include <doctest.h>

#include <Eigen/Dense>

#include "support.hpp"
#include "weierlab/sigma.hpp"
#include "weierlab/weier.hpp"

using namespace wt;
using fields::OmegaField;
using fields::SpinorPair;
using weier::GwrData;

namespace {

constexpr cplx I{0.0, 1.0};

OmegaField omega(const Grid& g, const std::function<cplx(cplx)>& fn) { return OmegaField(field(g, fn)); }

ComplexField real_field(const Grid& g, const std::function<double(cplx)>& fn) {
  return field(g, [&](cplx c) { return cplx{fn(c)}; });
}

SpinorPair sphere(const Grid& g) {
  return SpinorPair(field(g, [](cplx c) { return c / (1.0 + std::norm(c)); }),
                    field(g, [](cplx c) { return cplx{1.0 / (1.0 + std::norm(c))}; }));
}

double worst(const std::array<ComplexField, 3>& r, std::size_t band = 0) {
  double m = 0.0;
  for (const auto& f : r) m = std::max(m, max_of(cgrid::abs(f), band));
  return m;
}

// Least-squares sphere through the points: returns (centre, radius, max deviation).
std::tuple<Eigen::Vector3d, double, double> fit_sphere(const weier::Immersion& im) {
  const std::size_t n = im.grid.size();
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd p = im.point(k);
    A.row(k) << 2 * p(0), 2 * p(1), 2 * p(2), 1.0;
    b(k) = p.squaredNorm();
  }
  const Eigen::Vector4d s = A.colPivHouseholderQr().solve(b);
  const Eigen::Vector3d c = s.head<3>();
  const double R = std::sqrt(s(3) + c.squaredNorm());
  double dev = 0.0;
  for (std::size_t k = 0; k < n; ++k) dev = std::max(dev, std::abs((im.point(k) - c).norm() - R));
  return {c, R, dev};
}

}  // namespace

TEST_CASE("classical integrands") {
  SUBCASE("plane") {
    const Grid g = Grid::square(1.0, 17);
    const SpinorPair sp(ComplexField(g, cplx{1.0}), ComplexField(g, cplx{}));
    const auto forms = weier::classical_integrands(sp);
    REQUIRE(forms.dim() == 3);
    CHECK(forms.closedness_max() < 1e-14);
    CHECK(forms.realness_defect() < 1e-15);
    CHECK(forms.forms[2].F.max_abs() == 0.0);
    const auto im = weier::build_immersion(forms, g.base_node());
    CHECK(max_of(cgrid::abs(ComplexField(g, std::vector<cplx>(im.coords[2].values.begin(),
                                                                  im.coords[2].values.end())))) == 0.0);
  }
  SUBCASE("minimal preset is closed") {
    const Grid g = fields::preset_grid("minimal", 64);
    const auto p = fields::make_preset("minimal", g);
    CHECK(weier::classical_integrands(*p.spinors).closedness_max() < 1e-8);
  }
  SUBCASE("non-analytic data is not closed") {
    const Grid g = Grid::square(1.0, 64);
    const SpinorPair sp(ComplexField(g, cplx{1.0}), field(g, [](cplx c) { return std::conj(c); }));
    const auto forms = weier::classical_integrands(sp);
    CHECK(forms.closedness_max() >= 0.1);
    CHECK_THROWS_AS(weier::build_immersion(forms, g.base_node()), PreconditionError);
    weier::ImmersionOptions opt;
    opt.force = true;
    const auto im = weier::build_immersion(forms, g.base_node(), opt);
    CHECK(im.warnings.size() == 1);
    CHECK(im.path_deviation > 1e-3);
  }
}

TEST_CASE("generalised integrands on the sphere") {
  const Grid g = Grid::square(2.0, 128);
  const auto sp = sphere(g);
  const auto forms = weier::gwr_integrands(sp, GwrData::cmc(g));
  CHECK(forms.closedness_max() < 1e-6);
  CHECK(forms.realness_defect() < 1e-15);
  CHECK(worst(weier::constraint_residual_11(sp, GwrData::cmc(g))) < cgrid::tolerance(g, 4));

  const ComplexField zero(g, cplx{});
  const SpinorPair none(zero, zero);
  CHECK(worst(weier::constraint_residual_11(none, GwrData::cmc(g))) == 0.0);
}

TEST_CASE("g = J/u^2 solves the reduced constraints") {
  const Grid g = Grid::square(2.0, 128);
  const auto sp = sphere(g);
  const auto u = fields::u_of(sp);
  for (auto J : std::vector<std::function<cplx(cplx)>>{
           [](cplx) { return cplx{1.0}; }, [](cplx c) { return c; }, [](cplx c) { return c * c; }}) {
    const auto gd = GwrData::from_J(field(g, J), u);
    CHECK(worst(weier::constraint_residual_17(sp, gd.g)) < 1e-6);
    CHECK(max_of(gd.J_analyticity()) < 1e-12);
    CHECK(weier::gwr_integrands(sp, gd).closedness_max() < 1e-6);
  }
  const auto bad = field(g, [](cplx c) { return std::conj(c); });
  CHECK(worst(weier::constraint_residual_17(sp, bad)) > 0.1);
}

TEST_CASE("explicit current coefficients") {
  const Grid g = Grid::square(1.0, 9);  // z = 0 at (4, 4)
  SUBCASE("sigma = y, omega = 0") {
    const auto km = weier::km_matrices(OmegaField(ComplexField(g, cplx{})), ComplexField(g, cplx{2.0}),
                                       real_field(g, [](cplx c) { return c.imag(); }));
    const Mat K = km.K.at(Node{4, 4}), M = km.M.at(Node{4, 4});
    CHECK(std::abs(K(0, 0) + 1.0) < 1e-14);  // n1 = -1
    CHECK(std::abs(K(1, 1) - 1.0) < 1e-14);
    CHECK(std::abs(M(0, 0) - 1.0) < 1e-14);  // n2 = 1
    CHECK(std::abs(M(1, 1) + 1.0) < 1e-14);
  }
  SUBCASE("m = -4 rho at omega = 0") {
    const auto km = weier::km_matrices(omega(g, [](cplx c) { return c; }), ComplexField(g, cplx{0.7}),
                                       ComplexField(g, cplx{}));
    CHECK(std::abs(km.M.at(Node{4, 4})(1, 0) + 2.8) < 1e-14);
    CHECK(std::abs(km.K.at(Node{4, 4})(0, 1) - 2.8) < 1e-14);  // K = -M^dagger
  }
}

TEST_CASE("K = -M^dagger for random data") {
  const Grid g = Grid::square(1.0, 24);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomOmega a(rng), b(rng), r(rng), s(rng);
    const auto w1 = omega(g, a), w2 = omega(g, b);
    const auto rho = field(g, [&](cplx c) { return cplx{1.0 + 0.1 * std::abs(r(c))}; });
    const auto sig = field(g, [&](cplx c) { return cplx{s(c).real()}; });
    CHECK(max_of(weier::km_symmetry_residual(weier::km_matrices(w1, rho, sig))) < 1e-12);
    CHECK(max_of(weier::km_symmetry_residual(weier::km_matrices_commutator(w1, rho, sig))) < 1e-12);
    CHECK(max_of(weier::km_symmetry_residual(weier::km_matrices(w1, w2, rho, sig))) < 1e-12);
  }
}

TEST_CASE("explicit and commutator currents agree") {
  std::vector<double> err;
  for (std::size_t n : {33, 65}) {
    const Grid g = Grid::square(1.0, n);
    const auto w = omega(g, [](cplx c) { return c + 0.3 * std::conj(c) * c; });
    const auto rho = real_field(g, [](cplx c) { return 1.0 + 0.2 * c.real(); });
    const auto sig = real_field(g, [](cplx c) { return c.real() * c.imag(); });
    const auto a = weier::km_matrices(w, rho, sig), b = weier::km_matrices_commutator(w, rho, sig);
    err.push_back(std::max(max_of(frobenius(a.K - b.K)), max_of(frobenius(a.M - b.M))));
  }
  CHECK(err.back() < 1e-4);
  CHECK(order_of(err[0], err[1]) > 3.5);
}

TEST_CASE("omega and psi forms of the currents") {
  const Grid g = Grid::square(2.0, 128);
  const auto w = omega(g, [](cplx c) { return c; });
  const auto sp = fields::psi_of_omega(w, ComplexField(g, cplx{}));
  const ComplexField rho(g, cplx{1.0}), sig(g, cplx{});
  const auto c = weier::km_consistency_residual(w, sp, rho, sig);
  CHECK(max_of(c.K) < cgrid::tolerance(g, 4));
  CHECK(max_of(c.M) < cgrid::tolerance(g, 4));
  CHECK(c.flagged(cgrid::tolerance(g, 4)).empty());

  // the other branch psi -> -psi gives the same currents
  const cplx ph{-1.0, 0.0};
  const SpinorPair rot(sp.psi1 * ph, sp.psi2 * ph);
  const auto d = weier::km_consistency_residual(w, rot, rho, sig);
  CHECK(std::abs(max_of(d.K) - max_of(c.K)) < 1e-12);
}

TEST_CASE("conservation holds exactly for solutions of the sigma model") {
  const Grid g = Grid::square(2.0, 96);
  const double tol = cgrid::tolerance(g, 4);
  const ComplexField one(g, cplx{1.0}), zero(g, cplx{});
  SUBCASE("constant omega with harmonic sigma") {
    const auto sig = real_field(g, [](cplx c) { return c.real() * c.real() - c.imag() * c.imag(); });
    const auto km = weier::km_matrices(OmegaField(ComplexField(g, cplx{0.2, 0.5})), one, sig);
    CHECK(max_of(weier::conservation_residual(km)) < tol);
  }
  SUBCASE("three solutions and three non-solutions") {
    for (auto [fn, solves] : std::vector<std::pair<std::function<cplx(cplx)>, bool>>{
             {[](cplx c) { return c; }, true},
             {[](cplx c) { return std::conj(c) * 0.5; }, true},
             {[](cplx c) { return c + 0.1 * c * c; }, true},
             {[](cplx c) { return cplx{std::norm(c)}; }, false},
             {[](cplx c) { return c + 0.2 * std::norm(c); }, false},
             {[](cplx c) { return c * std::conj(c) * c * 0.1 + 0.3; }, false}}) {
      const auto w = omega(g, fn);
      const double cons = max_of(weier::conservation_residual(weier::km_matrices(w, one, zero)));
      const double sig = max_of(cgrid::abs(sigma::sigma_residual(w)));
      CHECK((cons < tol) == solves);
      CHECK((sig < tol) == solves);
      if (!solves) CHECK(cons > 1e-2);
    }
  }
}

TEST_CASE("extracted forms") {
  const Grid g = Grid::square(2.0, 128);
  SUBCASE("zero currents give a constant immersion") {
    const weier::KM km{MatrixField(g, 2), MatrixField(g, 2)};
    const auto forms = weier::extract_forms(km);
    REQUIRE(forms.dim() == 3);
    const auto im = weier::build_immersion(forms, g.base_node());
    for (const auto& c : im.coords) CHECK(max_of(cgrid::abs(ComplexField(g, std::vector<cplx>(c.values.begin(), c.values.end())))) == 0.0);
  }
  SUBCASE("trace component is rejected") {
    const auto T = MatrixField::from_function(g, 2, [](std::size_t) { return Mat(Mat::Identity(2, 2)); });
    CHECK_THROWS_AS(weier::extract_forms(weier::KM{T, T}), SingularityError);
  }
  SUBCASE("sphere: closed, real and radius 1/2") {
    const auto w = omega(g, [](cplx c) { return c; });
    const auto km = weier::km_matrices(w, ComplexField(g, cplx{0.25}), ComplexField(g, cplx{}));
    const auto forms = weier::extract_forms(km);
    CHECK(forms.closedness_max() < 1e-6);
    CHECK(forms.realness_defect() < 1e-12);
    const auto im = weier::build_immersion(forms, g.base_node());
    CHECK(im.imag_max < 1e-10);
    const auto [c, R, dev] = fit_sphere(im);
    CHECK(R == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(dev < 1e-4);

    // third form is proportional to (conj(psi1) psi2, psi1 conj(psi2)) when T = 0
    const auto sp = sphere(g);
    const auto a = sp.psi1.conj() * sp.psi2, b = sp.psi1 * sp.psi2.conj();
    const cplx ratio = forms.forms[2].F(70, 40) / a(70, 40);
    CHECK(max_diff(forms.forms[2].F, a * ratio) < cgrid::tolerance(g, 4));
    CHECK(max_diff(forms.forms[2].G, b * std::conj(ratio)) < cgrid::tolerance(g, 4));
  }
}

TEST_CASE("immersion base point and path families") {
  const Grid g = Grid::square(2.0, 96);
  const auto forms = weier::gwr_integrands(sphere(g), GwrData::cmc(g));
  const auto a = weier::build_immersion(forms, g.base_node());
  const auto b = weier::build_immersion(forms, Node{10, 70});
  for (std::size_t d = 0; d < 3; ++d) {
    const double shift = a.coords[d].values[0] - b.coords[d].values[0];
    double spread = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      spread = std::max(spread, std::abs(a.coords[d].values[k] - b.coords[d].values[k] - shift));
    }
    CHECK(spread < 1e-6);
  }
  CHECK(a.path_deviation < 1e-6);
  CHECK_THROWS_AS(weier::build_immersion(forms, Node{96, 0}), ConfigError);
}

TEST_CASE("projector currents in three dimensions") {
  const Grid g = Grid::square(2.0, 128);
  const auto w1 = omega(g, [](cplx c) { return c; });
  const OmegaField w2(ComplexField(g, cplx{}));
  const ComplexField rho(g, cplx{1.0}), sig(g, cplx{});
  const auto km = weier::km_matrices(w1, w2, rho, sig);
  CHECK(max_of(weier::conservation_residual(km)) < cgrid::tolerance(g, 4));
  const auto forms = weier::extract_forms(km);
  REQUIRE(forms.dim() == 8);
  CHECK(forms.realness_defect() < 1e-12);

  const auto f3 = weier::extract_forms(weier::km_matrices_commutator(w1, rho, sig));
  const double scale[3] = {-0.25, -0.25, 0.25};
  for (int a = 0; a < 3; ++a) {
    CHECK(max_diff(forms.forms[a].F, f3.forms[a].F * cplx{scale[a]}) < 1e-12);
    CHECK(max_diff(forms.forms[a].G, f3.forms[a].G * cplx{scale[a]}) < 1e-12);
  }
}
