#include "weierlab/fields.hpp"

#include <algorithm>
#include <cmath>

namespace weierlab::fields {

using cgrid::Grid;

namespace {

void require_grid(const ComplexField& a, const ComplexField& b, const char* what) {
  if (!(a.grid() == b.grid())) throw ConfigError(std::string(what) + ": fields on different grids");
}

RealField abs_of(const std::vector<cplx>& v, const Grid& g) {
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) r[k] = std::abs(v[k]);
  return RealField(g, std::move(r));
}

}  // namespace

SpinorPair::SpinorPair(ComplexField p1, ComplexField p2)
    : psi1(std::move(p1)), psi2(std::move(p2)), h1(psi1.grid(), cplx{}, "h1"),
      h2(psi1.grid(), cplx{}, "h2") {
  require_grid(psi1, psi2, "SpinorPair");
}

SpinorPair::SpinorPair(ComplexField p1, ComplexField p2, ComplexField g1, ComplexField g2)
    : psi1(std::move(p1)), psi2(std::move(p2)), h1(std::move(g1)), h2(std::move(g2)) {
  require_grid(psi1, psi2, "SpinorPair");
  require_grid(psi1, h1, "SpinorPair");
  require_grid(psi1, h2, "SpinorPair");
}

OmegaField::OmegaField(ComplexField omega)
    : omega_(std::move(omega)),
      denom_(omega_.map([](cplx w) { return cplx{1.0 + std::norm(w), 0.0}; })) {
  omega_.set_label("omega");
  denom_.set_label("1+|omega|^2");
}

ComplexField u_of(const SpinorPair& sp) {
  auto u = sp.psi1.abs2() + sp.psi2.abs2();
  u.set_label("u");
  return u;
}

OmegaField omega_of(const SpinorPair& sp, double delta) {
  const Grid& g = sp.grid();
  std::vector<cplx> v(g.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const cplx d = std::conj(sp.psi2[k]);
    if (std::abs(d) <= delta) throw SingularityError("omega_of: psi2 vanishes", g.node(k));
    v[k] = sp.psi1[k] / d;
  }
  return OmegaField(ComplexField(g, std::move(v), "omega"));
}

ComplexField continued_sqrt(const ComplexField& a, double delta) {
  const Grid& g = a.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(a[k]) <= delta) {
      throw BranchError("square-root argument vanishes (branch point on the grid)", g.node(k));
    }
  }
  std::vector<cplx> s(g.size());
  auto follow = [&](std::size_t from, std::size_t to) {
    cplx r = std::sqrt(a[to]);
    if (std::abs(r - s[from]) > std::abs(r + s[from])) r = -r;
    s[to] = r;
  };
  const Node b = g.base_node();
  s[g.index(b)] = std::sqrt(a.at(b));
  for (std::size_t i = b.i + 1; i < g.nx(); ++i) follow(g.index(i - 1, b.j), g.index(i, b.j));
  for (std::size_t i = b.i; i-- > 0;) follow(g.index(i + 1, b.j), g.index(i, b.j));
  for (std::size_t i = 0; i < g.nx(); ++i) {
    for (std::size_t j = b.j + 1; j < g.ny(); ++j) follow(g.index(i, j - 1), g.index(i, j));
    for (std::size_t j = b.j; j-- > 0;) follow(g.index(i, j + 1), g.index(i, j));
  }
  // Edges outside the spanning tree must agree too; otherwise the root has
  // monodromy around a zero inside some cell.
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
      const cplx p = s[g.index(i, j)], q = s[g.index(i + 1, j)];
      if (std::abs(p - q) > std::abs(p + q)) {
        throw BranchError("square root changes sheet between neighbouring nodes", Node{i, j});
      }
    }
  }
  return ComplexField(g, std::move(s), "sqrt");
}

SpinorPair psi_of_omega(const OmegaField& w, const ComplexField& h, SignChoice sign,
                        const Stencil& st, double delta) {
  if (sign.epsilon != 1 && sign.epsilon != -1) throw ConfigError("epsilon must be +1 or -1");
  require_grid(w.omega(), h, "psi_of_omega");
  const Grid& g = w.grid();
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  const ComplexField radicand = wz - h * w.omega();
  const ComplexField root = continued_sqrt(radicand, delta);
  const double eps = sign.epsilon;
  std::vector<cplx> p1(g.size()), p2(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = w.denominator()[k].real();
    p2[k] = eps * root[k] / d;
    p1[k] = eps * w.omega()[k] * std::conj(root[k]) / d;
  }
  return SpinorPair(ComplexField(g, std::move(p1), "psi1"), ComplexField(g, std::move(p2), "psi2"),
                    ComplexField(h), ComplexField(g, cplx{}, "h2"));
}

double GksResidual::max() const {
  double m = 0.0;
  for (const auto* r : {&first_a, &second_a, &first_b, &second_b}) {
    m = std::max(m, *std::max_element(r->values.begin(), r->values.end()));
  }
  return m;
}

std::vector<std::pair<std::string, Summary>> GksResidual::summaries(std::size_t band) const {
  return {{"gks_7a_first", cgrid::summarize(first_a, band)},
          {"gks_7a_second", cgrid::summarize(second_a, band)},
          {"gks_7b_first", cgrid::summarize(first_b, band)},
          {"gks_7b_second", cgrid::summarize(second_b, band)}};
}

GksResidual gks_residual(const SpinorPair& sp, const ComplexField& u, const Stencil& st) {
  require_grid(sp.psi1, u, "gks_residual");
  const Grid& g = sp.grid();
  const ComplexField c1 = sp.psi1.conj(), c2 = sp.psi2.conj();
  const ComplexField p1z = cgrid::d_z(sp.psi1, st);
  const ComplexField p2zb = cgrid::d_zbar(sp.psi2, st);
  const ComplexField c1zb = cgrid::d_zbar(c1, st);
  const ComplexField c2z = cgrid::d_z(c2, st);
  std::vector<cplx> a(g.size()), b(g.size()), c(g.size()), d(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx uk = u[k];
    a[k] = p1z[k] - uk * sp.psi2[k] - sp.h1[k] * sp.psi1[k];
    b[k] = p2zb[k] + uk * sp.psi1[k] - sp.h2[k] * sp.psi2[k];
    c[k] = c1zb[k] - uk * c2[k] - std::conj(sp.h1[k]) * c1[k];
    d[k] = c2z[k] + uk * c1[k] - std::conj(sp.h2[k]) * c2[k];
  }
  return GksResidual{abs_of(a, g), abs_of(b, g), abs_of(c, g), abs_of(d, g)};
}

ErnstGauge ernst_gauge(const SpinorPair& sp, const OmegaField& w, const ComplexField& f,
                       const Stencil& st, double delta) {
  require_grid(sp.psi1, w.omega(), "ernst_gauge");
  require_grid(sp.psi1, f, "ernst_gauge");
  const Grid& g = sp.grid();
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  std::vector<cplx> h1(g.size()), h2(g.size()), u(g.size());
  std::vector<double> ident(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(wz[k]) <= delta) throw SingularityError("ernst_gauge: omega_z vanishes", g.node(k));
    // conj(omega)_zbar = conj(omega_z)
    h2[k] = f[k] / (2.0 * wz[k]);
    h1[k] = std::conj(f[k]) / (2.0 * std::conj(wz[k]));
    u[k] = std::abs(wz[k]) / w.denominator()[k].real();
    ident[k] = std::abs(h2[k] - std::conj(h1[k]));
  }
  SpinorPair gauged(sp.psi1, sp.psi2, ComplexField(g, std::move(h1), "h1"),
                    ComplexField(g, std::move(h2), "h2"));
  return ErnstGauge{std::move(gauged), ComplexField(g, std::move(u), "u"),
                    RealField(g, std::move(ident))};
}

ComplexField T_of(const OmegaField& w, const Stencil& st) {
  const Grid& g = w.grid();
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  const ComplexField wzb = cgrid::d_zbar(w.omega(), st);
  std::vector<cplx> t(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = w.denominator()[k].real();
    t[k] = 2.0 * wz[k] * std::conj(wzb[k]) / (d * d);
  }
  return ComplexField(g, std::move(t), "T");
}

ComplexField T_bilinear(const SpinorPair& sp, const Stencil& st) {
  const ComplexField c1 = sp.psi1.conj();
  auto t = c1 * cgrid::d_z(sp.psi2, st) - cgrid::d_z(c1, st) * sp.psi2;
  t.set_label("T");
  return t;
}

RealField T_evolution_residual(const ComplexField& T, const OmegaField& w, const ComplexField& f,
                               const ComplexField& u, const Stencil& st, double delta) {
  const Grid& g = T.grid();
  const ComplexField Tzb = cgrid::d_zbar(T, st);
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  std::vector<double> r(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(wz[k]) <= delta) throw SingularityError("T evolution: omega_z vanishes", g.node(k));
    const cplx uk = u[k];
    r[k] = std::abs(Tzb[k] - f[k] / wz[k] * T[k] + uk * uk * std::conj(f[k]) / std::conj(wz[k]));
  }
  return RealField(g, std::move(r));
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
  return {"sphere", "holo", "minimal", "ernst-demo", "curved-demo"};
}

Grid preset_grid(const std::string& name, std::size_t n) {
  if (name == "minimal") return Grid::square(1.0, n);
  if (name == "ernst-demo" || name == "curved-demo") return Grid(1.5, 3.5, -1.0, 1.0, n, n);
  if (name == "sphere" || name == "holo") return Grid::square(2.0, n);
  throw ConfigError("unknown preset '" + name + "'");
}

Preset make_preset(const std::string& name, const Grid& g, const Stencil& st) {
  const ComplexField z = ComplexField::from_function(g, [](cplx c) { return c; }, "z");
  const ComplexField zero(g, cplx{}, "0");
  Preset p;
  p.name = name;
  if (name == "sphere") {
    p.description = "omega = z; round sphere through the inverse formulas with h = 0";
    p.omega = OmegaField(z);
    p.spinors = psi_of_omega(*p.omega, zero, {}, st);
  } else if (name == "holo") {
    p.description = "omega = z + 0.1 z^2 (holomorphic, solves the O(3) model)";
    p.omega = OmegaField(ComplexField::from_function(g, [](cplx c) { return c + 0.1 * c * c; }));
    p.spinors = psi_of_omega(*p.omega, zero, {}, st);
  } else if (name == "minimal") {
    p.description = "conj(psi1) = 1, psi2 = z (analytic data of the classical representation)";
    p.spinors = SpinorPair(ComplexField(g, cplx{1.0, 0.0}, "psi1"), ComplexField(z));
  } else if (name == "ernst-demo") {
    p.description = "p = z (rho = x, sigma = y), omega seed z; needs Re p > 0 on the domain";
    p.omega = OmegaField(z);
    p.rho = z.real_part();
    p.sigma = z.imag_part();
    p.spinors = psi_of_omega(*p.omega, zero, {}, st);
  } else if (name == "curved-demo") {
    p.description = "rho = x, omega seed z for the curved-background model";
    p.omega = OmegaField(z);
    p.rho = z.real_part();
    p.sigma = zero;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return p;
}

}  // namespace weierlab::fields
