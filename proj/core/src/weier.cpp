#include "weierlab/weier.hpp"

#include <algorithm>
#include <cmath>

#include "weierlab/sigma.hpp"

namespace weierlab::weier {

using cgrid::d_z;
using cgrid::d_zbar;

namespace {

const cplx I{0.0, 1.0};

double max_of(const RealField& r) {
  return r.values.empty() ? 0.0 : *std::max_element(r.values.begin(), r.values.end());
}

ComplexField sq(const ComplexField& f) { return f * f; }

// (x+, x-) pairs to the real coordinates x1 = (x+ + x-)/2, x2 = (x+ - x-)/(2i).
void push_plus_minus(OneFormSet& out, const ComplexField& Fp, const ComplexField& Gp,
                     const ComplexField& Fm, const ComplexField& Gm) {
  const cplx half{0.5, 0.0};
  const cplx inv2i = 1.0 / (2.0 * I);
  out.forms.push_back({"x1", half * (Fp + Fm), half * (Gp + Gm)});
  out.forms.push_back({"x2", inv2i * (Fp - Fm), inv2i * (Gp - Gm)});
}

}  // namespace

std::vector<RealField> OneFormSet::closedness(const Stencil& st) const {
  std::vector<RealField> out;
  out.reserve(forms.size());
  for (const auto& f : forms) out.push_back(cgrid::closedness_residual(f.F, f.G, st));
  return out;
}

double OneFormSet::closedness_max(const Stencil& st) const {
  double m = 0.0;
  for (const auto& r : closedness(st)) m = std::max(m, max_of(r));
  return m;
}

double OneFormSet::realness_defect() const {
  double m = 0.0;
  for (const auto& f : forms) {
    for (std::size_t k = 0; k < f.F.grid().size(); ++k) {
      m = std::max(m, std::abs(f.G[k] - std::conj(f.F[k])));
    }
  }
  return m;
}

OneFormSet classical_integrands(const SpinorPair& sp, double c) {
  const ComplexField b1 = sp.psi1.conj(), b2 = sp.psi2.conj();
  const cplx ci = c * I;
  OneFormSet out;
  push_plus_minus(out, ci * sq(b1), -ci * sq(b2), ci * sq(sp.psi2), -ci * sq(sp.psi1));
  out.forms.push_back({"x3", cplx{-c, 0.0} * (sp.psi2 * b1), cplx{-c, 0.0} * (sp.psi1 * b2)});
  return out;
}

GwrData GwrData::cmc(const Grid& grid) {
  return GwrData{ComplexField(grid, I, "rho_w"), ComplexField(grid, cplx{}, "g"), std::nullopt};
}

GwrData GwrData::from_J(const ComplexField& J, const ComplexField& u) {
  const ComplexField g = cgrid::divide(J, u * u, fields::kSingularDelta);
  return GwrData{ComplexField(J.grid(), I, "rho_w"), g, J};
}

RealField GwrData::J_analyticity(const Stencil& st) const {
  if (!J) return RealField(g.grid(), 0.0);
  return cgrid::abs(d_zbar(*J, st));
}

OneFormSet gwr_integrands(const SpinorPair& sp, const GwrData& gd, const GwrOptions& opt) {
  const ComplexField& r = gd.rho_w;
  const ComplexField rb = r.conj();
  const ComplexField r3 = opt.literal_x3_weight ? r : -I * r;
  const ComplexField r3b = r3.conj();
  const ComplexField& g = gd.g;
  const ComplexField gb = g.conj();
  const ComplexField b1 = sp.psi1.conj(), b2 = sp.psi2.conj();
  const cplx c{opt.prefactor, 0.0};

  const ComplexField Fp = c * r * (sq(b1) - g * sq(b2));
  const ComplexField Gp = c * rb * (sq(b2) - gb * sq(b1));
  const ComplexField Fm = c * r * (sq(sp.psi2) - g * sq(sp.psi1));
  const ComplexField Gm = c * rb * (sq(sp.psi1) - gb * sq(sp.psi2));
  OneFormSet out;
  push_plus_minus(out, Fp, Gp, Fm, Gm);
  out.forms.push_back({"x3", -c * r3 * (b1 * sp.psi2 + g * sp.psi1 * b2),
                       -c * r3b * (sp.psi1 * b2 + gb * b1 * sp.psi2)});
  return out;
}

std::array<ComplexField, 3> constraint_residual_11(const SpinorPair& sp, const GwrData& gd,
                                                   const GwrOptions& opt, const Stencil& st) {
  const ComplexField& p1 = sp.psi1;
  const ComplexField& p2 = sp.psi2;
  const ComplexField b1 = p1.conj(), b2 = p2.conj();
  const ComplexField h1b = sp.h1.conj(), h2b = sp.h2.conj();
  const ComplexField u = fields::u_of(sp);
  const ComplexField& g = gd.g;
  const ComplexField gb = g.conj();

  const ComplexField& r = gd.rho_w;
  const ComplexField rb = r.conj();
  const ComplexField rzb = d_zbar(r, st);
  const ComplexField rbz = d_z(rb, st);
  const ComplexField rbgb_z = d_z(rb * gb, st);
  const ComplexField rg_zb = d_zbar(r * g, st);
  const cplx two{2.0, 0.0};

  ComplexField a = (rzb + two * r * h1b + rbgb_z) * sq(b1) - (rbz + two * rb * h2b + rg_zb) * sq(b2) +
                   two * u * (r + rb) * b1 * b2 +
                   two * (rb * gb * b1 * d_z(b1, st) - r * g * b2 * d_zbar(b2, st));
  ComplexField b = (rzb + two * r * sp.h2 + rbgb_z) * sq(p2) - (rbz + two * rb * sp.h1 + rg_zb) * sq(p1) -
                   two * u * (r + rb) * p1 * p2 -
                   two * (r * g * p1 * d_zbar(p1, st) - rb * gb * p2 * d_z(p2, st));

  const ComplexField r3 = opt.literal_x3_weight ? r : -I * r;
  const ComplexField r3b = r3.conj();
  ComplexField c = (d_zbar(r3, st) + r3 * (h1b + sp.h2)) * b1 * p2 -
                   (d_z(r3b, st) + r3b * (sp.h1 + h2b)) * p1 * b2 +
                   u * (r3 - r3b) * (p2.abs2() - p1.abs2()) + d_zbar(r3 * g * p1 * b2, st) -
                   d_z(r3b * gb * b1 * p2, st);
  a.set_label("constraint_a");
  b.set_label("constraint_b");
  c.set_label("constraint_c");
  return {std::move(a), std::move(b), std::move(c)};
}

std::array<ComplexField, 3> constraint_residual_17(const SpinorPair& sp, const ComplexField& g,
                                                   const Stencil& st) {
  const ComplexField& p1 = sp.psi1;
  const ComplexField& p2 = sp.psi2;
  const ComplexField b1 = p1.conj(), b2 = p2.conj();
  const ComplexField gb = g.conj();
  return {d_z(gb * sq(b1), st) + d_zbar(g * sq(b2), st),
          d_z(gb * sq(p2), st) + d_zbar(g * sq(p1), st),
          d_zbar(g * p1 * b2, st) + d_z(gb * b1 * p2, st)};
}

// ---------------------------------------------------------------------------
// Currents

KM km_matrices(const OmegaField& w, const ComplexField& rho, const ComplexField& sigma,
               const Stencil& st) {
  const ComplexField& om = w.omega();
  const ComplexField wz = d_z(om, st), wzb = d_zbar(om, st);
  const ComplexField sz = d_z(sigma, st), szb = d_zbar(sigma, st);
  // d: derivative of omega; db: derivative of conj(omega) in the same direction.
  auto build = [&](const ComplexField& d, const ComplexField& db, const ComplexField& s_d) {
    return MatrixField::from_function(w.grid(), 2, [&](std::size_t k) {
      const cplx o = om[k], ob = std::conj(o);
      const cplx dk = d[k];
      const cplx dbk = db[k];
      const double den = w.denominator()[k].real();
      const cplx m = -4.0 * rho[k] / (den * den);
      const cplx n = 2.0 * I * s_d[k] / den;
      Mat A(2, 2), N(2, 2);
      A << ob * dk - dbk * o, -(dbk + ob * ob * dk), dk + o * o * dbk, -(ob * dk - dbk * o);
      N << 1.0 - std::norm(o), -2.0 * ob, -2.0 * o, std::norm(o) - 1.0;
      return Mat(m * A + n * N);
    });
  };
  return KM{build(wzb, wz.conj(), szb), build(wz, wzb.conj(), sz)};
}

KM km_matrices_commutator(const OmegaField& w, const ComplexField& rho, const ComplexField& sigma,
                          const Stencil& st) {
  const MatrixField S = sigma::spin_matrix(w);
  const ComplexField two_szb = cplx{2.0, 0.0} * d_zbar(sigma, st);
  const ComplexField two_sz = cplx{2.0, 0.0} * d_z(sigma, st);
  return KM{rho * commutator(S, d_zbar(S, st)) + two_szb * S,
            rho * commutator(S, d_z(S, st)) + two_sz * S};
}

KM km_matrices(const SpinorPair& sp, const ComplexField& rho, const ComplexField& sigma,
               const Stencil& st) {
  const ComplexField u = fields::u_of(sp);
  const ComplexField T = fields::T_bilinear(sp, st);
  const ComplexField sz = d_z(sigma, st), szb = d_zbar(sigma, st);
  auto build = [&](bool is_K) {
    return MatrixField::from_function(sp.grid(), 2, [&](std::size_t k) {
      const cplx p1 = sp.psi1[k], p2 = sp.psi2[k];
      const cplx b1 = std::conj(p1), b2 = std::conj(p2);
      const double uk = u[k].real();
      const cplx r = rho[k];
      Mat X(2, 2), Y(2, 2), Z(2, 2);
      Y << std::norm(p2) - std::norm(p1), -2.0 * b1 * b2, -2.0 * p1 * p2, std::norm(p1) - std::norm(p2);
      if (is_K) {
        X << -p1 * b2, -b2 * b2, p1 * p1, p1 * b2;
        Z << b1 * p2, -b1 * b1, p2 * p2, -b1 * p2;
        return Mat(-4.0 * r * X + (2.0 * I * szb[k] / uk) * Y +
                   (4.0 * r * std::conj(T[k]) / (uk * uk)) * Z);
      }
      X << b1 * p2, -b1 * b1, p2 * p2, -b1 * p2;
      Z << -p1 * b2, -b2 * b2, p1 * p1, b2 * p1;
      return Mat(-4.0 * r * X + (2.0 * I * sz[k] / uk) * Y + (4.0 * r * T[k] / (uk * uk)) * Z);
    });
  };
  return KM{build(true), build(false)};
}

KM km_matrices(const OmegaField& w1, const OmegaField& w2, const ComplexField& rho,
               const ComplexField& sigma, Coupling coupling, const Stencil& st) {
  const MatrixField P = sigma::projector3(w1, w2);
  const cplx k = coupling == Coupling::imaginary ? I : cplx{1.0, 0.0};
  return KM{rho * commutator(d_zbar(P, st), P) + (k * d_zbar(sigma, st)) * P,
            rho * commutator(d_z(P, st), P) + (k * d_z(sigma, st)) * P};
}

RealField km_symmetry_residual(const KM& km) { return frobenius(km.K + km.M.adjoint()); }

std::vector<std::string> KmConsistency::flagged(double tol) const {
  std::vector<std::string> out;
  for (int e = 0; e < 4; ++e) {
    const std::string rc = "(" + std::to_string(e / 2) + "," + std::to_string(e % 2) + ")";
    if (K_entry_max[e] > tol) out.push_back("K" + rc);
    if (M_entry_max[e] > tol) out.push_back("M" + rc);
  }
  return out;
}

KmConsistency km_consistency_residual(const OmegaField& w, const SpinorPair& sp,
                                      const ComplexField& rho, const ComplexField& sigma,
                                      const Stencil& st) {
  const KM a = km_matrices(w, rho, sigma, st);
  const KM b = km_matrices(sp, rho, sigma, st);
  KmConsistency out;
  out.K = frobenius(a.K - b.K);
  out.M = frobenius(a.M - b.M);
  for (int e = 0; e < 4; ++e) {
    const int r = e / 2, c = e % 2;
    out.K_entry_max[e] = (a.K.entry(r, c) - b.K.entry(r, c)).max_abs();
    out.M_entry_max[e] = (a.M.entry(r, c) - b.M.entry(r, c)).max_abs();
  }
  return out;
}

RealField conservation_residual(const KM& km, const Stencil& st) {
  return frobenius(d_z(km.K, st) + d_zbar(km.M, st));
}

namespace {

std::vector<Mat> pauli() {
  Mat s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0.0, 1.0, 1.0, 0.0;
  s2 << 0.0, -I, I, 0.0;
  s3 << 1.0, 0.0, 0.0, -1.0;
  return {s1, s2, s3};
}

std::vector<Mat> gell_mann() {
  std::vector<Mat> l(8, Mat::Zero(3, 3));
  l[0](0, 1) = l[0](1, 0) = 1.0;
  l[1](0, 1) = -I;
  l[1](1, 0) = I;
  l[2](0, 0) = 1.0;
  l[2](1, 1) = -1.0;
  l[3](0, 2) = l[3](2, 0) = 1.0;
  l[4](0, 2) = -I;
  l[4](2, 0) = I;
  l[5](1, 2) = l[5](2, 1) = 1.0;
  l[6](1, 2) = -I;
  l[6](2, 1) = I;
  const double s = 1.0 / std::sqrt(3.0);
  l[7](0, 0) = l[7](1, 1) = s;
  l[7](2, 2) = -2.0 * s;
  return l;
}

}  // namespace

OneFormSet extract_forms(const KM& km, double trace_tol) {
  const int dim = km.K.dim();
  if (km.M.dim() != dim) throw ConfigError("extract_forms: K and M differ in dimension");
  const Grid& g = km.K.grid();
  if (dim == 2) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double tr = std::max(std::abs(km.K.at(k).trace()), std::abs(km.M.at(k).trace()));
      if (tr > trace_tol) throw SingularityError("extract_forms: current has a trace component", g.node(k));
    }
  }
  const std::vector<Mat> basis = dim == 2 ? pauli() : gell_mann();
  OneFormSet out;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    std::vector<cplx> F(g.size()), G(g.size());
    cgrid::parallel_for(g.size(), [&](std::size_t k) {
      F[k] = 0.5 * (km.M.at(k) * basis[a]).trace();
      G[k] = -0.5 * (km.K.at(k) * basis[a]).trace();
    });
    const std::string name = (dim == 2 ? "x" : "X") + std::to_string(a + 1);
    out.forms.push_back({name, ComplexField(g, std::move(F), "F_" + name),
                         ComplexField(g, std::move(G), "G_" + name)});
  }
  return out;
}

OneFormSet literal_scalar_forms(const SpinorPair& sp, const ComplexField& rho,
                                const ComplexField& sigma, const Stencil& st) {
  const Grid& g = sp.grid();
  const ComplexField u = fields::u_of(sp);
  const ComplexField T = fields::T_bilinear(sp, st);
  const ComplexField sz = d_z(sigma, st), szb = d_zbar(sigma, st);
  const ComplexField sbz = d_z(sigma.conj(), st), sbzb = d_zbar(sigma.conj(), st);
  std::vector<cplx> F1(g.size()), F2(g.size()), F3(g.size()), G1(g.size()), G2(g.size()), G3(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx p1 = sp.psi1[k], p2 = sp.psi2[k], b1 = std::conj(p1), b2 = std::conj(p2);
    const cplx r = rho[k], rb = std::conj(r);
    const double uk = u[k].real(), u2 = uk * uk;
    const cplx t = T[k], tb = std::conj(t);
    const double d21 = std::norm(p2) - std::norm(p1);
    const cplx common = 4.0 * r * (b1 * b1 - 4.0 * t / u2 * b2 * b2) - 4.0 * I * sz[k] / uk * b1 * b2;
    F1[k] = I * (common + 4.0 * rb * (p2 * p2 - t / u2 * p1 * p1) - 4.0 * I * sbz[k] / uk * p1 * p2);
    F2[k] = common - 4.0 * rb * (p2 * p2 + t / u2 * p1 * p1) + 4.0 * I * sbz[k] / uk * p1 * p2;
    F3[k] = -2.0 * (4.0 * r * (b1 * p2 + 4.0 * tb / u2 * p1 * b2) - 2.0 * I * sz[k] / uk * d21);
    const cplx gA = 4.0 * rb * (p1 * p1 - 4.0 * tb / u2 * p2 * p2) - 4.0 * I * sbzb[k] / uk * p1 * p2;
    const cplx gB = 4.0 * r * (b2 * b2 - tb / u2 * b1 * b1);
    G1[k] = I * (-(gA + gB) + 4.0 * I * szb[k] / uk * b1 * b2);
    G2[k] = gA - gB - 4.0 * I * szb[k] / uk * b1 * b2;
    G3[k] = 2.0 * (4.0 * r * (p1 * b2 + tb / u2 * b1 * p2) + 2.0 * I * szb[k] / uk * d21);
  }
  OneFormSet out;
  out.forms.push_back({"x1", ComplexField(g, std::move(F1)), ComplexField(g, std::move(G1))});
  out.forms.push_back({"x2", ComplexField(g, std::move(F2)), ComplexField(g, std::move(G2))});
  out.forms.push_back({"x3", ComplexField(g, std::move(F3)), ComplexField(g, std::move(G3))});
  return out;
}

LiteralDiscrepancy literal_discrepancy(const SpinorPair& sp, const OmegaField& w,
                                       const ComplexField& rho, const ComplexField& sigma,
                                       const Stencil& st) {
  const OneFormSet lit = literal_scalar_forms(sp, rho, sigma, st);
  const OneFormSet mat = extract_forms(km_matrices(w, rho, sigma, st));
  LiteralDiscrepancy d;
  const auto closed = lit.closedness(st);
  for (int a = 0; a < 3; ++a) {
    const ComplexField& Fl = lit.forms[a].F;
    const ComplexField& Gl = lit.forms[a].G;
    const ComplexField& Fm = mat.forms[a].F;
    d.closedness[a] = max_of(closed[a]);
    cplx num{};
    double den = 0.0;
    for (std::size_t k = 0; k < Fl.grid().size(); ++k) {
      d.realness[a] = std::max(d.realness[a], std::abs(Gl[k] - std::conj(Fl[k])));
      num += std::conj(Fm[k]) * Fl[k];
      den += std::norm(Fm[k]);
    }
    d.ratio[a] = den > 0.0 ? num / den : cplx{};
    for (std::size_t k = 0; k < Fl.grid().size(); ++k) {
      d.vs_matrix[a] = std::max(d.vs_matrix[a], std::abs(Fl[k] - d.ratio[a] * Fm[k]));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Immersions

Eigen::VectorXd Immersion::point(std::size_t k) const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t a = 0; a < coords.size(); ++a) p(static_cast<Eigen::Index>(a)) = coords[a].values[k];
  return p;
}

Immersion build_immersion(const OneFormSet& forms, const Node& base, const ImmersionOptions& opt) {
  if (forms.forms.empty()) throw ConfigError("build_immersion: no forms");
  const Grid& g = forms.grid();
  if (!g.contains(base)) throw ConfigError("build_immersion: base node outside the grid");
  Immersion im;
  im.grid = g;
  im.base = base;
  im.closedness = forms.closedness_max(opt.stencil);
  if (im.closedness > opt.closedness_threshold) {
    if (!opt.force) {
      throw PreconditionError("build_immersion: forms are not closed; refusing to integrate",
                              im.closedness);
    }
    im.warnings.push_back("closedness " + std::to_string(im.closedness) +
                          " above threshold; coordinates are path dependent");
  }
  double dev = 0.0, extent = 0.0;
  for (const auto& f : forms.forms) {
    const cgrid::OneFormIntegrator integ(f.F, f.G, opt.quadrature, opt.stencil);
    const ComplexField a = integ.cumulative(base, true);
    const ComplexField b = integ.cumulative(base, false);
    std::vector<double> xa(g.size()), xb(g.size());
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < g.size(); ++k) {
      xa[k] = a[k].real();
      xb[k] = b[k].real();
      im.imag_max = std::max(im.imag_max, std::abs(a[k].imag()));
      dev = std::max(dev, std::abs(a[k] - b[k]));
      lo = std::min(lo, xa[k]);
      hi = std::max(hi, xa[k]);
    }
    extent = std::max(extent, hi - lo);
    im.coords.emplace_back(g, std::move(xa));
    im.transposed.emplace_back(g, std::move(xb));
  }
  im.path_deviation = extent > 0.0 ? dev / extent : dev;
  return im;
}

}  // namespace weierlab::weier
