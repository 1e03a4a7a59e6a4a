#include "weierlab/sigma.hpp"

#include <cmath>

namespace weierlab::sigma {

using cgrid::Grid;

namespace {

const cplx I{0.0, 1.0};

void require_grid(const ComplexField& a, const ComplexField& b, const char* what) {
  if (!(a.grid() == b.grid())) throw ConfigError(std::string(what) + ": fields on different grids");
}

}  // namespace

ComplexField sigma_residual(const OmegaField& w, const Stencil& st) {
  const ComplexField& om = w.omega();
  const ComplexField wzz = cgrid::d_zzbar(om, st);
  const ComplexField wz = cgrid::d_z(om, st);
  const ComplexField wzb = cgrid::d_zbar(om, st);
  const Grid& g = w.grid();
  std::vector<cplx> r(g.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = wzz[k] - 2.0 * wz[k] * wzb[k] * std::conj(om[k]) / w.denominator()[k];
  }
  return ComplexField(g, std::move(r), "sigma_residual");
}

ComplexField general_residual(const OmegaField& w, const ComplexField& h, const ComplexField& h2,
                              const Stencil& st) {
  require_grid(w.omega(), h, "general_residual");
  require_grid(w.omega(), h2, "general_residual");
  const ComplexField& om = w.omega();
  const ComplexField base = sigma_residual(w, st);
  const ComplexField hwzb = cgrid::d_zbar(h * om, st);
  const ComplexField wz = cgrid::d_z(om, st);
  const ComplexField wzb = cgrid::d_zbar(om, st);
  const Grid& g = w.grid();
  std::vector<cplx> r(g.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const cplx hk = h[k];
    const double a2 = std::norm(om[k]);
    const cplx bracket = wzb[k] * hk - wz[k] * std::conj(hk) + om[k] * std::norm(hk);
    r[k] = base[k] - hwzb[k] - 2.0 * (wz[k] - hk * om[k]) * h2[k] +
           2.0 * a2 / w.denominator()[k] * bracket;
  }
  return ComplexField(g, std::move(r), "general_residual");
}

ComplexField curved_h2(const OmegaField& w, const ComplexField& rho, const Stencil& st,
                       double delta) {
  require_grid(w.omega(), rho, "curved_h2");
  const Grid& g = w.grid();
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  const ComplexField wzb = cgrid::d_zbar(w.omega(), st);
  const ComplexField rz = cgrid::d_z(rho, st);
  const ComplexField rzb = cgrid::d_zbar(rho, st);
  std::vector<cplx> h2(g.size());
  for (std::size_t k = 0; k < h2.size(); ++k) {
    const double re = rho[k].real();
    if (std::abs(re) <= delta) throw SingularityError("curved model: Re(rho) vanishes", g.node(k));
    if (std::abs(wz[k]) <= delta) throw SingularityError("curved model: omega_z vanishes", g.node(k));
    h2[k] = -(rzb[k] * wz[k] + rz[k] * wzb[k]) / (4.0 * re * wz[k]);
  }
  return ComplexField(g, std::move(h2), "h2");
}

ComplexField curved_residual(const OmegaField& w, const ComplexField& rho, const Stencil& st,
                             double delta) {
  const ComplexField h2 = curved_h2(w, rho, st, delta);
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  auto r = sigma_residual(w, st) - 2.0 * h2 * wz;
  r.set_label("curved_residual");
  return r;
}

HarmonicPotential::HarmonicPotential(ComplexField rho, ComplexField sigma)
    : rho_(rho.real_part()), sigma_(sigma.real_part()) {
  require_grid(rho_, sigma_, "HarmonicPotential");
  rho_.set_label("rho");
  sigma_.set_label("sigma");
}

HarmonicPotential HarmonicPotential::from_p(const ComplexField& p) {
  return HarmonicPotential(p.real_part(), p.imag_part());
}

ComplexField HarmonicPotential::p() const {
  auto p = rho_ + I * sigma_;
  p.set_label("p");
  return p;
}

RealField HarmonicPotential::harmonic_residual(const Stencil& st) const {
  RealField a = cgrid::harmonic_residual(rho_, st);
  const RealField b = cgrid::harmonic_residual(sigma_, st);
  for (std::size_t k = 0; k < a.values.size(); ++k) a.values[k] = std::max(a.values[k], b.values[k]);
  return a;
}

ComplexField ernst_f(const HarmonicPotential& p, const OmegaField& w, const Stencil& st,
                     double delta) {
  require_grid(w.omega(), p.rho(), "ernst_f");
  const Grid& g = w.grid();
  const ComplexField pp = p.p();
  const ComplexField pz = cgrid::d_z(pp, st);
  const ComplexField pzb = cgrid::d_zbar(pp, st);
  const ComplexField wz = cgrid::d_z(w.omega(), st);
  const ComplexField wzb = cgrid::d_zbar(w.omega(), st);
  std::vector<cplx> f(g.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double re = p.rho()[k].real();
    if (std::abs(re) <= delta) throw SingularityError("Ernst forcing: Re(p) vanishes", g.node(k));
    f[k] = -0.5 * (pzb[k] * wz[k] + pz[k] * wzb[k]) / re;
  }
  return ComplexField(g, std::move(f), "f");
}

ComplexField ernst_residual(const OmegaField& w, const HarmonicPotential& p, const Stencil& st,
                            double delta) {
  auto r = sigma_residual(w, st) - ernst_f(p, w, st, delta);
  r.set_label("ernst_residual");
  return r;
}

// ---------------------------------------------------------------------------
// Relaxation

std::string to_string(Mode m) {
  switch (m) {
    case Mode::o3: return "o3";
    case Mode::curved: return "curved";
    case Mode::ernst: return "ernst";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "o3") return Mode::o3;
  if (s == "curved") return Mode::curved;
  if (s == "ernst") return Mode::ernst;
  throw ConfigError("unknown solver mode '" + s + "'");
}

namespace {

// Discrete operator shared by the sweep and the residual evaluation.
class Discretization {
 public:
  Discretization(Mode mode, const Grid& g, const std::optional<HarmonicPotential>& pot)
      : g_(g), ax_(1.0 / (g.hx() * g.hx())), ay_(1.0 / (g.hy() * g.hy())) {
    if (mode == Mode::o3) return;
    if (!pot) throw ConfigError("solver mode " + to_string(mode) + " needs a harmonic potential");
    if (!(pot->grid() == g)) throw ConfigError("solver potential is on a different grid");
    // Curved mode uses the real potential only; in that case both forcings coincide.
    const ComplexField p = mode == Mode::curved ? pot->rho() : pot->p();
    const Stencil st{};
    pz_ = cgrid::d_z(p, st);
    pzb_ = cgrid::d_zbar(p, st);
    inv_re_.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double re = pot->rho()[k].real();
      if (std::abs(re) <= kSingularDelta) {
        throw SingularityError("solver forcing: Re(p) vanishes", g.node(k));
      }
      inv_re_[k] = 1.0 / re;
    }
    forced_ = true;
  }

  cplx rhs(const std::vector<cplx>& w, std::size_t i, std::size_t j) const {
    const std::size_t k = g_.index(i, j);
    const std::size_t nx = g_.nx();
    const cplx wx = (w[k + 1] - w[k - 1]) / (2.0 * g_.hx());
    const cplx wy = (w[k + nx] - w[k - nx]) / (2.0 * g_.hy());
    const cplx wz = 0.5 * (wx - I * wy);
    const cplx wzb = 0.5 * (wx + I * wy);
    cplx r = 2.0 * wz * wzb * std::conj(w[k]) / (1.0 + std::norm(w[k]));
    if (forced_) r -= 0.5 * (pzb_[k] * wz + pz_[k] * wzb) * inv_re_[k];
    return r;
  }

  cplx neighbours(const std::vector<cplx>& w, std::size_t k) const {
    const std::size_t nx = g_.nx();
    return (w[k + 1] + w[k - 1]) * ax_ + (w[k + nx] + w[k - nx]) * ay_;
  }

  double diag() const { return 2.0 * (ax_ + ay_); }

  double residual(const std::vector<cplx>& w) const {
    double m = 0.0;
    for (std::size_t j = 1; j + 1 < g_.ny(); ++j) {
      for (std::size_t i = 1; i + 1 < g_.nx(); ++i) {
        const std::size_t k = g_.index(i, j);
        const cplx lap = neighbours(w, k) - diag() * w[k];
        m = std::max(m, std::abs(0.25 * lap - rhs(w, i, j)));
      }
    }
    return m;
  }

 private:
  Grid g_;
  double ax_, ay_;
  bool forced_ = false;
  ComplexField pz_, pzb_;
  std::vector<double> inv_re_;
};

}  // namespace

RelaxResult relax_solve(Mode mode, const ComplexField& boundary, const ComplexField& init,
                        const RelaxParams& params, const std::optional<HarmonicPotential>& potential) {
  require_grid(boundary, init, "relax_solve");
  if (!(params.theta > 0.0 && params.theta <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (params.divergence_window == 0) throw ConfigError("divergence window must be positive");
  const Grid& g = boundary.grid();
  const Discretization disc(mode, g, potential);

  std::vector<cplx> w(init.values().begin(), init.values().end());
  for (std::size_t i = 0; i < g.nx(); ++i) {
    w[g.index(i, 0)] = boundary(i, 0);
    w[g.index(i, g.ny() - 1)] = boundary(i, g.ny() - 1);
  }
  for (std::size_t j = 0; j < g.ny(); ++j) {
    w[g.index(0, j)] = boundary(0, j);
    w[g.index(g.nx() - 1, j)] = boundary(g.nx() - 1, j);
  }

  std::vector<double> history;
  std::vector<cplx> best = w;
  double best_res = disc.residual(w);
  double prev = best_res;
  std::size_t growth = 0;
  std::size_t it = 0;
  bool converged = best_res < params.tol_target;
  const double theta = params.theta;
  const double inv_diag = 1.0 / disc.diag();

  while (!converged && it < params.max_iters) {
    for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
      for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
        const std::size_t k = g.index(i, j);
        const cplx target = (disc.neighbours(w, k) - 4.0 * disc.rhs(w, i, j)) * inv_diag;
        w[k] += theta * (target - w[k]);
      }
    }
    ++it;
    const double res = disc.residual(w);
    if (!std::isfinite(res)) {
      throw ConvergenceError("relax_solve: non-finite residual after sweep " + std::to_string(it));
    }
    history.push_back(res);
    if (res < best_res) {
      best_res = res;
      best = w;
    }
    growth = res > prev ? growth + 1 : 0;
    prev = res;
    if (growth >= params.divergence_window) {
      throw ConvergenceError("relax_solve: residual grew for " + std::to_string(growth) +
                             " consecutive sweeps (sweep " + std::to_string(it) + ", residual " +
                             std::to_string(res) + ", best " + std::to_string(best_res) + ")");
    }
    converged = res < params.tol_target;
  }

  return RelaxResult{OmegaField(ComplexField(g, std::move(best), "omega")), converged, it, best_res,
                     std::move(history)};
}

double relax_residual(Mode mode, const ComplexField& omega,
                      const std::optional<HarmonicPotential>& potential) {
  const Discretization disc(mode, omega.grid(), potential);
  return disc.residual(std::vector<cplx>(omega.values().begin(), omega.values().end()));
}

// ---------------------------------------------------------------------------
// Spin matrix and projectors

Mat spin_matrix(cplx w) {
  const double a2 = std::norm(w);
  const double d = 1.0 + a2;
  Mat s(2, 2);
  s << (1.0 - a2), -2.0 * std::conj(w), -2.0 * w, (a2 - 1.0);
  return (I / d) * s;
}

MatrixField spin_matrix(const OmegaField& w) {
  return MatrixField::from_function(w.grid(), 2, [&](std::size_t k) { return spin_matrix(w.omega()[k]); });
}

Mat projector2(cplx w) {
  Mat p(2, 2);
  p << 1.0, std::conj(w), w, std::norm(w);
  return p / (1.0 + std::norm(w));
}

MatrixField projector2(const OmegaField& w) {
  return MatrixField::from_function(w.grid(), 2, [&](std::size_t k) { return projector2(w.omega()[k]); });
}

Mat projector3(cplx w1, cplx w2) {
  Eigen::Vector3cd v(1.0, w1, w2);
  Mat p = v * v.adjoint();
  return p / (1.0 + std::norm(w1) + std::norm(w2));
}

MatrixField projector3(const OmegaField& w1, const OmegaField& w2) {
  require_grid(w1.omega(), w2.omega(), "projector3");
  return MatrixField::from_function(w1.grid(), 3, [&](std::size_t k) {
    return projector3(w1.omega()[k], w2.omega()[k]);
  });
}

// ---------------------------------------------------------------------------
// Lax pair

LaxData LaxData::make(const ComplexField& rho, cplx lambda, const Stencil& st) {
  const Grid& g = rho.grid();
  LaxData lx;
  lx.lambda = lambda;
  lx.rho = rho.real_part();
  lx.beta = cgrid::harmonic_conjugate(lx.rho, st);
  lx.gamma = lx.rho + I * lx.beta;
  std::vector<cplx> root(g.size()), vr(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx gam = lx.gamma[k];
    root[k] = std::sqrt((lambda - gam) * (lambda + gam));
    vr[k] = I * lx.beta[k] - lambda + root[k];
  }
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const cplx s = root[g.index(i, j)];
      bool jump = false;
      if (i + 1 < g.nx()) {
        const cplx t = root[g.index(i + 1, j)];
        jump = jump || std::abs(s - t) > std::abs(s + t);
      }
      if (j + 1 < g.ny()) {
        const cplx t = root[g.index(i, j + 1)];
        jump = jump || std::abs(s - t) > std::abs(s + t);
      }
      if (jump) lx.branch_flags.push_back(Node{i, j});
    }
  }
  lx.varrho = ComplexField(g, std::move(vr), "varrho");
  return lx;
}

std::string LaxVariant::name() const {
  std::string d = derivative == LaxDerivative::z ? "S_z" : "S_zbar";
  return product == LaxProduct::literal ? d + "*S" : "S*" + d;
}

std::vector<LaxVariant> lax_variants() {
  return {{LaxDerivative::z, LaxProduct::literal},
          {LaxDerivative::zbar, LaxProduct::literal},
          {LaxDerivative::z, LaxProduct::reversed},
          {LaxDerivative::zbar, LaxProduct::reversed}};
}

std::pair<MatrixField, MatrixField> lax_matrices(const OmegaField& w, const LaxData& lx,
                                                 LaxVariant variant, const Stencil& st,
                                                 double delta) {
  require_grid(w.omega(), lx.rho, "lax_matrices");
  const Grid& g = w.grid();
  std::vector<cplx> a(g.size()), b(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx r = lx.rho[k], v = lx.varrho[k];
    if (std::abs(v + r) <= delta || std::abs(v - r) <= delta) {
      throw SpectralParameterError(
          "Lax matrices: varrho +- rho vanishes; choose a different spectral parameter", g.node(k));
    }
    a[k] = r / (v + r);
    b[k] = -r / (v - r);
  }
  const MatrixField S = spin_matrix(w);
  const MatrixField Sz = d_z(S, st);
  const MatrixField Sd = variant.derivative == LaxDerivative::z ? Sz : d_zbar(S, st);
  const bool lit = variant.product == LaxProduct::literal;
  MatrixField U = ComplexField(g, std::move(a)) * (lit ? Sz * S : S * Sz);
  MatrixField V = ComplexField(g, std::move(b)) * (lit ? Sd * S : S * Sd);
  return {std::move(U), std::move(V)};
}

RealField lax_residual(const MatrixField& U, const MatrixField& V, const Stencil& st) {
  return frobenius(d_zbar(U, st) - d_z(V, st) + commutator(U, V));
}

LaxSelection select_lax_variant(std::size_t n, const Stencil& st) {
  const Grid g = Grid::square(2.0, n);
  const OmegaField w(ComplexField::from_function(g, [](cplx z) { return z; }));
  const LaxData lx = LaxData::make(ComplexField(g, cplx{1.0, 0.0}), cplx{2.0, 0.0}, st);
  LaxSelection sel;
  double best = INFINITY;
  for (const LaxVariant& v : lax_variants()) {
    const auto [U, V] = lax_matrices(w, lx, v, st);
    const double r = cgrid::summarize(lax_residual(U, V, st)).max;
    sel.residuals.emplace_back(v, r);
    if (r < best) {
      best = r;
      sel.selected = v;
    }
  }
  return sel;
}

}  // namespace weierlab::sigma
