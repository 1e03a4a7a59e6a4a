#include "weierlab/geom.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace weierlab::geom {

using cgrid::Grid;

namespace {

ComplexField as_field(const RealField& r) {
  std::vector<cplx> v(r.values.begin(), r.values.end());
  return ComplexField(r.grid, std::move(v));
}

std::vector<double> real_values(const ComplexField& f) {
  std::vector<double> v(f.grid().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f[k].real();
  return v;
}

bool in_band(const Grid& g, std::size_t k, std::size_t band) {
  const Node n = g.node(k);
  return n.i < band || n.j < band || n.i + band >= g.nx() || n.j + band >= g.ny();
}

}  // namespace

MetricField first_form(const Immersion& im, const Stencil& st) {
  const Grid& g = im.grid;
  std::vector<double> E(g.size(), 0.0), F(g.size(), 0.0), G(g.size(), 0.0);
  for (const auto& c : im.coords) {
    const ComplexField f = as_field(c);
    const std::vector<double> rx = real_values(cgrid::d_x(f, st));
    const std::vector<double> ry = real_values(cgrid::d_y(f, st));
    for (std::size_t k = 0; k < g.size(); ++k) {
      E[k] += rx[k] * rx[k];
      F[k] += rx[k] * ry[k];
      G[k] += ry[k] * ry[k];
    }
  }
  MetricField m;
  std::vector<double> fac(g.size()), def(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    fac[k] = 0.5 * (E[k] + G[k]);
    const double big = std::max(E[k], G[k]);
    def[k] = big > 0.0 ? std::max(std::abs(E[k] - G[k]), std::abs(F[k])) / big : 1.0;
    if (E[k] <= 0.0 || G[k] <= 0.0 || E[k] * G[k] - F[k] * F[k] <= 0.0) m.degenerate.push_back(g.node(k));
  }
  m.E = RealField(g, std::move(E));
  m.F = RealField(g, std::move(F));
  m.G = RealField(g, std::move(G));
  m.factor = RealField(g, std::move(fac));
  m.defect = RealField(g, std::move(def));
  return m;
}

RealField gauss_from_u(const ComplexField& u, const Stencil& st) {
  const Grid& g = u.grid();
  std::vector<cplx> lu(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v = u[k].real();
    if (!(v > 0.0)) throw SingularityError("gauss_from_u: u must be positive", g.node(k));
    lu[k] = std::log(v);
  }
  const ComplexField lzz = cgrid::d_zzbar(ComplexField(g, std::move(lu)), st);
  std::vector<double> K(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v = u[k].real();
    K[k] = -4.0 / (v * v) * lzz[k].real();
  }
  return RealField(g, std::move(K));
}

CurvatureField curvatures_from_mesh(const Immersion& im, const Stencil& st) {
  if (im.dim() != 3) throw ConfigError("curvatures_from_mesh needs a surface in R^3");
  const Grid& g = im.grid;
  using V3 = Eigen::Vector3d;
  std::vector<V3> rx(g.size()), ry(g.size()), rxx(g.size()), rxy(g.size()), ryy(g.size());
  for (int a = 0; a < 3; ++a) {
    const ComplexField f = as_field(im.coords[a]);
    const ComplexField fx = cgrid::d_x(f, st);
    const ComplexField fy = cgrid::d_y(f, st);
    const ComplexField fxx = cgrid::d_x(fx, st);
    const ComplexField fxy = cgrid::d_y(fx, st);
    const ComplexField fyy = cgrid::d_y(fy, st);
    for (std::size_t k = 0; k < g.size(); ++k) {
      rx[k](a) = fx[k].real();
      ry[k](a) = fy[k].real();
      rxx[k](a) = fxx[k].real();
      rxy[k](a) = fxy[k].real();
      ryy[k](a) = fyy[k].real();
    }
  }
  CurvatureField c;
  c.source = "mesh";
  c.band = st.radius();
  std::vector<double> K(g.size(), 0.0), H(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double E = rx[k].dot(rx[k]), F = rx[k].dot(ry[k]), G = ry[k].dot(ry[k]);
    const double det = E * G - F * F;
    const V3 cr = rx[k].cross(ry[k]);
    const double nn = cr.norm();
    if (!(det > 1e-14 * std::max(1.0, E * G)) || nn == 0.0) {
      c.degenerate.push_back(g.node(k));
      continue;
    }
    const V3 n = cr / nn;
    const double e = rxx[k].dot(n), f = rxy[k].dot(n), gg = ryy[k].dot(n);
    K[k] = (e * gg - f * f) / det;
    H[k] = (e * G - 2.0 * f * F + gg * E) / (2.0 * det);
  }
  c.K = RealField(g, std::move(K));
  c.H = RealField(g, std::move(H));
  return c;
}

namespace {

RelationFit fit(const std::string& family, const std::vector<std::string>& terms,
                const Eigen::MatrixXd& A) {
  RelationFit r;
  r.family = family;
  r.terms = terms;
  if (A.rows() == 0) return r;
  // Scale columns so that the null vector is not dominated by units.
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::VectorXd v = svd.matrixV().col(s.size() - 1).cwiseQuotient(scale);
  v.normalize();
  r.coeffs.assign(v.data(), v.data() + v.size());
  r.rms = (A * v).norm() / std::sqrt(static_cast<double>(A.rows()));
  r.condition = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
  return r;
}

double spread(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return std::abs(mean) > 0.0 ? (*hi - *lo) / std::abs(mean) : (*hi - *lo);
}

}  // namespace

WeingartenReport weingarten_probe(const CurvatureField& c) {
  const Grid& g = c.K.grid;
  WeingartenReport rep;
  std::vector<double> ks, hs;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (in_band(g, k, c.band)) continue;
    if (std::find(c.degenerate.begin(), c.degenerate.end(), g.node(k)) != c.degenerate.end()) continue;
    ks.push_back(c.K.values[k]);
    hs.push_back(c.H.values[k]);
    rep.scatter.emplace_back(c.K.values[k], c.H.values[k]);
  }
  const auto n = static_cast<Eigen::Index>(ks.size());
  if (n == 0) return rep;
  rep.K_mean = cgrid::pairwise_sum(ks) / static_cast<double>(n);
  rep.H_mean = cgrid::pairwise_sum(hs) / static_cast<double>(n);
  rep.K_spread = spread(ks, rep.K_mean);
  rep.H_spread = spread(hs, rep.H_mean);

  Eigen::MatrixXd lin(n, 3), quad(n, 6);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double K = ks[r], H = hs[r];
    lin.row(r) << K, H, 1.0;
    quad.row(r) << K * K, K * H, H * H, K, H, 1.0;
  }
  rep.linear = fit("linear", {"K", "H", "1"}, lin);
  rep.quadratic = fit("quadratic", {"K^2", "K H", "H^2", "K", "H", "1"}, quad);
  return rep;
}

}  // namespace weierlab::geom
