#include "weierlab/cgrid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace weierlab {

std::string to_string(const Node& n) {
  return "(" + std::to_string(n.i) + ", " + std::to_string(n.j) + ")";
}

namespace cgrid {

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(double x_min, double x_max, double y_min, double y_max, std::size_t nx, std::size_t ny)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), nx_(nx), ny_(ny) {
  if (nx < 8 || ny < 8) {
    throw ConfigError("grid needs at least 8 nodes per axis, got " + std::to_string(nx) + " x " +
                      std::to_string(ny));
  }
  if (!(x_max > x_min) || !(y_max > y_min) || !std::isfinite(x_min) || !std::isfinite(x_max) ||
      !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw ConfigError("grid bounds must be finite with x_max > x_min and y_max > y_min");
  }
}

Grid Grid::square(double half_width, std::size_t n) {
  return Grid(-half_width, half_width, -half_width, half_width, n, n);
}

void Stencil::validate(const Grid& g) const {
  if (order != 2 && order != 4) {
    throw ConfigError("stencil order must be 2 or 4, got " + std::to_string(order));
  }
  const std::size_t need = order == 2 ? 4 : 6;
  if (g.nx() < need || g.ny() < need) {
    throw ConfigError("grid too small for stencil order " + std::to_string(order));
  }
}

double tolerance(const Grid& g, int order, double c) { return c * std::pow(g.h(), order); }

// ---------------------------------------------------------------------------
// Threads

namespace {

std::size_t initial_threads() {
  if (const char* env = std::getenv("WEIERLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

std::size_t& thread_count() {
  static std::size_t n = initial_threads();
  return n;
}

}  // namespace

std::size_t threads() { return thread_count(); }
void set_threads(std::size_t n) { thread_count() = n == 0 ? 1 : n; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t width = std::min(threads(), n);
  if (width <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(width);
  const std::size_t chunk = (n + width - 1) / width;
  for (std::size_t t = 0; t < width; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (std::size_t k = lo; k < hi; ++k) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// ComplexField

ComplexField::ComplexField(Grid g, std::vector<cplx> values, std::string label)
    : grid_(std::move(g)), values_(std::move(values)), label_(std::move(label)) {
  if (values_.size() != grid_.size()) {
    throw ConfigError("field size " + std::to_string(values_.size()) + " does not match grid size " +
                      std::to_string(grid_.size()));
  }
  check_finite();
}

ComplexField::ComplexField(Grid g, cplx constant, std::string label)
    : ComplexField(g, std::vector<cplx>(g.size(), constant), std::move(label)) {}

ComplexField ComplexField::from_function(const Grid& g, const std::function<cplx(cplx)>& fn,
                                         std::string label) {
  std::vector<cplx> v(g.size());
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) v[g.index(i, j)] = fn(g.z(i, j));
  return ComplexField(g, std::move(v), std::move(label));
}

void ComplexField::check_finite() const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k].real()) || !std::isfinite(values_[k].imag())) {
      throw SingularityError("non-finite value in field '" + label_ + "'", grid_.node(k));
    }
  }
}

void ComplexField::require_same_grid(const ComplexField& o) const {
  if (!(grid_ == o.grid_)) throw ConfigError("fields live on different grids");
}

ComplexField ComplexField::map(const std::function<cplx(cplx)>& fn) const {
  std::vector<cplx> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), fn);
  return ComplexField(grid_, std::move(v), label_);
}

ComplexField ComplexField::conj() const {
  return map([](cplx c) { return std::conj(c); });
}
ComplexField ComplexField::real_part() const {
  return map([](cplx c) { return cplx{c.real(), 0.0}; });
}
ComplexField ComplexField::imag_part() const {
  return map([](cplx c) { return cplx{c.imag(), 0.0}; });
}
ComplexField ComplexField::abs2() const {
  return map([](cplx c) { return cplx{std::norm(c), 0.0}; });
}

double ComplexField::max_abs() const {
  double m = 0.0;
  for (const auto& c : values_) m = std::max(m, std::abs(c));
  return m;
}

double ComplexField::max_imag() const {
  double m = 0.0;
  for (const auto& c : values_) m = std::max(m, std::abs(c.imag()));
  return m;
}

ComplexField& ComplexField::operator+=(const ComplexField& o) {
  require_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  check_finite();
  return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& o) {
  require_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  check_finite();
  return *this;
}

ComplexField& ComplexField::operator*=(const ComplexField& o) {
  require_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
  check_finite();
  return *this;
}

ComplexField& ComplexField::operator*=(cplx s) {
  for (auto& c : values_) c *= s;
  check_finite();
  return *this;
}

ComplexField divide(const ComplexField& a, const ComplexField& b, double delta) {
  if (!(a.grid() == b.grid())) throw ConfigError("fields live on different grids");
  const Grid& g = a.grid();
  std::vector<cplx> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(b[k]) <= delta || b[k] == cplx{}) {
      throw SingularityError("vanishing denominator '" + b.label() + "'", g.node(k));
    }
    v[k] = a[k] / b[k];
  }
  return ComplexField(g, std::move(v), a.label());
}

RealField::RealField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw ConfigError("real field size does not match grid");
}

RealField::RealField(Grid g, double constant) : grid(g), values(g.size(), constant) {}

RealField abs(const ComplexField& f) {
  std::vector<double> v(f.grid().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::abs(f[k]);
  return RealField(f.grid(), std::move(v));
}

// ---------------------------------------------------------------------------
// Norms

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Summary summarize(const RealField& r, std::size_t band) {
  const Grid& g = r.grid;
  Summary s;
  s.band = band;
  std::vector<double> sq(r.values.size());
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    const double v = r.values[k];
    sq[k] = v * v;
    const Node n = g.node(k);
    if (v > s.max) {
      s.max = v;
      s.argmax = n;
    }
    const bool interior =
        n.i >= band && n.j >= band && n.i + band < g.nx() && n.j + band < g.ny();
    if (interior) s.interior_max = std::max(s.interior_max, v);
  }
  s.l2 = std::sqrt(g.hx() * g.hy() * pairwise_sum(sq));
  return s;
}

// ---------------------------------------------------------------------------
// One-dimensional derivative operators applied along grid lines.

namespace {

struct Line {
  const cplx* in;
  cplx* out;
  std::size_t stride;
  std::size_t n;
};

inline const cplx& at(const Line& l, std::size_t k) { return l.in[k * l.stride]; }
inline cplx& out(const Line& l, std::size_t k) { return l.out[k * l.stride]; }

void diff2(const Line& l, double h) {
  const std::size_t n = l.n;
  const double c = 1.0 / (2.0 * h);
  out(l, 0) = c * (-3.0 * at(l, 0) + 4.0 * at(l, 1) - at(l, 2));
  for (std::size_t k = 1; k + 1 < n; ++k) out(l, k) = c * (at(l, k + 1) - at(l, k - 1));
  out(l, n - 1) = c * (3.0 * at(l, n - 1) - 4.0 * at(l, n - 2) + at(l, n - 3));
}

void diff4_explicit(const Line& l, double h) {
  const std::size_t n = l.n;
  const double c = 1.0 / (12.0 * h);
  out(l, 0) = c * (-25.0 * at(l, 0) + 48.0 * at(l, 1) - 36.0 * at(l, 2) + 16.0 * at(l, 3) -
                   3.0 * at(l, 4));
  out(l, 1) = c * (-3.0 * at(l, 0) - 10.0 * at(l, 1) + 18.0 * at(l, 2) - 6.0 * at(l, 3) + at(l, 4));
  for (std::size_t k = 2; k + 2 < n; ++k) {
    out(l, k) = c * (-at(l, k + 2) + 8.0 * at(l, k + 1) - 8.0 * at(l, k - 1) + at(l, k - 2));
  }
  out(l, n - 2) = -c * (-3.0 * at(l, n - 1) - 10.0 * at(l, n - 2) + 18.0 * at(l, n - 3) -
                        6.0 * at(l, n - 4) + at(l, n - 5));
  out(l, n - 1) = -c * (-25.0 * at(l, n - 1) + 48.0 * at(l, n - 2) - 36.0 * at(l, n - 3) +
                        16.0 * at(l, n - 4) - 3.0 * at(l, n - 5));
}

// Pade scheme: f'_{k-1}/4 + f'_k + f'_{k+1}/4 = 3/(4h) (f_{k+1} - f_{k-1}),
// closed by the fourth-order boundary row f'_0 + 3 f'_1 = (-17/6 f_0 + 3/2 f_1
// + 3/2 f_2 - 1/6 f_3) / h and its mirror image.
void diff4_compact(const Line& l, double h) {
  const std::size_t n = l.n;
  std::vector<double> sub(n, 0.25), diag(n, 1.0), sup(n, 0.25);
  std::vector<cplx> rhs(n);
  sub[0] = 0.0;
  sup[0] = 3.0;
  sub[n - 1] = 3.0;
  sup[n - 1] = 0.0;
  rhs[0] = (-17.0 / 6.0 * at(l, 0) + 1.5 * at(l, 1) + 1.5 * at(l, 2) - at(l, 3) / 6.0) / h;
  for (std::size_t k = 1; k + 1 < n; ++k) rhs[k] = 0.75 / h * (at(l, k + 1) - at(l, k - 1));
  rhs[n - 1] = -(-17.0 / 6.0 * at(l, n - 1) + 1.5 * at(l, n - 2) + 1.5 * at(l, n - 3) -
                 at(l, n - 4) / 6.0) /
               h;
  // Thomas algorithm; pivots stay >= ~0.19 for this matrix.
  for (std::size_t k = 1; k < n; ++k) {
    const double m = sub[k] / diag[k - 1];
    diag[k] -= m * sup[k - 1];
    rhs[k] -= m * rhs[k - 1];
  }
  out(l, n - 1) = rhs[n - 1] / diag[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) out(l, k) = (rhs[k] - sup[k] * out(l, k + 1)) / diag[k];
}

void diff_line(const Line& l, double h, const Stencil& st) {
  if (st.order == 2) {
    diff2(l, h);
  } else if (st.scheme == Scheme::compact) {
    diff4_compact(l, h);
  } else {
    diff4_explicit(l, h);
  }
}

}  // namespace

ComplexField d_x(const ComplexField& f, const Stencil& st) {
  const Grid& g = f.grid();
  st.validate(g);
  std::vector<cplx> v(g.size());
  const cplx* in = f.values().data();
  parallel_for(g.ny(), [&](std::size_t j) {
    diff_line(Line{in + g.index(0, j), v.data() + g.index(0, j), 1, g.nx()}, g.hx(), st);
  });
  return ComplexField(g, std::move(v), f.label() + "_x");
}

ComplexField d_y(const ComplexField& f, const Stencil& st) {
  const Grid& g = f.grid();
  st.validate(g);
  std::vector<cplx> v(g.size());
  const cplx* in = f.values().data();
  parallel_for(g.nx(), [&](std::size_t i) {
    diff_line(Line{in + i, v.data() + i, g.nx(), g.ny()}, g.hy(), st);
  });
  return ComplexField(g, std::move(v), f.label() + "_y");
}

namespace {

ComplexField wirtinger(const ComplexField& f, const Stencil& st, double sign) {
  const ComplexField fx = d_x(f, st);
  const ComplexField fy = d_y(f, st);
  std::vector<cplx> v(f.grid().size());
  const cplx iy{0.0, sign};
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * (fx[k] + iy * fy[k]);
  return ComplexField(f.grid(), std::move(v));
}

}  // namespace

ComplexField d_z(const ComplexField& f, const Stencil& st) {
  auto r = wirtinger(f, st, -1.0);
  r.set_label(f.label() + "_z");
  return r;
}

ComplexField d_zbar(const ComplexField& f, const Stencil& st) {
  auto r = wirtinger(f, st, 1.0);
  r.set_label(f.label() + "_zbar");
  return r;
}

ComplexField d_zzbar(const ComplexField& f, const Stencil& st) {
  auto r = d_z(d_zbar(f, st), st);
  r.set_label(f.label() + "_zzbar");
  return r;
}

RealField harmonic_residual(const ComplexField& f, const Stencil& st) {
  const ComplexField lap = d_zzbar(f, st);
  std::vector<double> v(lap.grid().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::abs(4.0 * lap[k]);
  return RealField(f.grid(), std::move(v));
}

ComplexField harmonic_conjugate(const ComplexField& rho, const Stencil& st, double tol) {
  const Grid& g = rho.grid();
  if (tol < 0.0) tol = tolerance(g, st.order);
  const ComplexField re = rho.real_part();
  // One-sided second differences at the edge carry a larger constant, so only the interior is tested.
  const Summary hr = summarize(harmonic_residual(re, st), st.radius());
  if (hr.interior_max > tol) {
    throw PreconditionError("harmonic_conjugate: input is not harmonic", hr.interior_max);
  }
  // d(beta) = -rho_y dx + rho_x dy = F dz + G dzbar with F = -i rho_z, G = i rho_zbar.
  const cplx i{0.0, 1.0};
  const ComplexField F = -i * d_z(re, st);
  const ComplexField G = i * d_zbar(re, st);
  const Quadrature q = st.order >= 4 ? Quadrature::corrected : Quadrature::trapezoid;
  auto beta = OneFormIntegrator(F, G, q, st).cumulative(g.base_node(), true).real_part();
  beta.set_label("beta");
  return beta;
}

// ---------------------------------------------------------------------------
// Paths and 1-forms

GridPath::GridPath(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("empty grid path");
  for (std::size_t k = 1; k < nodes_.size(); ++k) {
    const auto& a = nodes_[k - 1];
    const auto& b = nodes_[k];
    const std::size_t di = a.i > b.i ? a.i - b.i : b.i - a.i;
    const std::size_t dj = a.j > b.j ? a.j - b.j : b.j - a.j;
    if (di + dj != 1) {
      throw ConfigError("grid path is not 4-connected between " + to_string(a) + " and " +
                        to_string(b));
    }
  }
}

namespace {

void walk(std::vector<Node>& out, Node cur, const Node& to, bool x_first) {
  auto step_i = [&] {
    while (cur.i != to.i) {
      cur.i = cur.i < to.i ? cur.i + 1 : cur.i - 1;
      out.push_back(cur);
    }
  };
  auto step_j = [&] {
    while (cur.j != to.j) {
      cur.j = cur.j < to.j ? cur.j + 1 : cur.j - 1;
      out.push_back(cur);
    }
  };
  if (x_first) {
    step_i();
    step_j();
  } else {
    step_j();
    step_i();
  }
}

}  // namespace

GridPath GridPath::staircase(const Node& from, const Node& to, bool x_first) {
  std::vector<Node> nodes{from};
  walk(nodes, from, to, x_first);
  return GridPath(std::move(nodes));
}

GridPath GridPath::through(const std::vector<Node>& waypoints, bool x_first) {
  if (waypoints.empty()) throw ConfigError("empty waypoint list");
  std::vector<Node> nodes{waypoints.front()};
  for (std::size_t k = 1; k < waypoints.size(); ++k) walk(nodes, waypoints[k - 1], waypoints[k], x_first);
  return GridPath(std::move(nodes));
}

OneFormIntegrator::OneFormIntegrator(ComplexField F, ComplexField G, Quadrature q, const Stencil& st)
    : F_(std::move(F)), G_(std::move(G)), q_(q) {
  if (!(F_.grid() == G_.grid())) throw ConfigError("1-form components live on different grids");
  if (q_ == Quadrature::corrected) {
    Fx_ = d_x(F_, st);
    Fy_ = d_y(F_, st);
    Gx_ = d_x(G_, st);
    Gy_ = d_y(G_, st);
  }
}

cplx OneFormIntegrator::step(const Node& a, const Node& b) const {
  const Grid& g = grid();
  const std::size_t ka = g.index(a), kb = g.index(b);
  const cplx i{0.0, 1.0};
  if (a.j == b.j) {
    // dz = dzbar = dx
    const double d = b.i > a.i ? g.hx() : -g.hx();
    cplx s = 0.5 * d * ((F_[ka] + G_[ka]) + (F_[kb] + G_[kb]));
    if (q_ == Quadrature::corrected) {
      s -= d * d / 12.0 * ((Fx_[kb] + Gx_[kb]) - (Fx_[ka] + Gx_[ka]));
    }
    return s;
  }
  // dz = i dy, dzbar = -i dy
  const double d = b.j > a.j ? g.hy() : -g.hy();
  cplx s = 0.5 * d * i * ((F_[ka] - G_[ka]) + (F_[kb] - G_[kb]));
  if (q_ == Quadrature::corrected) {
    s -= d * d / 12.0 * i * ((Fy_[kb] - Gy_[kb]) - (Fy_[ka] - Gy_[ka]));
  }
  return s;
}

cplx OneFormIntegrator::along(const GridPath& path) const {
  const Grid& g = grid();
  for (const auto& n : path.nodes()) {
    if (!g.contains(n)) throw ConfigError("path leaves the grid at node " + to_string(n));
  }
  cplx s{};
  const auto& nodes = path.nodes();
  for (std::size_t k = 1; k < nodes.size(); ++k) s += step(nodes[k - 1], nodes[k]);
  return s;
}

ComplexField OneFormIntegrator::cumulative(const Node& base, bool x_first) const {
  const Grid& g = grid();
  if (!g.contains(base)) throw ConfigError("base node outside the grid: " + to_string(base));
  std::vector<cplx> v(g.size());
  auto idx = [&](std::size_t i, std::size_t j) { return g.index(i, j); };
  if (x_first) {
    const std::size_t j0 = base.j;
    for (std::size_t i = base.i + 1; i < g.nx(); ++i)
      v[idx(i, j0)] = v[idx(i - 1, j0)] + step({i - 1, j0}, {i, j0});
    for (std::size_t i = base.i; i-- > 0;)
      v[idx(i, j0)] = v[idx(i + 1, j0)] + step({i + 1, j0}, {i, j0});
    parallel_for(g.nx(), [&](std::size_t i) {
      for (std::size_t j = j0 + 1; j < g.ny(); ++j)
        v[idx(i, j)] = v[idx(i, j - 1)] + step({i, j - 1}, {i, j});
      for (std::size_t j = j0; j-- > 0;) v[idx(i, j)] = v[idx(i, j + 1)] + step({i, j + 1}, {i, j});
    });
  } else {
    const std::size_t i0 = base.i;
    for (std::size_t j = base.j + 1; j < g.ny(); ++j)
      v[idx(i0, j)] = v[idx(i0, j - 1)] + step({i0, j - 1}, {i0, j});
    for (std::size_t j = base.j; j-- > 0;)
      v[idx(i0, j)] = v[idx(i0, j + 1)] + step({i0, j + 1}, {i0, j});
    parallel_for(g.ny(), [&](std::size_t j) {
      for (std::size_t i = i0 + 1; i < g.nx(); ++i)
        v[idx(i, j)] = v[idx(i - 1, j)] + step({i - 1, j}, {i, j});
      for (std::size_t i = i0; i-- > 0;) v[idx(i, j)] = v[idx(i + 1, j)] + step({i + 1, j}, {i, j});
    });
  }
  return ComplexField(g, std::move(v));
}

cplx integrate_oneform(const ComplexField& F, const ComplexField& G, const GridPath& path,
                       Quadrature q, const Stencil& st) {
  return OneFormIntegrator(F, G, q, st).along(path);
}

RealField closedness_residual(const ComplexField& F, const ComplexField& G, const Stencil& st) {
  if (!(F.grid() == G.grid())) throw ConfigError("1-form components live on different grids");
  const ComplexField a = d_zbar(F, st);
  const ComplexField b = d_z(G, st);
  std::vector<double> v(F.grid().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::abs(a[k] - b[k]);
  return RealField(F.grid(), std::move(v));
}

// ---------------------------------------------------------------------------
// Interpolation

namespace {

// Start index of a 4-point stencil around coordinate t (in cell units) and
// the Lagrange weights for that stencil.
std::size_t lagrange4(double t, std::size_t n, std::array<double, 4>& w) {
  long base = static_cast<long>(std::floor(t)) - 1;
  base = std::clamp(base, 0L, static_cast<long>(n) - 4);
  for (int a = 0; a < 4; ++a) {
    double num = 1.0, den = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      num *= t - static_cast<double>(base + b);
      den *= static_cast<double>(a - b);
    }
    w[a] = num / den;
  }
  return static_cast<std::size_t>(base);
}

}  // namespace

cplx sample(const ComplexField& f, cplx z) {
  const Grid& g = f.grid();
  const double eps = 1e-12 * (1.0 + std::abs(z));
  if (z.real() < g.x_min() - eps || z.real() > g.x_max() + eps || z.imag() < g.y_min() - eps ||
      z.imag() > g.y_max() + eps) {
    throw ConfigError("sample point outside the grid rectangle");
  }
  std::array<double, 4> wx{}, wy{};
  const std::size_t i0 = lagrange4((z.real() - g.x_min()) / g.hx(), g.nx(), wx);
  const std::size_t j0 = lagrange4((z.imag() - g.y_min()) / g.hy(), g.ny(), wy);
  cplx s{};
  for (std::size_t b = 0; b < 4; ++b) {
    cplx row{};
    for (std::size_t a = 0; a < 4; ++a) row += wx[a] * f(i0 + a, j0 + b);
    s += wy[b] * row;
  }
  return s;
}

}  // namespace cgrid
}  // namespace weierlab
