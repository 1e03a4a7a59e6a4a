#pragma once

// Complex-plane grid calculus: sampled fields on a rectangle of the z-plane,
// Wirtinger derivatives, harmonicity checks, harmonic conjugates and path
// integration of 1-forms F dz + G dzbar.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "weierlab/error.hpp"

namespace weierlab {

using cplx = std::complex<double>;

namespace cgrid {

/// Rectangular sampling of [x_min, x_max] x [y_min, y_max].
/// Nodes are stored row-major: index = j * nx + i.
class Grid {
 public:
  Grid() = default;
  Grid(double x_min, double x_max, double y_min, double y_max, std::size_t nx, std::size_t ny);

  /// Square domain [-half, half]^2 with n x n nodes.
  static Grid square(double half_width, std::size_t n);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_min() const noexcept { return y_min_; }
  double y_max() const noexcept { return y_max_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double hx() const noexcept { return (x_max_ - x_min_) / static_cast<double>(nx_ - 1); }
  double hy() const noexcept { return (y_max_ - y_min_) / static_cast<double>(ny_ - 1); }
  double h() const noexcept { return hx() > hy() ? hx() : hy(); }
  std::size_t size() const noexcept { return nx_ * ny_; }

  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * hx(); }
  double y(std::size_t j) const noexcept { return y_min_ + static_cast<double>(j) * hy(); }
  cplx z(std::size_t i, std::size_t j) const noexcept { return {x(i), y(j)}; }
  cplx z(const Node& n) const noexcept { return z(n.i, n.j); }

  std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx_ + i; }
  std::size_t index(const Node& n) const noexcept { return index(n.i, n.j); }
  Node node(std::size_t idx) const noexcept { return {idx % nx_, idx / nx_}; }
  bool contains(const Node& n) const noexcept { return n.i < nx_ && n.j < ny_; }

  /// Reference node for integration constants and branch selection (centre).
  Node base_node() const noexcept { return {nx_ / 2, ny_ / 2}; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double x_min_ = -1.0, x_max_ = 1.0, y_min_ = -1.0, y_max_ = 1.0;
  std::size_t nx_ = 8, ny_ = 8;
};

enum class Scheme {
  explicit_fd,  ///< explicit central differences, one-sided at the boundary
  compact,      ///< Pade (tridiagonal) scheme; order 4 only
};

/// Finite-difference configuration. Order 4 defaults to the compact scheme;
/// order 2 is always explicit.
struct Stencil {
  int order = 4;
  Scheme scheme = Scheme::compact;

  /// Throws ConfigError when the order is unsupported or the grid too small.
  void validate(const Grid& g) const;
  /// Half-width of the explicit stencil of the same order.
  std::size_t radius() const noexcept { return order == 2 ? 1 : 2; }
};

/// Order-aware acceptance threshold tol(h) = c * h^order.
double tolerance(const Grid& g, int order, double c = 10.0);

/// Complex scalar sampled on a grid. All values are finite.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(Grid g, std::vector<cplx> values, std::string label = {});
  ComplexField(Grid g, cplx constant, std::string label = {});

  static ComplexField from_function(const Grid& g, const std::function<cplx(cplx)>& fn,
                                    std::string label = {});

  const Grid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return values_[grid_.index(i, j)]; }
  const cplx& operator[](std::size_t idx) const noexcept { return values_[idx]; }
  const cplx& at(const Node& n) const noexcept { return values_[grid_.index(n)]; }

  ComplexField conj() const;
  ComplexField real_part() const;
  ComplexField imag_part() const;
  /// |f|^2 as a real-valued complex field.
  ComplexField abs2() const;
  ComplexField map(const std::function<cplx(cplx)>& fn) const;
  double max_abs() const;
  /// Largest |Im f| over the grid.
  double max_imag() const;

  ComplexField& operator+=(const ComplexField& o);
  ComplexField& operator-=(const ComplexField& o);
  ComplexField& operator*=(const ComplexField& o);
  ComplexField& operator*=(cplx s);

  friend ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
  friend ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
  friend ComplexField operator*(ComplexField a, const ComplexField& b) { return a *= b; }
  friend ComplexField operator*(ComplexField a, cplx s) { return a *= s; }
  friend ComplexField operator*(cplx s, ComplexField a) { return a *= s; }
  friend ComplexField operator-(const ComplexField& a) { return a * cplx{-1.0, 0.0}; }

 private:
  void check_finite() const;
  void require_same_grid(const ComplexField& o) const;

  Grid grid_;
  std::vector<cplx> values_;
  std::string label_;
};

/// Pointwise quotient; throws SingularityError where |b| <= delta.
ComplexField divide(const ComplexField& a, const ComplexField& b, double delta = 0.0);

/// Real per-node quantity (residual magnitudes, metric coefficients, curvature).
struct RealField {
  Grid grid;
  std::vector<double> values;

  RealField() = default;
  RealField(Grid g, std::vector<double> v);
  RealField(Grid g, double constant);
  double operator()(std::size_t i, std::size_t j) const noexcept { return values[grid.index(i, j)]; }
  double at(const Node& n) const noexcept { return values[grid.index(n)]; }
};

RealField abs(const ComplexField& f);

/// Max and L2 norms of a residual field. `interior_max` ignores a boundary
/// band of `band` nodes on every side.
struct Summary {
  double max = 0.0;
  double l2 = 0.0;
  double interior_max = 0.0;
  Node argmax{};
  std::size_t band = 0;
};

Summary summarize(const RealField& r, std::size_t band = 0);

/// Pairwise (cascade) summation; result independent of thread count.
double pairwise_sum(std::span<const double> xs);

ComplexField d_x(const ComplexField& f, const Stencil& st = {});
ComplexField d_y(const ComplexField& f, const Stencil& st = {});
/// d/dz = (d/dx - i d/dy) / 2
ComplexField d_z(const ComplexField& f, const Stencil& st = {});
/// d/dzbar = (d/dx + i d/dy) / 2
ComplexField d_zbar(const ComplexField& f, const Stencil& st = {});
/// d^2/(dz dzbar) = Laplacian / 4, by composition of first derivatives.
ComplexField d_zzbar(const ComplexField& f, const Stencil& st = {});

/// |4 f_{z zbar}| per node.
RealField harmonic_residual(const ComplexField& f, const Stencil& st = {});

/// beta with rho + i beta analytic and beta = 0 at the base node. Throws
/// PreconditionError if rho is not harmonic within `tol` (default tol(h)).
ComplexField harmonic_conjugate(const ComplexField& rho, const Stencil& st = {}, double tol = -1.0);

/// Staircase path of 4-connected grid nodes.
class GridPath {
 public:
  GridPath() = default;
  explicit GridPath(std::vector<Node> nodes);

  /// Axis-aligned staircase from `from` to `to`: along x first, then y (or
  /// the reverse when x_first is false).
  static GridPath staircase(const Node& from, const Node& to, bool x_first = true);
  /// Concatenation of staircases through the given waypoints.
  static GridPath through(const std::vector<Node>& waypoints, bool x_first = true);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& front() const { return nodes_.front(); }
  const Node& back() const { return nodes_.back(); }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

enum class Quadrature {
  trapezoid,  ///< second order
  corrected,  ///< trapezoid with endpoint-derivative correction, fourth order
};

/// Integrates F dz + G dzbar along staircase paths. With the corrected rule
/// each unit step adds -d^2/12 (phi'(b) - phi'(a)), which telescopes along
/// straight runs.
class OneFormIntegrator {
 public:
  OneFormIntegrator(ComplexField F, ComplexField G, Quadrature q = Quadrature::trapezoid,
                    const Stencil& st = {});

  /// Integral over one unit step between 4-neighbours.
  cplx step(const Node& a, const Node& b) const;
  cplx along(const GridPath& path) const;
  /// Integral from `base` to every node. x_first: along the base row, then up
  /// and down each column; otherwise along the base column, then each row.
  ComplexField cumulative(const Node& base, bool x_first = true) const;

  const Grid& grid() const noexcept { return F_.grid(); }

 private:
  ComplexField F_, G_;
  Quadrature q_;
  ComplexField Fx_, Fy_, Gx_, Gy_;
};

cplx integrate_oneform(const ComplexField& F, const ComplexField& G, const GridPath& path,
                       Quadrature q = Quadrature::trapezoid, const Stencil& st = {});

/// |F_zbar - G_z| per node.
RealField closedness_residual(const ComplexField& F, const ComplexField& G, const Stencil& st = {});

/// Tensor-product cubic Lagrange interpolation at an arbitrary point inside
/// the grid rectangle. Throws ConfigError outside.
cplx sample(const ComplexField& f, cplx z);

/// Data-parallel width used by per-line and per-node loops. Initialised from
/// WEIERLAB_THREADS (default 1).
std::size_t threads();
void set_threads(std::size_t n);

/// Runs fn(k) for k in [0, n) across threads(); fn must not share mutable state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cgrid
}  // namespace weierlab
