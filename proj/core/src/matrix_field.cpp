#include "weierlab/matrix_field.hpp"

#include <cmath>

namespace weierlab {

using cgrid::ComplexField;
using cgrid::Grid;

MatrixField::MatrixField(const Grid& g, int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw ConfigError("matrix fields must be 2x2 or 3x3");
  entries_.assign(static_cast<std::size_t>(dim * dim), ComplexField(g, cplx{}));
}

MatrixField::MatrixField(int dim, std::vector<ComplexField> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim != 2 && dim != 3) throw ConfigError("matrix fields must be 2x2 or 3x3");
  if (entries_.size() != static_cast<std::size_t>(dim * dim)) {
    throw ConfigError("matrix field needs dim*dim entries");
  }
  for (const auto& e : entries_) {
    if (!(e.grid() == entries_.front().grid())) throw ConfigError("matrix entries on different grids");
  }
}

MatrixField MatrixField::from_function(const Grid& g, int dim,
                                       const std::function<Mat(std::size_t)>& per_node) {
  const std::size_t n = g.size();
  std::vector<std::vector<cplx>> buf(static_cast<std::size_t>(dim * dim), std::vector<cplx>(n));
  cgrid::parallel_for(n, [&](std::size_t k) {
    const Mat m = per_node(k);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) buf[r * dim + c][k] = m(r, c);
  });
  std::vector<ComplexField> entries;
  entries.reserve(buf.size());
  for (auto& b : buf) entries.emplace_back(g, std::move(b));
  return MatrixField(dim, std::move(entries));
}

Mat MatrixField::at(std::size_t k) const {
  Mat m(dim_, dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) m(r, c) = entries_[r * dim_ + c][k];
  return m;
}

MatrixField MatrixField::adjoint() const {
  std::vector<ComplexField> e(entries_.size());
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) e[r * dim_ + c] = entries_[c * dim_ + r].conj();
  return MatrixField(dim_, std::move(e));
}

MatrixField MatrixField::map_entries(
    const std::function<ComplexField(const ComplexField&)>& fn) const {
  std::vector<ComplexField> e;
  e.reserve(entries_.size());
  for (const auto& x : entries_) e.push_back(fn(x));
  return MatrixField(dim_, std::move(e));
}

namespace {

void require_compatible(const MatrixField& a, const MatrixField& b) {
  if (a.dim() != b.dim()) throw ConfigError("matrix dimension mismatch");
  if (!(a.grid() == b.grid())) throw ConfigError("matrix fields on different grids");
}

}  // namespace

MatrixField operator+(const MatrixField& a, const MatrixField& b) {
  require_compatible(a, b);
  std::vector<ComplexField> e;
  for (std::size_t k = 0; k < a.entries_.size(); ++k) e.push_back(a.entries_[k] + b.entries_[k]);
  return MatrixField(a.dim_, std::move(e));
}

MatrixField operator-(const MatrixField& a, const MatrixField& b) {
  require_compatible(a, b);
  std::vector<ComplexField> e;
  for (std::size_t k = 0; k < a.entries_.size(); ++k) e.push_back(a.entries_[k] - b.entries_[k]);
  return MatrixField(a.dim_, std::move(e));
}

MatrixField operator*(const MatrixField& a, const MatrixField& b) {
  require_compatible(a, b);
  const int d = a.dim_;
  return MatrixField::from_function(a.grid(), d, [&](std::size_t k) -> Mat { return a.at(k) * b.at(k); });
}

MatrixField operator*(const ComplexField& s, const MatrixField& a) {
  std::vector<ComplexField> e;
  for (const auto& x : a.entries_) e.push_back(s * x);
  return MatrixField(a.dim_, std::move(e));
}

MatrixField operator*(cplx s, const MatrixField& a) {
  std::vector<ComplexField> e;
  for (const auto& x : a.entries_) e.push_back(s * x);
  return MatrixField(a.dim_, std::move(e));
}

MatrixField d_z(const MatrixField& m, const cgrid::Stencil& st) {
  return m.map_entries([&](const ComplexField& f) { return cgrid::d_z(f, st); });
}

MatrixField d_zbar(const MatrixField& m, const cgrid::Stencil& st) {
  return m.map_entries([&](const ComplexField& f) { return cgrid::d_zbar(f, st); });
}

MatrixField commutator(const MatrixField& a, const MatrixField& b) {
  require_compatible(a, b);
  return MatrixField::from_function(a.grid(), a.dim(), [&](std::size_t k) -> Mat {
    const Mat x = a.at(k), y = b.at(k);
    return x * y - y * x;
  });
}

cgrid::RealField frobenius(const MatrixField& m) {
  const Grid& g = m.grid();
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = m.at(k).norm();
  return cgrid::RealField(g, std::move(v));
}

}  // namespace weierlab
