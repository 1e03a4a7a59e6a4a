#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "weierlab/cgrid.hpp"

namespace weierlab {

/// Small complex matrix (2x2 or 3x3) without heap allocation.
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Grid of dim x dim complex matrices, stored entry-wise so that each entry
/// can be differentiated as an ordinary field.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(const cgrid::Grid& g, int dim);
  MatrixField(int dim, std::vector<cgrid::ComplexField> entries);

  static MatrixField from_function(const cgrid::Grid& g, int dim,
                                   const std::function<Mat(std::size_t)>& per_node);

  int dim() const noexcept { return dim_; }
  const cgrid::Grid& grid() const noexcept { return entries_.front().grid(); }
  const cgrid::ComplexField& entry(int r, int c) const { return entries_[r * dim_ + c]; }

  /// Matrix at flat node index k.
  Mat at(std::size_t k) const;
  Mat at(const Node& n) const { return at(grid().index(n)); }

  MatrixField adjoint() const;
  /// Entry-wise map of the component fields.
  MatrixField map_entries(const std::function<cgrid::ComplexField(const cgrid::ComplexField&)>& fn) const;

  friend MatrixField operator+(const MatrixField& a, const MatrixField& b);
  friend MatrixField operator-(const MatrixField& a, const MatrixField& b);
  /// Node-wise matrix product.
  friend MatrixField operator*(const MatrixField& a, const MatrixField& b);
  /// Node-wise scaling by a scalar field.
  friend MatrixField operator*(const cgrid::ComplexField& s, const MatrixField& a);
  friend MatrixField operator*(cplx s, const MatrixField& a);

 private:
  int dim_ = 0;
  std::vector<cgrid::ComplexField> entries_;
};

MatrixField d_z(const MatrixField& m, const cgrid::Stencil& st = {});
MatrixField d_zbar(const MatrixField& m, const cgrid::Stencil& st = {});
MatrixField commutator(const MatrixField& a, const MatrixField& b);

/// Frobenius norm per node.
cgrid::RealField frobenius(const MatrixField& m);

}  // namespace weierlab
