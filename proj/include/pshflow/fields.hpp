#pragma once

#include <vector>

#include "pshflow/grid.hpp"

namespace pshflow {

// Field of complex n x n matrices, one per grid point (coefficients of
// (1,1)-forms, (n-1,n-1)-forms, metrics, ...). Entry (i,j) of the matrix at
// a point is the coefficient with holomorphic index i and antiholomorphic
// index j, e.g. alpha_{i jbar}.
class MatrixField {
 public:
  MatrixField(const Grid& grid, int dim);

  const Grid& grid() const { return *grid_; }
  int dim() const { return dim_; }
  std::size_t npts() const { return grid_->npts(); }

  Eigen::Map<SmallMat> at(std::size_t p) {
    return {data_.data() + p * dim_ * dim_, dim_, dim_};
  }
  Eigen::Map<const SmallMat> at(std::size_t p) const {
    return {data_.data() + p * dim_ * dim_, dim_, dim_};
  }

  // Scalar field of a single entry.
  ScalarField entry(int i, int j) const;
  void set_entry(int i, int j, const ScalarField& f);

  double max_hermiticity_residual() const;
  double sup_norm() const;  // max over points of max-abs entry

  MatrixField& operator+=(const MatrixField& o);
  MatrixField& operator-=(const MatrixField& o);
  MatrixField& operator*=(double s);
  friend MatrixField operator+(MatrixField a, const MatrixField& b) {
    a += b;
    return a;
  }
  friend MatrixField operator-(MatrixField a, const MatrixField& b) {
    a -= b;
    return a;
  }
  friend MatrixField operator*(double s, MatrixField a) {
    a *= s;
    return a;
  }

 private:
  const Grid* grid_;
  int dim_;
  std::vector<cxd> data_;
};

// Field of (1,0)-forms a_i (or any rank-1 complex tensor).
class VectorField {
 public:
  VectorField(const Grid& grid, int dim);
  const Grid& grid() const { return *grid_; }
  int dim() const { return dim_; }
  cxd& at(std::size_t p, int i) { return data_[p * dim_ + i]; }
  cxd at(std::size_t p, int i) const { return data_[p * dim_ + i]; }

 private:
  const Grid* grid_;
  int dim_;
  std::vector<cxd> data_;
};

// Rank-3 tensor field, index order (k, i, j): Christoffel symbols
// Gamma^k_{ij}, torsion T^k_{ij}, covariant derivatives nabla_i a_j, ...
class Tensor3Field {
 public:
  Tensor3Field(const Grid& grid, int dim);
  const Grid& grid() const { return *grid_; }
  int dim() const { return dim_; }
  cxd& at(std::size_t p, int k, int i, int j) {
    return data_[((p * dim_ + k) * dim_ + i) * dim_ + j];
  }
  cxd at(std::size_t p, int k, int i, int j) const {
    return data_[((p * dim_ + k) * dim_ + i) * dim_ + j];
  }
  double sup_norm() const;

 private:
  const Grid* grid_;
  int dim_;
  std::vector<cxd> data_;
};

// Hermitian positive definite metric field g_{i jbar} with cached pointwise
// Cholesky factors, inverses and log-determinants.
class MetricField {
 public:
  // Validates Hermiticity (1e-13 relative) and positivity; a metric whose
  // smallest eigenvalue falls below 1e-10 times the largest is rejected.
  explicit MetricField(MatrixField g);

  const Grid& grid() const { return g_.grid(); }
  int dim() const { return g_.dim(); }
  std::size_t npts() const { return g_.npts(); }

  const MatrixField& mat() const { return g_; }
  Eigen::Map<const SmallMat> at(std::size_t p) const { return g_.at(p); }
  Eigen::Map<const SmallMat> inv(std::size_t p) const { return inv_.at(p); }
  // Lower-triangular L with g = L L^*.
  Eigen::Map<const SmallMat> chol(std::size_t p) const { return chol_.at(p); }
  Eigen::Map<const SmallMat> chol_inv(std::size_t p) const {
    return chol_inv_.at(p);
  }
  double log_det(std::size_t p) const { return log_det_[p]; }
  const ScalarField& log_det_field() const { return log_det_field_; }

 private:
  MatrixField g_;
  MatrixField inv_, chol_, chol_inv_;
  std::vector<double> log_det_;
  ScalarField log_det_field_;
};

// Hermitian Hessian u_{i jbar} = d_i d_jbar u of a real scalar field.
MatrixField hermitian_hessian(const ScalarField& u);

// (1,0)-form du = (d_i u) dz^i.
VectorField gradient_form(const ScalarField& u);

// tr_omega(alpha) = g^{i jbar} alpha_{i jbar} as a scalar field.
ScalarField trace_form(const MetricField& g, const MatrixField& alpha);

// Pointwise trace pairing tr(G^{-1} A) for one point.
inline cxd trace_pair(const Eigen::Ref<const SmallMat>& ginv,
                      const Eigen::Ref<const SmallMat>& a) {
  return (ginv * a).trace();
}

// Constant-coefficient identity metric (the flat torus background).
MetricField flat_metric(const Grid& grid);

// Builds a metric field from a pointwise matrix function.
MatrixField matrix_field_from_fn(
    const Grid& grid, int dim,
    const std::function<SmallMat(const std::array<double, 6>&)>& fn);

}  // namespace pshflow
