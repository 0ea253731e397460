#include "pshflow/fields.hpp"

#include <cmath>

namespace pshflow {

MatrixField::MatrixField(const Grid& grid, int dim)
    : grid_(&grid), dim_(dim),
      data_(grid.npts() * static_cast<std::size_t>(dim) * dim, cxd(0.0)) {}

ScalarField MatrixField::entry(int i, int j) const {
  ScalarField f(*grid_);
  auto& v = f.values_mut();
  for (std::size_t p = 0; p < npts(); ++p) v[p] = at(p)(i, j);
  return f;
}

void MatrixField::set_entry(int i, int j, const ScalarField& f) {
  for (std::size_t p = 0; p < npts(); ++p) at(p)(i, j) = f[p];
}

double MatrixField::max_hermiticity_residual() const {
  double m = 0.0;
  for (std::size_t p = 0; p < npts(); ++p) {
    auto a = at(p);
    m = std::max(m, (a - a.adjoint()).cwiseAbs().maxCoeff());
  }
  return m;
}

double MatrixField::sup_norm() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

MatrixField& MatrixField::operator+=(const MatrixField& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

MatrixField& MatrixField::operator-=(const MatrixField& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

MatrixField& MatrixField::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

VectorField::VectorField(const Grid& grid, int dim)
    : grid_(&grid), dim_(dim), data_(grid.npts() * dim, cxd(0.0)) {}

Tensor3Field::Tensor3Field(const Grid& grid, int dim)
    : grid_(&grid), dim_(dim),
      data_(grid.npts() * static_cast<std::size_t>(dim) * dim * dim, cxd(0.0)) {}

double Tensor3Field::sup_norm() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

MetricField::MetricField(MatrixField g)
    : g_(std::move(g)),
      inv_(g_.grid(), g_.dim()),
      chol_(g_.grid(), g_.dim()),
      chol_inv_(g_.grid(), g_.dim()),
      log_det_(g_.npts(), 0.0),
      log_det_field_(g_.grid()) {
  const int n = g_.dim();
  double scale = std::max(g_.sup_norm(), 1.0);
  if (g_.max_hermiticity_residual() > 1e-13 * scale)
    throw NonHermitianError("metric is not Hermitian (residual " +
                            std::to_string(g_.max_hermiticity_residual()) + ")");
  auto& ld = log_det_field_.values_mut();
  for (std::size_t p = 0; p < g_.npts(); ++p) {
    SmallMat m = 0.5 * (g_.at(p) + g_.at(p).adjoint());  // kill fp drift
    Eigen::SelfAdjointEigenSolver<SmallMat> es(m, Eigen::EigenvaluesOnly);
    const double emin = es.eigenvalues()(0);
    const double emax = es.eigenvalues()(n - 1);
    if (!(emin > 1e-10 * std::abs(emax)))
      throw SingularMetricError(
          "metric singular or indefinite at grid point " + std::to_string(p) +
              " (min eigenvalue " + std::to_string(emin) + ")",
          p, emin);
    Eigen::LLT<SmallMat> llt(m);
    chol_.at(p) = llt.matrixL();
    chol_inv_.at(p) =
        SmallMat(llt.matrixL()).triangularView<Eigen::Lower>().solve(
            SmallMat::Identity(n, n));
    inv_.at(p) = chol_inv_.at(p).adjoint() * chol_inv_.at(p);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += 2.0 * std::log(chol_.at(p)(i, i).real());
    log_det_[p] = s;
    ld[p] = s;
  }
}

MatrixField hermitian_hessian(const ScalarField& u) {
  if (!u.is_real(1e-10))
    throw NonHermitianError("hermitian_hessian requires a real field");
  const Grid& g = u.grid();
  MatrixField h(g, g.n());
  for (int a = 0; a < g.n(); ++a) {
    for (int b = a; b < g.n(); ++b) {
      ScalarField d = spectral_partial2(u, a, b);
      for (std::size_t p = 0; p < g.npts(); ++p) {
        h.at(p)(a, b) = d[p];
        if (b != a) h.at(p)(b, a) = std::conj(d[p]);
      }
    }
  }
  // diagonal imaginary parts are pure fp noise for real u
  for (std::size_t p = 0; p < g.npts(); ++p)
    for (int a = 0; a < g.n(); ++a) h.at(p)(a, a) = h.at(p)(a, a).real();
  return h;
}

VectorField gradient_form(const ScalarField& u) {
  const Grid& g = u.grid();
  VectorField out(g, g.n());
  for (int j = 0; j < g.n(); ++j) {
    ScalarField d = spectral_partial(u, j, false);
    for (std::size_t p = 0; p < g.npts(); ++p) out.at(p, j) = d[p];
  }
  return out;
}

ScalarField trace_form(const MetricField& g, const MatrixField& alpha) {
  ScalarField out(g.grid());
  auto& v = out.values_mut();
  for (std::size_t p = 0; p < g.npts(); ++p)
    v[p] = trace_pair(g.inv(p), alpha.at(p));
  return out;
}

MetricField flat_metric(const Grid& grid) {
  MatrixField m(grid, grid.n());
  for (std::size_t p = 0; p < grid.npts(); ++p)
    m.at(p) = SmallMat::Identity(grid.n(), grid.n());
  return MetricField(std::move(m));
}

MatrixField matrix_field_from_fn(
    const Grid& grid, int dim,
    const std::function<SmallMat(const std::array<double, 6>&)>& fn) {
  MatrixField out(grid, dim);
  std::array<double, 6> x{};
  for (std::size_t p = 0; p < grid.npts(); ++p) {
    for (int a = 0; a < grid.real_axes(); ++a) x[a] = grid.coord(p, a);
    out.at(p) = fn(x);
  }
  return out;
}

}  // namespace pshflow
