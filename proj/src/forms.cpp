#include "pshflow/forms.hpp"

#include <cmath>

#include "pshflow/brute_forms.hpp"

namespace pshflow {

namespace {

void check_same(const MatrixField& a, const MetricField& g) {
  if (&a.grid() != &g.grid() || a.dim() != g.dim())
    throw DimensionError("form/metric grid or dimension mismatch");
}

SmallMat adjugate(const Eigen::Ref<const SmallMat>& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 2) {
    SmallMat a(2, 2);
    a << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return a;
  }
  return m.determinant() * m.inverse();
}

}  // namespace

MatrixField wedge_omega_nm2(const MatrixField& alpha, const MetricField& omega) {
  check_same(alpha, omega);
  const int n = omega.dim();
  MatrixField out(alpha.grid(), n);
  for (std::size_t p = 0; p < alpha.npts(); ++p) {
    const SmallMat linv = omega.chol_inv(p);
    const SmallMat a_on = linv * alpha.at(p) * linv.adjoint();
    const SmallMat w_on =
        (a_on.trace() * SmallMat::Identity(n, n) - a_on) / (n - 1.0);
    const double detg = std::exp(omega.log_det(p));
    out.at(p) = detg * linv.adjoint() * w_on * linv;
  }
  return out;
}

MatrixField brute_wedge(const MatrixField& alpha, const MetricField& omega,
                        int k) {
  check_same(alpha, omega);
  const int n = omega.dim();
  if (n > 3) throw DimensionError("brute_wedge supports n <= 3");
  if (k != n - 2)
    throw DimensionError("brute_wedge: power must be n-2 for an (n-1,n-1) result");
  MatrixField out(alpha.grid(), n);
  for (std::size_t p = 0; p < alpha.npts(); ++p) {
    brute::Form a = brute::from_11(alpha.at(p));
    brute::Form wk = brute::wedge_power(brute::from_11(omega.at(p)), k);
    out.at(p) = brute::extract_n1n1(brute::wedge(a, wk));
  }
  return out;
}

MatrixField hodge_star_n1(const MatrixField& psi, const MetricField& g) {
  check_same(psi, g);
  MatrixField out(psi.grid(), g.dim());
  for (std::size_t p = 0; p < psi.npts(); ++p) {
    // orthonormal-frame star is the identity on coefficient matrices:
    // *Psi/(n-1)! = G Psi G / det G
    out.at(p) = (g.at(p) * psi.at(p) * g.at(p)) * std::exp(-g.log_det(p));
  }
  return out;
}

MatrixField brute_hodge_star_n1(const MatrixField& psi, const MetricField& g) {
  check_same(psi, g);
  const int n = g.dim();
  if (n > 3) throw DimensionError("brute_hodge_star_n1 supports n <= 3");
  MatrixField out(psi.grid(), n);
  for (std::size_t p = 0; p < psi.npts(); ++p) {
    brute::Form f = brute::from_n1n1(psi.at(p), n);
    // transport to a g-orthonormal coframe, star there, transport back
    brute::Form f_on = brute::pullback(f, g.chol_inv(p));
    const SmallMat b_on = brute::flat_star_n1n1(f_on);
    const SmallMat l = g.chol(p);
    out.at(p) = l * b_on * l.adjoint();
  }
  return out;
}

MatrixField power_n1(const MetricField& gamma) {
  MatrixField out(gamma.grid(), gamma.dim());
  for (std::size_t p = 0; p < gamma.npts(); ++p) out.at(p) = adjugate(gamma.at(p));
  return out;
}

MetricField root_n1(const MatrixField& psi) {
  const int n = psi.dim();
  MatrixField out(psi.grid(), n);
  for (std::size_t p = 0; p < psi.npts(); ++p) {
    const SmallMat m = psi.at(p);
    Eigen::SelfAdjointEigenSolver<SmallMat> es(m, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > 0.0)) {
      throw SingularMetricError(
          "root_n1: not a metric power at grid point " + std::to_string(p) +
              " (min eigenvalue " + std::to_string(es.eigenvalues()(0)) + ")",
          p, es.eigenvalues()(0));
    }
    const double det = m.determinant().real();
    out.at(p) = std::pow(det, 1.0 / (n - 1)) * m.inverse();
  }
  return MetricField(std::move(out));
}

ScalarField det_n1n1(const MatrixField& psi) {
  ScalarField out(psi.grid());
  auto& v = out.values_mut();
  for (std::size_t p = 0; p < psi.npts(); ++p)
    v[p] = psi.at(p).determinant().real();
  return out;
}

double min_eig_11_point(const Eigen::Ref<const SmallMat>& alpha,
                        const Eigen::Ref<const SmallMat>& chol_inv) {
  const SmallMat a_on = chol_inv * alpha * chol_inv.adjoint();
  Eigen::SelfAdjointEigenSolver<SmallMat> es(a_on, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool min_eig_11_above(const MatrixField& alpha, const MetricField& g,
                      double thresh, MinEigResult* fail) {
  check_same(alpha, g);
  for (std::size_t p = 0; p < alpha.npts(); ++p) {
    // alpha - thresh g is positive definite iff the smallest relative
    // eigenvalue exceeds thresh; Cholesky decides that without forming the
    // orthonormal-frame transport. The exact eigenvalue is only needed at a
    // point that fails the cheap test.
    const SmallMat shifted = alpha.at(p) - thresh * SmallMat(g.at(p));
    Eigen::LLT<SmallMat> llt(shifted);
    if (llt.info() == Eigen::Success) continue;
    const double e = min_eig_11_point(alpha.at(p), g.chol_inv(p));
    if (e <= thresh) {
      if (fail) *fail = {e, p};
      return false;
    }
  }
  return true;
}

MinEigResult min_eig_11(const MatrixField& alpha, const MetricField& g) {
  check_same(alpha, g);
  MinEigResult r{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t p = 0; p < alpha.npts(); ++p) {
    const double e = min_eig_11_point(alpha.at(p), g.chol_inv(p));
    if (e < r.value) r = {e, p};
  }
  return r;
}

MinEigResult min_eig_n1n1(const MatrixField& psi, const MetricField& g) {
  check_same(psi, g);
  MinEigResult r{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t p = 0; p < psi.npts(); ++p) {
    const SmallMat l = g.chol(p);
    const SmallMat psi_on =
        l.adjoint() * psi.at(p) * l * std::exp(-g.log_det(p));
    Eigen::SelfAdjointEigenSolver<SmallMat> es(psi_on, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < r.value) r = {es.eigenvalues()(0), p};
  }
  return r;
}

}  // namespace pshflow
