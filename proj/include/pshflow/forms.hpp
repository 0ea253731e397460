#pragma once

#include "pshflow/fields.hpp"

namespace pshflow {

// Algebra of real (1,1)- and (n-1,n-1)-forms in the matrix convention
// pinned by the brute-force oracles: an (n-1,n-1)-form Psi is stored by its
// Hermitian coefficient matrix, normalized so that the matrix of
// omega^{n-1} is det(g) g^{-1} and det(omega^{n-1}) = (det g)^{n-1}.

struct MinEigResult {
  double value;
  std::size_t point;
};

// alpha ^ omega^{n-2} as an (n-1,n-1)-form. In a g-orthonormal frame the
// result matrix is [(tr_omega alpha) I - alpha]/(n-1); general coordinates
// by Cholesky transport.
MatrixField wedge_omega_nm2(const MatrixField& alpha, const MetricField& omega);

// Independent oracle: expands alpha ^ omega^k by explicit exterior algebra
// (n <= 3, k must equal n-2 so the result is an (n-1,n-1)-form).
MatrixField brute_wedge(const MatrixField& alpha, const MetricField& omega,
                        int k);

// (1/(n-1)!) * Psi with the Hodge star of g; anchor: Psi = omega^{n-1}
// maps to omega.
MatrixField hodge_star_n1(const MatrixField& psi, const MetricField& g);

// Oracle star: explicit exterior algebra in a g-orthonormal coframe.
MatrixField brute_hodge_star_n1(const MatrixField& psi, const MetricField& g);

// gamma^{n-1} of a positive (1,1)-form; pointwise the adjugate map.
MatrixField power_n1(const MetricField& gamma);

// Inverse of power_n1: recovers the metric with gamma^{n-1} = Psi.
// Requires Psi positive definite at every point.
MetricField root_n1(const MatrixField& psi);

// Determinant of the coefficient matrix (real for Hermitian input).
ScalarField det_n1n1(const MatrixField& psi);

// Global minimum over grid points of the smallest eigenvalue of a (1,1)-form
// relative to g (generalized eigenvalue alpha v = lambda g v).
MinEigResult min_eig_11(const MatrixField& alpha, const MetricField& g);

// Fast positivity test: true when the smallest relative eigenvalue stays
// above thresh at every point (Cholesky per point, exact eigenvalue only at
// failing points). On failure reports the offending point through fail.
bool min_eig_11_above(const MatrixField& alpha, const MetricField& g,
                      double thresh, MinEigResult* fail = nullptr);

// Same for an (n-1,n-1)-form, relative to omega^{n-1} (so that
// min_eig(omega^{n-1}) = 1 for any g).
MinEigResult min_eig_n1n1(const MatrixField& psi, const MetricField& g);

// Pointwise versions used inside integrator loops.
double min_eig_11_point(const Eigen::Ref<const SmallMat>& alpha,
                        const Eigen::Ref<const SmallMat>& chol_inv);

}  // namespace pshflow
