#pragma once

#include "pshflow/fields.hpp"

namespace pshflow {

// Chern curvature tensor R_{k lbar i}^p, stored at (p, k, l, i, q) with q the
// raised index.
class Tensor4Field {
 public:
  Tensor4Field(const Grid& grid, int dim);
  const Grid& grid() const { return *grid_; }
  int dim() const { return dim_; }
  cxd& at(std::size_t p, int k, int l, int i, int q) {
    return data_[(((p * dim_ + k) * dim_ + l) * dim_ + i) * dim_ + q];
  }
  cxd at(std::size_t p, int k, int l, int i, int q) const {
    return data_[(((p * dim_ + k) * dim_ + l) * dim_ + i) * dim_ + q];
  }
  double sup_norm() const;

 private:
  const Grid* grid_;
  int dim_;
  std::vector<cxd> data_;
};

// Gamma^k_{ij} = g^{k lbar} d_i g_{j lbar}; Tensor3Field index order (k, i, j).
Tensor3Field christoffel(const MetricField& g);

// T^k_{ij} = Gamma^k_{ij} - Gamma^k_{ji}, antisymmetric in (i, j) exactly.
Tensor3Field torsion(const Tensor3Field& gamma);
Tensor3Field torsion(const MetricField& g);

// R_{k lbar i}^p = -d_lbar Gamma^p_{ki}; materializes the full tensor, so
// keep the grid small.
Tensor4Field chern_curvature(const MetricField& g);

// Chern-Ricci form coefficients R_{i jbar} = -d_i d_jbar log det g.
MatrixField chern_ricci(const MetricField& g);

// The trace-of-curvature route g^{k lbar} R_{i jbar k lbar}; cross-check of
// chern_ricci, computed independently (streams over index pairs, no
// materialized 4-tensor).
MatrixField chern_ricci_from_curvature(const MetricField& g);

// nabla_i a_l = d_i a_l - Gamma^p_{il} a_p; result entry (i, l).
MatrixField covariant_deriv_1form(const VectorField& a, const MetricField& g);

// Residuals of the covariant commutation identities on a scalar:
//   u_{i jbar l}    = u_{i l jbar}    - u_p R_{l jbar i}^p
//   u_{p jbar mbar} = u_{p mbar jbar} - conj(T^q_{mj}) u_{p qbar}
//   u_{i qbar l}    = u_{l qbar i}    - T^p_{li} u_{p qbar}
// and the second-order swap
//   u_{i jbar l mbar} = u_{l mbar i jbar} + u_{p jbar} R_{l mbar i}^p
//                       - u_{p mbar} R_{i jbar l}^p - T^p_{li} u_{p mbar jbar}
//                       - conj(T^q_{mj}) u_{l qbar i}
//                       - T^p_{il} conj(T^q_{mj}) u_{p qbar}
// Each side is evaluated independently from spectral derivatives.
struct CommutationResidual {
  double mixed_third = 0.0;     // first identity
  double barred_third = 0.0;    // second identity
  double unbarred_third = 0.0;  // third identity
  double fourth = 0.0;
  double max() const {
    return std::max(std::max(mixed_third, barred_third),
                    std::max(unbarred_third, fourth));
  }
};

CommutationResidual commutation_residual(const ScalarField& u,
                                         const MetricField& g);

}  // namespace pshflow
