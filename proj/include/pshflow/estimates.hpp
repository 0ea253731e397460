#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pshflow/flow.hpp"

namespace pshflow {

// Theta^{i jbar} = [(tr_{g_tilde} g) g^{i jbar} - g_tilde^{i jbar}]/(n-1),
// the coefficient tensor of the linearized operator. Entry (i, j) of the
// returned field is Theta^{i jbar}; the matrix is Hermitian positive
// definite, which is asserted (min eigenvalue > 0 at every point).
MatrixField theta(const MetricField& omega_tilde, const MetricField& omega);

// L v = Theta^{i jbar} d_i d_jbar v.
ScalarField L_op(const ScalarField& v, const MatrixField& theta_field);

// Sup-norm of n - tr_{omega_tilde} omega_hat - L u over the grid.
double trace_identity_residual(const FlowProblem& p, const FlowState& s);

// eta_{i jbar} = (tr_g g_tilde) g_{i jbar} - (n-1) g_tilde_{i jbar}
//             = u_{i jbar} + (tr_g g_hat) g_{i jbar} - (n-1) g_hat_{i jbar}.
MatrixField eta(const ScalarField& u, const MetricField& omega_hat,
                const MetricField& omega);

struct EtaCheckReport {
  // sup-norm difference of the two defining expressions
  double expr_diff = 0.0;
  // worst mismatch of eta eigenvalues against sum(lambda) - (n-1) lambda_i
  // in the simultaneous-diagonalization frame of (g, g_tilde)
  double eig_identity = 0.0;
  // pointwise chain (1/n) tr <= lambda_n <= eta_max <= (n-1) lambda_n
  //                <= (n-1) tr, with zero tolerance
  bool chain_ok = true;
};

EtaCheckReport eta_checks(const FlowProblem& p, const FlowState& s);

// Sup-norm residual of du/dt_l = g_tilde^{i jbar} nabla_l g_tilde_{i jbar}
// - d_l(log Omega-density - log det g), comparing against the spectral
// gradient of the right-hand side.
double udot_gradient_identity(const FlowProblem& p, const FlowState& s);

struct MaxPrincipleReport {
  std::size_t argmax = 0;
  std::vector<double> eigenvalues;  // of (Delta v) g - i ddbar v at argmax
  double slack = 0.0;               // allowed positive excess
  double worst = 0.0;               // largest eigenvalue found
  bool pass = true;
};

// At the grid argmax of v, the matrix (Delta v) g - i ddbar v can have no
// positive eigenvalue beyond discretization slack (the grid argmax sits
// O(1/N) from the true maximum). slack = 10 N^{-2} scale, where scale is
// the sup-norm of the matrix over the grid.
MaxPrincipleReport discrete_max_principle_check(const ScalarField& v,
                                                const MetricField& omega);

// One row of monitor measurements at a state.
struct EstimateSample {
  double t = 0.0;
  double sup_u = 0.0;
  double sup_udot = 0.0;
  double vol_ratio_min = 0.0;  // min over grid of omega_tilde^n / Omega
  double vol_ratio_max = 0.0;
  double sup_trace = 0.0;      // sup tr_omega omega_tilde
  double sup_grad2 = 0.0;      // sup |du|^2_g
  double min_eig = 0.0;        // min eigenvalue of omega_tilde w.r.t. omega
  double trace_bound_ratio = 0.0;  // sup_trace / (sup_grad2 + 1)
  double trace_identity_res = 0.0;
  double eta_expr_res = 0.0;
  double theta_min_eig = 0.0;  // worst-point smallest Theta eigenvalue
};

EstimateSample measure(const FlowProblem& p, const FlowState& s);

struct EstimateReport {
  std::vector<EstimateSample> samples;

  void add(const EstimateSample& s) { samples.push_back(s); }

  // running maxima / extremes over all samples
  double max_sup_u() const;
  double max_sup_udot() const;
  double vol_ratio_lo() const;
  double vol_ratio_hi() const;
  double max_trace_bound_ratio() const;
  double max_trace_identity_res() const;

  // one row per sample, header line first, %.17g throughout
  void write_csv(std::ostream& os) const;
  // run-level maxima
  std::string json_summary() const;
};

// Runs the flow to t_end, sampling the monitors at the given cadence.
EstimateReport bounds_report(const FlowProblem& p, double t_end,
                             const RunOptions& opts = {});

}  // namespace pshflow
