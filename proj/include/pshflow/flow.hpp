#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pshflow/forms.hpp"

namespace pshflow {

enum class FlowVariant { base, gauduchon };

// Problem data for the scalar flow
//   du/dt = log(omega_tilde^n / Omega),  u(0) = 0,
// on the flat torus, where
//   Psi_t        = omega_0^{n-1} + t chi ^ omega^{n-2},
//   omega_hat_t  = star(Psi_t)/(n-1)!,
//   omega_tilde  = omega_hat_t + [(Delta u) omega - i ddbar u]/(n-1),
//   Omega        = e^{psi/S} omega^n  (default).
// chi defaults to -(n-1) Ric(omega) + (1/S) i ddbar psi, the straight-line
// path toward the witness class.
class FlowProblem {
 public:
  FlowProblem(MetricField omega, MetricField omega0, MatrixField chi,
              ScalarField psi, double S,
              FlowVariant variant = FlowVariant::base,
              std::optional<ScalarField> log_volume_factor = std::nullopt);

  // Constructor with the canonical chi for a given witness psi.
  static FlowProblem canonical(MetricField omega, MetricField omega0,
                               ScalarField psi, double S,
                               FlowVariant variant = FlowVariant::base);

  const Grid& grid() const { return omega_.grid(); }
  int n() const { return omega_.dim(); }
  const MetricField& omega() const { return omega_; }
  const MetricField& omega0() const { return omega0_; }
  const MatrixField& chi() const { return chi_; }
  const ScalarField& psi() const { return psi_; }
  double S() const { return S_; }
  FlowVariant variant() const { return variant_; }

  const MatrixField& psi0_mat() const { return psi0_; }
  const MatrixField& chi_wedge() const { return chi_wedge_; }
  // log of the density of Omega against the Euclidean volume: for the default
  // Omega this is log det g + psi/S.
  const ScalarField& log_omega_density() const { return log_omega_density_; }

 private:
  MetricField omega_, omega0_;
  MatrixField chi_;
  ScalarField psi_;
  double S_;
  FlowVariant variant_;
  MatrixField psi0_;       // matrix of omega_0^{n-1}
  MatrixField chi_wedge_;  // matrix of chi ^ omega^{n-2}
  MatrixField hat0_;       // omega_hat at t = 0
  MatrixField hat_slope_;  // [(tr_omega chi) omega - chi]/(n-1)
  ScalarField log_omega_density_;

  friend MatrixField omega_hat_mat(const FlowProblem& p, double t);
};

struct FlowState {
  double t = 0.0;
  ScalarField u;
  double dt = 1e-4;
  long step_count = 0;
  long rejected_count = 0;

  explicit FlowState(const Grid& g) : u(g, 0.0) {}
};

struct StepControl {
  double dt_max = 1e-2;
  double dt_min = 1e-12;
  double err_tol = 1e-8;
  bool fixed_dt = false;  // disables error control and dt adaptation
};

// Matrix of Psi_t = omega_0^{n-1} + t chi ^ omega^{n-2}.
MatrixField psi_t(const FlowProblem& p, double t);

// omega_hat_t = omega_hat_0 + t [(tr_omega chi) omega - chi]/(n-1). The
// equivalent star(Psi_t)/(n-1)! route is cross-checked at construction of
// the FlowProblem (at t = 0 and t = 1; both formulas are affine in t, so
// agreement there is agreement everywhere); a disagreement above 1e-10 is a
// hard internal error.
MatrixField omega_hat_mat(const FlowProblem& p, double t);
MetricField omega_hat(const FlowProblem& p, double t);

// omega_tilde as a raw matrix field (positivity not asserted) and as a
// validated metric.
MatrixField omega_tilde_mat(const FlowProblem& p, const ScalarField& u,
                            double t);
MetricField omega_tilde(const FlowProblem& p, const ScalarField& u, double t);

// du/dt = log det(g_tilde) - log(Omega density). Throws PositivityLost when
// the smallest relative eigenvalue of omega_tilde drops below pos_tol times
// the mean eigenvalue.
ScalarField rhs(const FlowProblem& p, const ScalarField& u, double t);

// Form-side evaluation of the same right-hand side through the (n-1,n-1)
// determinant; agrees with rhs to spectral accuracy and serves as its
// cross-check.
ScalarField rhs_form_side(const FlowProblem& p, const ScalarField& u,
                          double t);

// Variant right-hand side with the Re(i du ^ dbar(omega^{n-2})) correction
// terms. Requires n = 3; coincides with rhs when the reference metric is
// constant in space.
ScalarField gauduchon_rhs(const FlowProblem& p, const ScalarField& u,
                          double t);

// One adaptive RK4 step with step doubling. Advances state in place; throws
// SingularTimeReached when dt underflows dt_min and NonFiniteError when the
// state stops being finite.
void step(const FlowProblem& p, FlowState& state,
          const StepControl& ctl = {});

struct RunOptions {
  StepControl control;
  long sample_every = 1;  // callback cadence in accepted steps
  // stop when the spatial oscillation of du/dt falls below this (0 = off)
  double convergence_osc_tol = 0.0;
  std::function<void(const FlowState&, const ScalarField& udot)> callback;
};

struct RunResult {
  FlowState state;
  bool converged = false;
  bool singular = false;
  double singular_time = 0.0;
  // spatial mean of du/dt at the final state (the additive constant of the
  // stationary limit)
  double b = 0.0;
};

RunResult run(const FlowProblem& p, double t_end, const RunOptions& opts = {});

// Continues from an existing state (e.g. a loaded checkpoint); the state's
// time, potential and step size are taken as-is.
RunResult run_from(const FlowProblem& p, FlowState start, double t_end,
                   const RunOptions& opts = {});

// Residual of the (n-1,n-1)-form flow d/dt(omega_t^{n-1}) =
// -(n-1) Ric(omega_t) ^ omega^{n-2}, with the time derivative by centered
// differencing of two bracketing states.
double flow_residual(const FlowProblem& p, const FlowState& before,
                     const FlowState& after);

// Checkpoint I/O: little-endian binary, magic "PSHF", version, n, N as u32,
// t and dt as f64, then u point values (real parts) row-major as f64.
void save_checkpoint(const std::string& path, const FlowState& state);
FlowState load_checkpoint(const std::string& path, const Grid& g);

}  // namespace pshflow
