#pragma once

#include <string>
#include <vector>

#include "pshflow/flow.hpp"

namespace pshflow {

// Search data for the maximal-existence-time estimate: along the line
// Psi_t = omega_0^{n-1} + t chi ^ omega^{n-2}, find the largest t for which
// some potential psi makes Psi_t + i ddbar psi ^ omega^{n-2} positive.
struct MaxTimeQuery {
  const MetricField* omega = nullptr;
  const MetricField* omega0 = nullptr;
  const MatrixField* chi = nullptr;
  double t_lo = 0.0;
  double t_hi = 1.0;
  double t_tol = 1e-2;   // bisection bracket width
  int K = 4;             // Fourier truncation per axis for psi
  int ascent_iters = 200;
  int restarts = 3;
  std::vector<double> temperatures{1e-1, 1e-2, 1e-3};
  unsigned seed = 12345;
};

struct ClassPositivity {
  double lambda = 0.0;  // hard-min smallest eigenvalue at psi
  ScalarField psi;      // maximizing potential (zero-mean, band-limited)
  bool converged = true;

  explicit ClassPositivity(const Grid& g) : psi(g) {}
};

// Maximizes min-over-grid of the smallest relative eigenvalue of
// Psi_t + i ddbar psi ^ omega^{n-2} over zero-mean psi in the span of
// Fourier modes |k| <= K. Concave nonsmooth objective: softmin smoothing
// with a decreasing temperature schedule, gradient ascent with backtracking,
// random restarts; the returned lambda is always the exact hard-min at the
// returned psi, so lambda > 0 is a certificate of class positivity while
// lambda <= 0 is only evidence of infeasibility.
ClassPositivity class_positivity(const MaxTimeQuery& q, double t);

struct PredictedT {
  double T_lo = 0.0;
  double T_hi = 0.0;
  bool horizon_too_small = false;  // t_hi itself is feasible
  ClassPositivity certificate;     // witness at T_lo

  explicit PredictedT(const Grid& g) : certificate(g) {}
};

// Bisection on t with class_positivity as the predicate.
PredictedT predicted_T(const MaxTimeQuery& q);

struct SingularTimeReport {
  double t_sing = 0.0;
  bool reached = false;        // SingularTimeReached before t_max
  std::string diagnostics;
};

// Runs the flow until the step controller underflows or t_max is passed.
SingularTimeReport singular_time(const FlowProblem& p, double t_max,
                                 const StepControl& ctl = {});

// Full JSON report {T_lo, T_hi, certificates, t_sing, diagnostics}; when
// psi_out_prefix is nonempty the certificate psi is stored there in the
// checkpoint format and the path recorded.
std::string maxtime_report_json(const MaxTimeQuery& q, const FlowProblem* p,
                                double t_max,
                                const std::string& psi_out_prefix = "");

}  // namespace pshflow
