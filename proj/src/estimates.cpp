#include "pshflow/estimates.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "json.hpp"
#include "pshflow/geometry.hpp"

namespace pshflow {

namespace {

// Theta plus the smallest eigenvalue seen across the grid (callers either
// assert it positive or report it).
std::pair<MatrixField, double> theta_impl(const MetricField& gt,
                                          const MetricField& g) {
  const int n = g.dim();
  MatrixField out(g.grid(), n);
  double min_eig = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<SmallMat> es;
  for (std::size_t p = 0; p < g.npts(); ++p) {
    const cxd tr = trace_pair(gt.inv(p), g.at(p));
    const SmallMat m =
        (tr.real() * SmallMat(g.inv(p)).transpose() -
         SmallMat(gt.inv(p)).transpose()) /
        (n - 1.0);
    out.at(p) = m;
    es.compute(m, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  return {std::move(out), min_eig};
}

double sup_real(const ScalarField& f) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < f.grid().npts(); ++p)
    hi = std::max(hi, f[p].real());
  return hi;
}

}  // namespace

MatrixField theta(const MetricField& omega_tilde, const MetricField& omega) {
  auto [field, min_eig] = theta_impl(omega_tilde, omega);
  if (!(min_eig > 0.0))
    throw PositivityLost(0.0, 0, min_eig);
  return std::move(field);
}

ScalarField L_op(const ScalarField& v, const MatrixField& theta_field) {
  MatrixField h = hermitian_hessian(v);
  ScalarField out(v.grid());
  auto& vals = out.values_mut();
  for (std::size_t p = 0; p < v.grid().npts(); ++p)
    vals[p] = (SmallMat(theta_field.at(p)).transpose() * SmallMat(h.at(p)))
                  .trace();
  return out;
}

double trace_identity_residual(const FlowProblem& p, const FlowState& s) {
  const int n = p.n();
  MetricField gt = omega_tilde(p, s.u, s.t);
  MetricField gh = omega_hat(p, s.t);
  MatrixField th = theta(gt, p.omega());
  ScalarField lu = L_op(s.u, th);
  double worst = 0.0;
  for (std::size_t q = 0; q < p.grid().npts(); ++q) {
    const cxd tr = trace_pair(gt.inv(q), gh.at(q));
    worst = std::max(worst, std::abs(n - tr.real() - lu[q].real()));
  }
  return worst;
}

MatrixField eta(const ScalarField& u, const MetricField& omega_hat,
                const MetricField& omega) {
  const int n = omega.dim();
  MatrixField out = hermitian_hessian(u);
  for (std::size_t p = 0; p < omega.npts(); ++p) {
    const cxd tr = trace_pair(omega.inv(p), omega_hat.at(p));
    out.at(p) += tr.real() * SmallMat(omega.at(p)) -
                 (n - 1.0) * SmallMat(omega_hat.at(p));
  }
  return out;
}

EtaCheckReport eta_checks(const FlowProblem& p, const FlowState& s) {
  const int n = p.n();
  const MetricField& g = p.omega();
  MetricField gt = omega_tilde(p, s.u, s.t);
  MetricField gh = omega_hat(p, s.t);
  MatrixField via_hat = eta(s.u, gh, g);
  EtaCheckReport rep;
  Eigen::SelfAdjointEigenSolver<SmallMat> es;
  for (std::size_t q = 0; q < p.grid().npts(); ++q) {
    const cxd tr = trace_pair(g.inv(q), gt.at(q));
    const SmallMat via_tilde =
        tr.real() * SmallMat(g.at(q)) - (n - 1.0) * SmallMat(gt.at(q));
    rep.expr_diff = std::max(
        rep.expr_diff,
        (via_tilde - SmallMat(via_hat.at(q))).cwiseAbs().maxCoeff());
    // eigenvalues of g_tilde w.r.t. g in the orthonormal frame of g
    const SmallMat linv = g.chol_inv(q);
    es.compute(linv * SmallMat(gt.at(q)) * linv.adjoint());
    Eigen::VectorXd lam = es.eigenvalues();  // ascending
    const double sum = lam.sum();
    // eta eigenvalues in the same frame
    es.compute(linv * via_tilde * linv.adjoint());
    Eigen::VectorXd eta_eig = es.eigenvalues();
    std::vector<double> pred(n);
    for (int i = 0; i < n; ++i) pred[i] = sum - (n - 1.0) * lam[i];
    std::sort(pred.begin(), pred.end());
    for (int i = 0; i < n; ++i)
      rep.eig_identity =
          std::max(rep.eig_identity, std::abs(eta_eig[i] - pred[i]));
    // the pointwise chain, evaluated link by link as sums of same-sign
    // differences of sorted eigenvalues so that it is exact in floating point
    const double lam_max = lam[n - 1];
    double mean_gap = 0.0;     // n lam_max - sum
    double eta_gap_lo = 0.0;   // eta_max - lam_max
    double eta_gap_hi = 0.0;   // (n-1) lam_max - eta_max
    for (int i = 0; i < n; ++i) mean_gap += lam_max - lam[i];
    for (int i = 0; i < n - 1; ++i) eta_gap_lo += lam[i] - lam[0];
    for (int i = 1; i < n; ++i) eta_gap_hi += lam_max - lam[i];
    eta_gap_hi += (n - 2.0) * lam[0];
    double tail = 0.0;  // sum - lam_max >= 0 gives the last link
    for (int i = 0; i < n - 1; ++i) tail += lam[i];
    if (!(mean_gap >= 0.0 && eta_gap_lo >= 0.0 && eta_gap_hi >= 0.0 &&
          tail >= 0.0 && lam[0] > 0.0))
      rep.chain_ok = false;
  }
  return rep;
}

double udot_gradient_identity(const FlowProblem& p, const FlowState& s) {
  const int n = p.n();
  const Grid& grid = p.grid();
  ScalarField udot = rhs(p, s.u, s.t);
  MetricField gt = omega_tilde(p, s.u, s.t);
  Tensor3Field gamma = christoffel(p.omega());
  // d_l of each entry of g_tilde
  std::vector<ScalarField> dgt;  // [(i*n + j)*n + l]
  dgt.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ScalarField e = gt.mat().entry(i, j);
      for (int l = 0; l < n; ++l)
        dgt.push_back(spectral_partial(e, l, false));
    }
  // d_l of the twist of the density against det g
  std::vector<ScalarField> dtwist;
  {
    ScalarField twist(grid);
    auto& v = twist.values_mut();
    for (std::size_t q = 0; q < grid.npts(); ++q)
      v[q] = p.log_omega_density()[q] - p.omega().log_det(q);
    for (int l = 0; l < n; ++l)
      dtwist.push_back(spectral_partial(twist, l, false));
  }
  double worst = 0.0;
  for (int l = 0; l < n; ++l) {
    ScalarField lhs = spectral_partial(udot, l, false);
    for (std::size_t q = 0; q < grid.npts(); ++q) {
      // g_tilde^{i jbar} nabla_l g_tilde_{i jbar}
      //   = tr(Gt^{-1} d_l Gt) - Gamma^i_{li}
      cxd contr = 0.0;
      const SmallMat inv = gt.inv(q);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          contr += inv(j, i) * dgt[(static_cast<std::size_t>(i) * n + j) * n +
                                   l][q];
      for (int i = 0; i < n; ++i) contr -= gamma.at(q, i, l, i);
      worst = std::max(worst, std::abs(lhs[q] - (contr - dtwist[l][q])));
    }
  }
  return worst;
}

MaxPrincipleReport discrete_max_principle_check(const ScalarField& v,
                                                const MetricField& omega) {
  const Grid& grid = v.grid();
  const int n = grid.n();
  MatrixField h = hermitian_hessian(v);
  ScalarField lap = trace_form(omega, h);
  MaxPrincipleReport rep;
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < grid.npts(); ++q)
    if (v[q].real() > vmax) {
      vmax = v[q].real();
      rep.argmax = q;
    }
  // scale: sup over the grid of the transported matrix, fixing the slack
  Eigen::SelfAdjointEigenSolver<SmallMat> es;
  double scale = 0.0;
  auto transported = [&](std::size_t q) {
    const SmallMat m =
        lap[q].real() * SmallMat(omega.at(q)) - SmallMat(h.at(q));
    const SmallMat linv = omega.chol_inv(q);
    return SmallMat(linv * m * linv.adjoint());
  };
  for (std::size_t q = 0; q < grid.npts(); ++q)
    scale = std::max(scale, transported(q).cwiseAbs().maxCoeff());
  rep.slack = 10.0 * scale / (static_cast<double>(grid.N()) * grid.N());
  es.compute(transported(rep.argmax), Eigen::EigenvaluesOnly);
  for (int i = 0; i < n; ++i)
    rep.eigenvalues.push_back(es.eigenvalues()[i]);
  rep.worst = es.eigenvalues().maxCoeff();
  rep.pass = rep.worst <= rep.slack;
  return rep;
}

EstimateSample measure(const FlowProblem& p, const FlowState& s) {
  const Grid& grid = p.grid();
  EstimateSample out;
  out.t = s.t;
  out.sup_u = sup_abs(s.u);
  ScalarField udot = rhs(p, s.u, s.t);
  out.sup_udot = sup_abs(udot);
  double udot_lo = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < grid.npts(); ++q)
    udot_lo = std::min(udot_lo, udot[q].real());
  out.vol_ratio_min = std::exp(udot_lo);
  out.vol_ratio_max = std::exp(sup_real(udot));
  MetricField gt = omega_tilde(p, s.u, s.t);
  out.sup_trace = sup_real(trace_form(p.omega(), gt.mat()));
  VectorField du = gradient_form(s.u);
  double g2 = 0.0;
  for (std::size_t q = 0; q < grid.npts(); ++q) {
    Eigen::VectorXcd uq(p.n());
    for (int i = 0; i < p.n(); ++i) uq(i) = du.at(q, i);
    g2 = std::max(g2, (uq.adjoint() * SmallMat(p.omega().inv(q)) * uq)(0, 0)
                          .real());
  }
  out.sup_grad2 = g2;
  out.min_eig = min_eig_11(gt.mat(), p.omega()).value;
  out.trace_bound_ratio = out.sup_trace / (out.sup_grad2 + 1.0);
  out.trace_identity_res = trace_identity_residual(p, s);
  EtaCheckReport ec = eta_checks(p, s);
  out.eta_expr_res = std::max(ec.expr_diff, ec.eig_identity);
  out.theta_min_eig = theta_impl(gt, p.omega()).second;
  return out;
}

double EstimateReport::max_sup_u() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.sup_u);
  return v;
}

double EstimateReport::max_sup_udot() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.sup_udot);
  return v;
}

double EstimateReport::vol_ratio_lo() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) v = std::min(v, s.vol_ratio_min);
  return v;
}

double EstimateReport::vol_ratio_hi() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.vol_ratio_max);
  return v;
}

double EstimateReport::max_trace_bound_ratio() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.trace_bound_ratio);
  return v;
}

double EstimateReport::max_trace_identity_res() const {
  double v = 0.0;
  for (const auto& s : samples) v = std::max(v, s.trace_identity_res);
  return v;
}

void EstimateReport::write_csv(std::ostream& os) const {
  os << "# pshflow-estimates-csv v1\n";
  os << "t,sup_u,sup_udot,vol_ratio_min,vol_ratio_max,sup_trace,"
        "sup_grad2,min_eig,trace_bound_ratio,trace_identity_res,eta_expr_res,"
        "theta_min_eig\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << sep;
  };
  for (const auto& s : samples) {
    put(s.t, ',');
    put(s.sup_u, ',');
    put(s.sup_udot, ',');
    put(s.vol_ratio_min, ',');
    put(s.vol_ratio_max, ',');
    put(s.sup_trace, ',');
    put(s.sup_grad2, ',');
    put(s.min_eig, ',');
    put(s.trace_bound_ratio, ',');
    put(s.trace_identity_res, ',');
    put(s.eta_expr_res, ',');
    put(s.theta_min_eig, '\n');
  }
}

std::string EstimateReport::json_summary() const {
  nlohmann::json j;
  j["samples"] = samples.size();
  j["max_sup_u"] = max_sup_u();
  j["max_sup_udot"] = max_sup_udot();
  j["vol_ratio_lo"] = vol_ratio_lo();
  j["vol_ratio_hi"] = vol_ratio_hi();
  j["max_trace_bound_ratio"] = max_trace_bound_ratio();
  j["max_trace_identity_res"] = max_trace_identity_res();
  if (!samples.empty()) j["t_final"] = samples.back().t;
  return j.dump(2);
}

EstimateReport bounds_report(const FlowProblem& p, double t_end,
                             const RunOptions& opts) {
  EstimateReport rep;
  rep.add(measure(p, FlowState(p.grid())));
  RunOptions wrapped = opts;
  wrapped.callback = [&](const FlowState& st, const ScalarField& udot) {
    rep.add(measure(p, st));
    if (opts.callback) opts.callback(st, udot);
  };
  run(p, t_end, wrapped);
  return rep;
}

}  // namespace pshflow
