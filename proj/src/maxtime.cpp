#include "pshflow/maxtime.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace pshflow {

namespace {

// Zero-mean band limitation: keeps modes with |k|_inf <= K on every axis.
ScalarField project_band(const ScalarField& f, int K) {
  const Grid& g = f.grid();
  std::vector<cxd> spec = f.spectrum();
  const int N = g.N();
  for (std::size_t s = 0; s < spec.size(); ++s) {
    std::size_t rest = s;
    bool keep = true;
    for (int a = g.real_axes() - 1; a >= 0; --a) {
      const int m = static_cast<int>(rest % N);
      rest /= N;
      if (std::abs(g.mode(m)) > K) keep = false;
    }
    if (s == 0 || !keep) spec[s] = 0.0;
  }
  ScalarField out(g);
  out.set_spectrum(std::move(spec));
  return out.real_part();
}

struct PointEigs {
  std::vector<double> lambda;            // smallest eigenvalue per point
  std::vector<Eigen::VectorXcd> u;       // L^{-*} v per point
  double hard_min = 0.0;
  std::size_t argmin = 0;
};

// Smallest relative eigenvalue of the transported form matrix per point,
// plus the transported eigenvector needed for the gradient.
PointEigs eval_eigs(const MatrixField& psi_form, const MetricField& g) {
  const std::size_t P = g.npts();
  PointEigs out;
  out.lambda.resize(P);
  out.u.resize(P);
  out.hard_min = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<SmallMat> es;
  for (std::size_t p = 0; p < P; ++p) {
    const SmallMat l = g.chol(p);
    es.compute(SmallMat(l.adjoint() * psi_form.at(p) * l) *
               std::exp(-g.log_det(p)));
    out.lambda[p] = es.eigenvalues()(0);
    out.u[p] = SmallMat(g.chol_inv(p)).adjoint() * es.eigenvectors().col(0);
    if (out.lambda[p] < out.hard_min) {
      out.hard_min = out.lambda[p];
      out.argmin = p;
    }
  }
  return out;
}

struct Objective {
  double value = 0.0;      // softmin
  double hard_min = 0.0;
  ScalarField grad;        // d(softmin)/d(psi), band-projected

  explicit Objective(const Grid& g) : grad(g) {}
};

Objective eval_objective(const MatrixField& base, const ScalarField& psi,
                         const MetricField& g, double tau, int K) {
  const Grid& grid = g.grid();
  const int n = g.dim();
  const std::size_t P = grid.npts();
  MatrixField form = base;
  form += wedge_omega_nm2(hermitian_hessian(psi), g);
  PointEigs pe = eval_eigs(form, g);
  Objective out(grid);
  out.hard_min = pe.hard_min;
  // softmin with stable shift
  double z = 0.0;
  std::vector<double> w(P);
  for (std::size_t p = 0; p < P; ++p) {
    w[p] = std::exp(-(pe.lambda[p] - pe.hard_min) / tau);
    z += w[p];
  }
  out.value = pe.hard_min - tau * std::log(z / static_cast<double>(P));
  // gradient: for each point, d(lambda)/dH_{ab} =
  //   [Ginv(b,a) - conj(u_a) u_b]/(n-1); weight by softmax, then take the
  //   adjoint of the mixed Hessian (self-adjoint under the bilinear pairing)
  std::vector<ScalarField> b_fields;
  b_fields.reserve(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      ScalarField f(grid);
      auto& v = f.values_mut();
      for (std::size_t p = 0; p < P; ++p) {
        const cxd m = (SmallMat(g.inv(p))(b, a) -
                       std::conj(pe.u[p](a)) * pe.u[p](b)) /
                      (n - 1.0);
        v[p] = (w[p] / z) * m;
      }
      b_fields.push_back(std::move(f));
    }
  ScalarField gf(grid);
  {
    auto& v = gf.values_mut();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        ScalarField d = spectral_partial2(b_fields[a * n + b], a, b);
        for (std::size_t p = 0; p < P; ++p) v[p] += d[p];
      }
  }
  out.grad = project_band(gf, K);
  return out;
}

ScalarField axpy(const ScalarField& x, double a, const ScalarField& y) {
  ScalarField out(x.grid());
  auto& v = out.values_mut();
  for (std::size_t p = 0; p < x.grid().npts(); ++p) v[p] = x[p] + a * y[p];
  return out;
}

}  // namespace

ClassPositivity class_positivity(const MaxTimeQuery& q, double t) {
  if (!q.omega || !q.omega0 || !q.chi)
    throw ConfigError("class_positivity: query fields not set");
  const MetricField& g = *q.omega;
  const Grid& grid = g.grid();
  MatrixField base = power_n1(*q.omega0);
  {
    MatrixField cw = wedge_omega_nm2(*q.chi, g);
    cw *= t;
    base += cw;
  }
  std::mt19937 rng(q.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ClassPositivity best(grid);
  best.lambda = -std::numeric_limits<double>::infinity();
  for (int r = 0; r <= q.restarts; ++r) {
    ScalarField psi(grid);
    if (r > 0) {
      auto& v = psi.values_mut();
      for (std::size_t p = 0; p < grid.npts(); ++p)
        v[p] = cxd(0.05 * gauss(rng), 0.0);
      psi = project_band(psi, q.K);
    }
    // objective scale from the current spread of eigenvalues, refreshed at
    // the start of every temperature round so the smoothing bias shrinks as
    // the ascent flattens the spectrum
    auto eig_scale = [&](const ScalarField& cand, double& hard) {
      MatrixField f0 = base;
      f0 += wedge_omega_nm2(hermitian_hessian(cand), g);
      PointEigs pe0 = eval_eigs(f0, g);
      hard = pe0.hard_min;
      const double spread =
          *std::max_element(pe0.lambda.begin(), pe0.lambda.end()) -
          pe0.hard_min;
      return std::max({spread, 1e-6});
    };
    double best_hard;
    eig_scale(psi, best_hard);
    ScalarField best_psi = psi;
    bool stalled_all = true;
    for (double temp : q.temperatures) {
      double cur_hard;
      const double tau = temp * eig_scale(psi, cur_hard);
      double step = 1.0;
      Objective cur = eval_objective(base, psi, g, tau, q.K);
      for (int it = 0; it < q.ascent_iters; ++it) {
        bool advanced = false;
        for (int bt = 0; bt < 30; ++bt) {
          ScalarField trial = axpy(psi, step, cur.grad);
          Objective next = eval_objective(base, trial, g, tau, q.K);
          if (next.value > cur.value) {
            psi = std::move(trial);
            cur = std::move(next);
            step *= 1.5;
            advanced = true;
            break;
          }
          step *= 0.5;
        }
        if (cur.hard_min > best_hard) {
          best_hard = cur.hard_min;
          best_psi = psi;
          stalled_all = false;
        }
        if (!advanced) break;
      }
    }
    if (best_hard > best.lambda) {
      best.lambda = best_hard;
      best.psi = best_psi;
      best.converged = !stalled_all || best_hard > 0.0;
    }
  }
  // exact final certificate at the returned psi
  MatrixField form = base;
  form += wedge_omega_nm2(hermitian_hessian(best.psi), g);
  best.lambda = min_eig_n1n1(form, g).value;
  return best;
}

PredictedT predicted_T(const MaxTimeQuery& q) {
  if (!q.omega) throw ConfigError("predicted_T: query fields not set");
  PredictedT out(q.omega->grid());
  ClassPositivity lo = class_positivity(q, q.t_lo);
  if (!(lo.lambda > 0.0))
    throw ConfigError("predicted_T: t_lo is not feasible");
  ClassPositivity hi = class_positivity(q, q.t_hi);
  if (hi.lambda > 0.0) {
    out.T_lo = q.t_hi;
    out.T_hi = q.t_hi;
    out.horizon_too_small = true;
    out.certificate = std::move(hi);
    return out;
  }
  double a = q.t_lo, b = q.t_hi;
  ClassPositivity cert = std::move(lo);
  while (b - a > q.t_tol) {
    const double mid = 0.5 * (a + b);
    ClassPositivity c = class_positivity(q, mid);
    if (c.lambda > 0.0) {
      a = mid;
      cert = std::move(c);
    } else {
      b = mid;
    }
  }
  out.T_lo = a;
  out.T_hi = b;
  out.certificate = std::move(cert);
  return out;
}

SingularTimeReport singular_time(const FlowProblem& p, double t_max,
                                 const StepControl& ctl) {
  SingularTimeReport rep;
  FlowState st(p.grid());
  st.dt = std::min(ctl.dt_max, 1e-4);
  try {
    while (st.t < t_max - 1e-14) {
      StepControl c = ctl;
      if (!c.fixed_dt) st.dt = std::min(st.dt, t_max - st.t);
      step(p, st, c);
    }
    rep.t_sing = st.t;
    rep.reached = false;
    rep.diagnostics = "no singularity before t_max";
  } catch (const SingularTimeReached&) {
    rep.t_sing = st.t;
    rep.reached = true;
    try {
      rhs(p, st.u, st.t);
      rep.diagnostics = "step size underflow";
    } catch (const PositivityLost& pl) {
      rep.diagnostics = std::string("positivity loss: ") + pl.what();
    }
  }
  return rep;
}

std::string maxtime_report_json(const MaxTimeQuery& q, const FlowProblem* p,
                                double t_max,
                                const std::string& psi_out_prefix) {
  nlohmann::json j;
  PredictedT pt = predicted_T(q);
  j["T_lo"] = pt.T_lo;
  j["T_hi"] = pt.T_hi;
  j["horizon_too_small"] = pt.horizon_too_small;
  nlohmann::json cert;
  cert["t"] = pt.T_lo;
  cert["lambda"] = pt.certificate.lambda;
  if (!psi_out_prefix.empty()) {
    FlowState holder(q.omega->grid());
    holder.u = pt.certificate.psi;
    holder.t = pt.T_lo;
    const std::string path = psi_out_prefix + "_psi.pshf";
    save_checkpoint(path, holder);
    cert["psi_path"] = path;
  }
  j["certificates"] = nlohmann::json::array({cert});
  if (p) {
    SingularTimeReport sr = singular_time(*p, t_max);
    j["t_sing"] = sr.t_sing;
    j["t_sing_reached"] = sr.reached;
    j["diagnostics"] = sr.diagnostics;
  }
  return j.dump(2);
}

}  // namespace pshflow
