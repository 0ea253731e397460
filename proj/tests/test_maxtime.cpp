#include "doctest.h"

#include "pshflow/maxtime.hpp"
#include "oracles.hpp"

using namespace pshflow;
using namespace pshflow::testutil;

namespace {

ScalarField zero_field(const Grid& g) { return ScalarField(g, 0.0); }

MatrixField scaled_identity_form(const Grid& g, double c) {
  MatrixField m(g, g.n());
  for (std::size_t p = 0; p < g.npts(); ++p)
    m.at(p) = c * SmallMat::Identity(g.n(), g.n());
  return m;
}

}  // namespace

TEST_CASE("class positivity along the homogeneous family") {
  Grid g(2, 4);
  MetricField omega = flat_metric(g);
  MetricField omega0 = flat_metric(g);
  const double c = 1.0;
  MatrixField chi = scaled_identity_form(g, -c);
  MaxTimeQuery q;
  q.omega = &omega;
  q.omega0 = &omega0;
  q.chi = &chi;
  q.K = 1;
  q.ascent_iters = 40;
  q.restarts = 2;
  SUBCASE("lambda*(t) = 1 - c t, optimal psi near zero") {
    for (double t : {0.0, 0.3, 0.7}) {
      ClassPositivity cp = class_positivity(q, t);
      CHECK(cp.lambda == doctest::Approx(1.0 - c * t).epsilon(1e-6));
    }
  }
  SUBCASE("t = 0 is always feasible with the psi = 0 certificate") {
    ClassPositivity cp = class_positivity(q, 0.0);
    CHECK(cp.lambda > 0.0);
    CHECK(cp.lambda >= min_eig_n1n1(power_n1(omega0), omega).value - 1e-12);
  }
  SUBCASE("monotonicity: lambda*(t) non-increasing") {
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25}) {
      ClassPositivity cp = class_positivity(q, t);
      CHECK(cp.lambda <= prev + 1e-9);
      prev = cp.lambda;
    }
  }
  SUBCASE("certificate soundness: re-evaluating min_eig reproduces lambda") {
    ClassPositivity cp = class_positivity(q, 0.4);
    MatrixField psi_form = power_n1(omega0);
    MatrixField cw = wedge_omega_nm2(chi, omega);
    cw *= 0.4;
    psi_form += cw;
    psi_form += wedge_omega_nm2(hermitian_hessian(cp.psi), omega);
    CHECK(std::abs(min_eig_n1n1(psi_form, omega).value - cp.lambda) < 1e-9);
  }
}

TEST_CASE("pure ddbar forcing is absorbed by the ascent") {
  Grid g(2, 8);
  MetricField omega = flat_metric(g);
  MetricField omega0 = flat_metric(g);
  ScalarField h = random_real_field(g, 1, 137, 0.3);
  MatrixField chi = hermitian_hessian(h);
  MaxTimeQuery q;
  q.omega = &omega;
  q.omega0 = &omega0;
  q.chi = &chi;
  q.K = 1;
  q.ascent_iters = 150;
  q.restarts = 1;
  // at psi = 0 the forcing dominates for large t; psi = -t h cancels it,
  // so the optimum stays at 1 independent of t
  const double t = 4.0;
  {
    MatrixField f = power_n1(omega0);
    MatrixField cw = wedge_omega_nm2(chi, omega);
    cw *= t;
    f += cw;
    REQUIRE(min_eig_n1n1(f, omega).value < 0.0);  // infeasible without psi
  }
  ClassPositivity cp = class_positivity(q, t);
  CHECK(cp.lambda == doctest::Approx(1.0).epsilon(1e-3));
  // the recovered potential is -t h up to the zero-mean normalization
  double worst = 0.0;
  const cxd mh = mean(h);
  for (std::size_t p = 0; p < g.npts(); ++p)
    worst = std::max(worst,
                     std::abs(cp.psi[p] + t * (h[p] - mh)));
  CHECK(worst < 0.05);
}

TEST_CASE("predicted existence time") {
  Grid g(2, 4);
  MetricField omega = flat_metric(g);
  MetricField omega0 = flat_metric(g);
  MaxTimeQuery q;
  q.omega = &omega;
  q.omega0 = &omega0;
  q.K = 1;
  q.ascent_iters = 40;
  q.restarts = 1;
  SUBCASE("homogeneous family: T = 1/c within 1%") {
    const double c = 2.0;
    MatrixField chi = scaled_identity_form(g, -c);
    q.chi = &chi;
    q.t_hi = 1.0;
    q.t_tol = 0.004;
    PredictedT pt = predicted_T(q);
    CHECK(!pt.horizon_too_small);
    CHECK(pt.T_lo <= 0.5 + 1e-9);
    CHECK(pt.T_hi >= 0.5 - 1e-9);
    CHECK(pt.T_hi - pt.T_lo <= 0.004 + 1e-12);
    CHECK(0.5 == doctest::Approx(0.5 * (pt.T_lo + pt.T_hi)).epsilon(0.01));
    CHECK(pt.certificate.lambda > 0.0);
  }
  SUBCASE("chi = 0: every t feasible, horizon advisory") {
    MatrixField chi = scaled_identity_form(g, 0.0);
    q.chi = &chi;
    q.t_hi = 3.0;
    PredictedT pt = predicted_T(q);
    CHECK(pt.horizon_too_small);
    CHECK(pt.T_lo == doctest::Approx(3.0));
  }
  SUBCASE("shrinking plus absorbable forcing: T = 1/c within 2%") {
    Grid g8(2, 8);
    MetricField omega8 = flat_metric(g8);
    MetricField omega08 = flat_metric(g8);
    ScalarField h = random_real_field(g8, 1, 139, 0.2);
    const double c = 1.0;
    MatrixField chi = hermitian_hessian(h);
    chi += scaled_identity_form(g8, -c);
    MaxTimeQuery q8;
    q8.omega = &omega8;
    q8.omega0 = &omega08;
    q8.chi = &chi;
    q8.K = 1;
    q8.ascent_iters = 120;
    q8.restarts = 1;
    q8.t_hi = 2.0;
    q8.t_tol = 0.01;
    PredictedT pt = predicted_T(q8);
    CHECK(1.0 == doctest::Approx(0.5 * (pt.T_lo + pt.T_hi)).epsilon(0.02));
  }
}

TEST_CASE("singular time of the flow against the class bound") {
  SUBCASE("homogeneous shrinker dies just before 1/c") {
    Grid g(2, 2);
    const double c = 1.0;
    FlowProblem p(flat_metric(g), flat_metric(g),
                  scaled_identity_form(g, -c), zero_field(g), 1.0);
    SingularTimeReport sr = singular_time(p, 2.0);
    CHECK(sr.reached);
    CHECK(sr.t_sing >= 1.0 / c - 0.02 / c);
    CHECK(sr.t_sing <= 1.0 / c + 1e-9);
  }
  SUBCASE("chi = 0: no singularity before t_end") {
    Grid g(2, 4);
    FlowProblem p(flat_metric(g), flat_metric(g),
                  scaled_identity_form(g, 0.0), zero_field(g), 1.0);
    SingularTimeReport sr = singular_time(p, 0.5);
    CHECK(!sr.reached);
    CHECK(sr.t_sing == doctest::Approx(0.5).epsilon(1e-10));
  }
  SUBCASE("t_sing <= T_hi + 2 dt_max on the homogeneous family") {
    Grid g(2, 2);
    const double c = 2.0;
    MetricField omega = flat_metric(g);
    MetricField omega0 = flat_metric(g);
    MatrixField chi = scaled_identity_form(g, -c);
    MaxTimeQuery q;
    q.omega = &omega;
    q.omega0 = &omega0;
    q.chi = &chi;
    q.K = 1;
    q.ascent_iters = 30;
    q.restarts = 1;
    q.t_hi = 1.0;
    q.t_tol = 0.004;
    PredictedT pt = predicted_T(q);
    FlowProblem p(flat_metric(g), flat_metric(g),
                  scaled_identity_form(g, -c), zero_field(g), 1.0);
    SingularTimeReport sr = singular_time(p, 1.0);
    CHECK(sr.reached);
    CHECK(sr.t_sing <= pt.T_hi + 2.0 * StepControl{}.dt_max);
    CHECK(sr.t_sing >= pt.T_lo - 0.02 / c);
  }
}

TEST_CASE("maxtime JSON report") {
  Grid g(2, 2);
  MetricField omega = flat_metric(g);
  MetricField omega0 = flat_metric(g);
  MatrixField chi = scaled_identity_form(g, -1.0);
  MaxTimeQuery q;
  q.omega = &omega;
  q.omega0 = &omega0;
  q.chi = &chi;
  q.K = 1;
  q.ascent_iters = 20;
  q.restarts = 1;
  q.t_hi = 2.0;
  q.t_tol = 0.05;
  FlowProblem p(flat_metric(g), flat_metric(g),
                scaled_identity_form(g, -1.0), zero_field(g), 1.0);
  std::string rep = maxtime_report_json(q, &p, 2.0);
  for (const char* key :
       {"T_lo", "T_hi", "certificates", "t_sing", "diagnostics"})
    CHECK(rep.find(key) != std::string::npos);
}
