#include "doctest.h"

#include <cstdio>

#include "oracles.hpp"
#include "pshflow/brute_forms.hpp"
#include "pshflow/flow.hpp"

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

// flat shrinker: omega = omega_0 = beta, chi = -c beta, psi = 0, Omega = beta^n
FlowProblem shrinker(const Grid& g, double c) {
  return FlowProblem(flat_metric(g), flat_metric(g),
                     scaled_identity_form(g, -c), zero_field(g), 1.0);
}

// stationary problem perturbed by a witness potential psi
FlowProblem perturbed(const Grid& g, const ScalarField& psi, double S) {
  return FlowProblem::canonical(flat_metric(g), flat_metric(g), psi, S);
}

double sup_diff(const MatrixField& a, const MatrixField& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.npts(); ++p)
    worst = std::max(worst,
                     (SmallMat(a.at(p)) - SmallMat(b.at(p))).cwiseAbs().maxCoeff());
  return worst;
}

double sup_diff(const ScalarField& a, const ScalarField& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.grid().npts(); ++p)
    worst = std::max(worst, std::abs(a[p] - b[p]));
  return worst;
}

}  // namespace

TEST_CASE("psi_t: interpolation anchors") {
  Grid g(3, 2);
  SUBCASE("t = 0 gives omega_0^{n-1}") {
    MetricField gm = random_metric(g, 0, 3, 0.2);
    FlowProblem p(flat_metric(g), std::move(gm), scaled_identity_form(g, -1.0),
                  zero_field(g), 1.0);
    CHECK(sup_diff(psi_t(p, 0.0), p.psi0_mat()) == 0.0);
  }
  SUBCASE("shrinker: orthonormal matrix is (1 - c t) I") {
    FlowProblem p = shrinker(g, 2.0);
    for (double t : {0.0, 0.1, 0.3}) {
      MatrixField psi = psi_t(p, t);
      CHECK(min_eig_n1n1(psi, p.omega()).value ==
            doctest::Approx(1.0 - 2.0 * t).epsilon(1e-12));
      CHECK(sup_diff(psi, scaled_identity_form(g, 1.0 - 2.0 * t)) < 1e-13);
    }
  }
  SUBCASE("chi = 0 is constant in t") {
    FlowProblem p(flat_metric(g), flat_metric(g), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    CHECK(sup_diff(psi_t(p, 0.7), psi_t(p, 0.0)) == 0.0);
  }
}

TEST_CASE("omega_hat: the two formulas agree and anchors hold") {
  SUBCASE("t = 0 with omega_0 = omega recovers omega") {
    Grid g(2, 8);
    MetricField gm = random_metric(g, 1, 7, 0.1);
    MetricField gm2 = random_metric(g, 1, 7, 0.1);
    FlowProblem p(std::move(gm), std::move(gm2), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    CHECK(sup_diff(omega_hat_mat(p, 0.0), p.omega().mat()) < 1e-11);
  }
  SUBCASE("flat homogeneous: omega_hat_t = (1 - c t) beta") {
    Grid g(3, 2);
    FlowProblem p = shrinker(g, 1.5);
    CHECK(sup_diff(omega_hat_mat(p, 0.2), scaled_identity_form(g, 0.7)) <
          1e-13);
  }
  SUBCASE("generic data passes the built-in consistency check") {
    Grid g(2, 8);
    ScalarField psi = random_real_field(g, 1, 11, 0.3);
    FlowProblem p = perturbed(g, psi, 2.0);
    CHECK_NOTHROW(omega_hat_mat(p, 0.4));
    // and the metric version validates positivity for small t
    CHECK_NOTHROW(omega_hat(p, 0.1));
  }
}

TEST_CASE("omega_tilde equals the star of the full (n-1,n-1) ansatz") {
  for (int n : {2, 3}) {
    Grid g(n, 8);
    ScalarField psi = random_real_field(g, 1, 13, 0.2);
    FlowProblem p = perturbed(g, psi, 3.0);
    ScalarField u = random_real_field(g, 1, 17, 0.05);
    const double t = 0.25;
    MatrixField tilde = omega_tilde_mat(p, u, t);
    MatrixField psi_total = psi_t(p, t);
    psi_total += wedge_omega_nm2(hermitian_hessian(u), p.omega());
    MatrixField starred = hodge_star_n1(psi_total, p.omega());
    CHECK(sup_diff(tilde, starred) < 1e-10);
    // u = 0 gives omega_hat
    CHECK(sup_diff(omega_tilde_mat(p, zero_field(g), t), omega_hat_mat(p, t)) <
          1e-14);
  }
}

TEST_CASE("rhs: stationary, shrinker, and the form-side cross-check") {
  SUBCASE("stationary problem has du/dt = 0") {
    Grid g(2, 4);
    FlowProblem p(flat_metric(g), flat_metric(g), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    CHECK(sup_abs(rhs(p, zero_field(g), 0.3)) < 1e-14);
  }
  SUBCASE("homogeneous shrinker: du/dt = n log(1 - c t)") {
    Grid g(3, 2);
    FlowProblem p = shrinker(g, 1.0);
    ScalarField u(g, cxd(0.37, 0.0));  // spatially constant
    for (double t : {0.0, 0.25, 0.5}) {
      ScalarField f = rhs(p, u, t);
      for (std::size_t q = 0; q < g.npts(); ++q)
        CHECK(f[q].real() ==
              doctest::Approx(3.0 * std::log(1.0 - t)).epsilon(1e-12));
    }
  }
  SUBCASE("metric-side and form-side paths agree") {
    for (int n : {2, 3}) {
      Grid g(n, 8);
      ScalarField psi = random_real_field(g, 1, 19, 0.3);
      FlowProblem p = perturbed(g, psi, 2.0);
      ScalarField u = random_real_field(g, 1, 23, 0.05);
      const double t = 0.3;
      const double tol = (n == 2) ? 1e-12 : 1e-10;  // n = 2: Chern-Ricci
                                                    // degeneration is exact
      CHECK(sup_diff(rhs(p, u, t), rhs_form_side(p, u, t)) < tol);
    }
  }
  SUBCASE("positivity loss raises PositivityLost") {
    Grid g(2, 2);
    FlowProblem p = shrinker(g, 1.0);
    CHECK_THROWS_AS(rhs(p, zero_field(g), 1.5), PositivityLost);
  }
}

TEST_CASE("gauduchon variant") {
  SUBCASE("flat reference metric reproduces rhs") {
    Grid g(3, 4);
    ScalarField psi = random_real_field(g, 1, 29, 0.2);
    FlowProblem p = perturbed(g, psi, 2.0);
    ScalarField u = random_real_field(g, 1, 31, 0.05);
    CHECK(sup_diff(gauduchon_rhs(p, u, 0.2), rhs(p, u, 0.2)) < 1e-12);
    // u = const behaves like u = 0
    ScalarField uc(g, cxd(0.8, 0.0));
    CHECK(sup_diff(gauduchon_rhs(p, uc, 0.2), gauduchon_rhs(p, zero_field(g), 0.2)) <
          1e-12);
  }
  SUBCASE("conformal reference: gradient term matches a brute-form oracle") {
    Grid g(3, 4);
    ScalarField f = random_real_field(g, 1, 37, 0.05);
    MetricField cm = conformal_metric(f);
    ScalarField u = random_real_field(g, 1, 41, 0.02);
    const int n = 3;
    // difference of the variant and base ansatz determinants isolates the
    // correction Re(i du ^ dbar omega); oracle-build that correction with the
    // pointwise brute engine from spectrally precomputed dbar-coefficients
    FlowProblem p(cm, conformal_metric(f), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    // (a) machinery under test at t = 0 (no forcing term): psi_total
    MatrixField h = hermitian_hessian(u);
    MatrixField base = psi_t(p, 0.0);
    base += wedge_omega_nm2(h, p.omega());
    ScalarField det_gaud(g), det_base = det_n1n1(base);
    {
      // evaluate the variant determinant through gauduchon_rhs:
      // log det = gauduchon_rhs + (n-2) log det g + log density
      ScalarField gr = gauduchon_rhs(p, u, 0.0);
      auto& v = det_gaud.values_mut();
      const ScalarField& ld = p.omega().log_det_field();
      for (std::size_t q = 0; q < g.npts(); ++q)
        v[q] = std::exp(gr[q].real() + (n - 2.0) * ld[q].real() +
                        p.log_omega_density()[q].real());
    }
    // (b) oracle for the correction matrix
    std::vector<ScalarField> dg;  // d_mbar g_{kl} for the conformal metric
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        ScalarField gkl(g);
        auto& v = gkl.values_mut();
        for (std::size_t q = 0; q < g.npts(); ++q) v[q] = cm.at(q)(k, l);
        for (int m = 0; m < n; ++m)
          dg.push_back(spectral_partial(gkl, m, true));
      }
    std::vector<ScalarField> du;
    for (int k = 0; k < n; ++k) du.push_back(spectral_partial(u, k, false));
    MatrixField corr(g, n);
    const cxd kI(0.0, 1.0);
    for (std::size_t q = 0; q < g.npts(); ++q) {
      // dbar(omega) at this point via wedges of brute 1-form basis elements
      brute::Form dbw;
      dbw.n = n;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          for (int m = 0; m < n; ++m) {
            brute::Form zm, zk, zl;
            zm.n = zk.n = zl.n = n;
            zm.coeff[{0, static_cast<std::uint8_t>(1u << m)}] = 1.0;
            zk.coeff[{static_cast<std::uint8_t>(1u << k), 0}] = 1.0;
            zl.coeff[{0, static_cast<std::uint8_t>(1u << l)}] = 1.0;
            brute::Form mono = brute::wedge(zm, brute::wedge(zk, zl));
            mono *= kI * dg[(k * n + l) * n + m][q];
            dbw += mono;
          }
      brute::Form idu;
      idu.n = n;
      for (int k = 0; k < n; ++k)
        idu.coeff[{static_cast<std::uint8_t>(1u << k), 0}] = kI * du[k][q];
      corr.at(q) = brute::extract_n1n1(
          brute::real_part(brute::wedge(idu, dbw)));
    }
    MatrixField expected = base;
    expected += corr;
    ScalarField det_expected = det_n1n1(expected);
    CHECK(sup_diff(det_gaud, det_expected) < 1e-11);
  }
  SUBCASE("n = 2 is rejected") {
    Grid g(2, 2);
    FlowProblem p = shrinker(g, 0.5);
    CHECK_THROWS_AS(gauduchon_rhs(p, zero_field(g), 0.0), DimensionError);
  }
}

TEST_CASE("step: stationary fixed point and shrinker accuracy") {
  SUBCASE("stationary: u unchanged, dt grows to dt_max") {
    Grid g(2, 4);
    FlowProblem p(flat_metric(g), flat_metric(g), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    FlowState st(g);
    st.dt = 1e-4;
    for (int i = 0; i < 12; ++i) step(p, st);
    CHECK(sup_abs(st.u) < 1e-14);
    CHECK(st.dt == doctest::Approx(1e-2));
    CHECK(st.rejected_count == 0);
  }
  SUBCASE("homogeneous shrinker matches the closed-form quadrature") {
    Grid g(2, 2);
    const double c = 1.0;
    FlowProblem p = shrinker(g, c);
    FlowState st(g);
    st.dt = 1e-4;
    const double t_end = 0.5;
    while (st.t < t_end - 1e-14) {
      st.dt = std::min(st.dt, t_end - st.t);
      step(p, st);
    }
    // u(t) = n [ -(1/c)(1 - c t)(log(1 - c t) - 1) - 1/c ]
    const double n = 2.0;
    const double expect =
        n * (-(1.0 / c) * (1.0 - c * t_end) * (std::log(1.0 - c * t_end) - 1.0) -
             1.0 / c);
    for (std::size_t q = 0; q < g.npts(); ++q)
      CHECK(st.u[q].real() == doctest::Approx(expect).epsilon(1e-6));
    // spatial-mean consistency: homogeneous data stays homogeneous
    double osc = 0.0;
    for (std::size_t q = 0; q < g.npts(); ++q)
      osc = std::max(osc, std::abs(st.u[q] - st.u[0]));
    CHECK(osc < 1e-12);
  }
  SUBCASE("singular time terminates with SingularTimeReached") {
    Grid g(2, 2);
    FlowProblem p = shrinker(g, 1.0);
    FlowState st(g);
    st.dt = 1e-3;
    CHECK_THROWS_AS(
        [&] {
          for (int i = 0; i < 100000; ++i) step(p, st);
        }(),
        SingularTimeReached);
    CHECK(st.t > 0.9);  // the shrinker dies at t = 1
    CHECK(st.t < 1.0 + 1e-9);
  }
}

TEST_CASE("run: convergence to a stationary state and decay of du/dt") {
  Grid g(2, 8);
  // chi = 0 and Omega = e^F omega^n: the flow relaxes to the solution of the
  // elliptic Monge-Ampere equation with du/dt -> const
  ScalarField F = random_real_field(g, 1, 43, 0.02);
  FlowProblem p(flat_metric(g), flat_metric(g), scaled_identity_form(g, 0.0),
                zero_field(g), 1.0, FlowVariant::base, F);
  std::vector<double> osc_series;
  RunOptions opts;
  opts.convergence_osc_tol = 1e-8;
  opts.sample_every = 5;
  opts.callback = [&](const FlowState&, const ScalarField& udot) {
    double lo = udot[0].real(), hi = udot[0].real();
    for (std::size_t q = 0; q < g.npts(); ++q) {
      lo = std::min(lo, udot[q].real());
      hi = std::max(hi, udot[q].real());
    }
    osc_series.push_back(hi - lo);
  };
  RunResult res = run(p, 80.0, opts);
  CHECK(res.converged);
  CHECK(!res.singular);
  REQUIRE(osc_series.size() >= 3);
  // after the transient the oscillation decays monotonically
  for (std::size_t i = osc_series.size() / 2; i + 1 < osc_series.size(); ++i)
    CHECK(osc_series[i + 1] <= osc_series[i] * (1.0 + 1e-9));
  // b is the spatial mean of du/dt at the stationary limit
  CHECK(std::abs(res.b) < 1.0);
}

TEST_CASE("flow_residual ties the scalar flow back to the form flow") {
  SUBCASE("stationary") {
    Grid g(2, 4);
    FlowProblem p(flat_metric(g), flat_metric(g), scaled_identity_form(g, 0.0),
                  zero_field(g), 1.0);
    FlowState a(g), b(g);
    a.t = 0.1;
    b.t = 0.102;
    CHECK(flow_residual(p, a, b) < 1e-8);
  }
  SUBCASE("homogeneous shrinker") {
    Grid g(2, 2);
    FlowProblem p = shrinker(g, 1.0);
    StepControl fixed;
    fixed.fixed_dt = true;
    fixed.dt_max = 1e-3;
    FlowState st(g);
    st.dt = 1e-3;
    while (st.t < 0.3 - 1e-12) step(p, st, fixed);
    FlowState before = st;
    step(p, st, fixed);
    step(p, st, fixed);
    CHECK(flow_residual(p, before, st) < 1e-6);
  }
  SUBCASE("generic trajectory at dt = 1e-3") {
    Grid g(2, 8);
    ScalarField psi = random_real_field(g, 1, 47, 0.1);
    FlowProblem p = perturbed(g, psi, 1.0);
    StepControl fixed;
    fixed.fixed_dt = true;
    fixed.dt_max = 1e-3;
    FlowState st(g);
    st.dt = 1e-3;
    while (st.t < 0.05 - 1e-12) step(p, st, fixed);
    FlowState before = st;
    step(p, st, fixed);
    step(p, st, fixed);
    CHECK(flow_residual(p, before, st) < 1e-5);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Grid g(2, 4);
  ScalarField psi = random_real_field(g, 1, 53, 0.1);
  FlowProblem p = perturbed(g, psi, 1.0);
  FlowState st(g);
  st.dt = 1e-4;
  for (int i = 0; i < 5; ++i) step(p, st);
  const std::string path = "checkpoint_test.pshf";
  save_checkpoint(path, st);
  FlowState loaded = load_checkpoint(path, g);
  CHECK(loaded.t == st.t);
  CHECK(loaded.dt == st.dt);
  for (std::size_t q = 0; q < g.npts(); ++q)
    CHECK(loaded.u[q].real() == st.u[q].real());
  // grid mismatch is rejected
  Grid g2(2, 8);
  CHECK_THROWS_AS(load_checkpoint(path, g2), ConfigError);
  std::remove(path.c_str());
}
