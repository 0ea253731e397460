#include "doctest.h"

#include "oracles.hpp"
#include "pshflow/geometry.hpp"

using namespace pshflow;
using namespace pshflow::testutil;

namespace {

ScalarField lift_gamma(const Tensor3Field& t, int k, int i, int j) {
  ScalarField f(t.grid());
  auto& v = f.values_mut();
  for (std::size_t p = 0; p < t.grid().npts(); ++p) v[p] = t.at(p, k, i, j);
  return f;
}

}  // namespace

TEST_CASE("christoffel of the flat metric vanishes") {
  Grid g(2, 4);
  MetricField flat = flat_metric(g);
  CHECK(christoffel(flat).sup_norm() < 1e-14);
  CHECK(torsion(flat).sup_norm() < 1e-14);
  CHECK(chern_curvature(flat).sup_norm() < 1e-14);
  CHECK(chern_ricci(flat).sup_norm() < 1e-14);
}

TEST_CASE("conformal metric: Gamma^k_ij = (d_i f) delta_jk") {
  Grid g(2, 16);
  ScalarField f = random_real_field(g, 1, 21, 0.3);
  MetricField cm = conformal_metric(f);
  Tensor3Field gamma = christoffel(cm);
  std::vector<ScalarField> df;
  for (int i = 0; i < 2; ++i) df.push_back(spectral_partial(f, i, false));
  double worst = 0.0;
  for (std::size_t p = 0; p < g.npts(); ++p)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const cxd expect = (j == k) ? df[i][p] : cxd(0.0);
          worst = std::max(worst, std::abs(gamma.at(p, k, i, j) - expect));
        }
  CHECK(worst < 1e-10);

  // torsion: T^k_ij = (d_i f) delta_jk - (d_j f) delta_ik
  Tensor3Field t = torsion(gamma);
  worst = 0.0;
  for (std::size_t p = 0; p < g.npts(); ++p)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          cxd expect = 0.0;
          if (j == k) expect += df[i][p];
          if (i == k) expect -= df[j][p];
          worst = std::max(worst, std::abs(t.at(p, k, i, j) - expect));
        }
  CHECK(worst < 1e-10);
}

TEST_CASE("christoffel matches the finite-difference oracle") {
  Grid g(2, 32);
  MetricField gm = random_metric(g, 1, 5);
  Tensor3Field gamma = christoffel(gm);
  // oracle: contract FD derivatives of the metric entries with the inverse
  double worst = 0.0;
  Tensor3Field oracle(g, 2);
  for (int j = 0; j < 2; ++j)
    for (int l = 0; l < 2; ++l) {
      ScalarField gjl(g);
      auto& v = gjl.values_mut();
      for (std::size_t p = 0; p < g.npts(); ++p) v[p] = gm.at(p)(j, l);
      for (int i = 0; i < 2; ++i) {
        ScalarField d = fd_partial(gjl, i, false);
        for (std::size_t p = 0; p < g.npts(); ++p)
          for (int k = 0; k < 2; ++k)
            oracle.at(p, k, i, j) += gm.inv(p)(l, k) * d[p];
      }
    }
  for (std::size_t p = 0; p < g.npts(); ++p)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          worst = std::max(worst,
                           std::abs(gamma.at(p, k, i, j) - oracle.at(p, k, i, j)));
  CHECK(worst < 1e-8);
}

TEST_CASE("torsion is exactly antisymmetric and vanishes for Kahler metrics") {
  Grid g(2, 16);
  SUBCASE("antisymmetry is exact") {
    MetricField gm = random_metric(g, 2, 9);
    Tensor3Field t = torsion(gm);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.npts(); ++p)
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            worst = std::max(worst,
                             std::abs(t.at(p, k, i, j) + t.at(p, k, j, i)));
    CHECK(worst == 0.0);
  }
  SUBCASE("potential metrics are torsion-free") {
    ScalarField phi = random_real_field(g, 1, 13, 0.02);
    MatrixField h = hermitian_hessian(phi);
    MatrixField m(g, 2);
    for (std::size_t p = 0; p < g.npts(); ++p)
      m.at(p) = SmallMat::Identity(2, 2) + SmallMat(h.at(p));
    MetricField kahler(std::move(m));
    CHECK(torsion(kahler).sup_norm() < 1e-10);
  }
}

TEST_CASE("chern_curvature: conformal closed form and FD oracle") {
  SUBCASE("conformal: R_{k lbar i}^p = -(d_k d_lbar f) delta_ip") {
    Grid g(2, 16);
    ScalarField f = random_real_field(g, 1, 31, 0.3);
    MetricField cm = conformal_metric(f);
    Tensor4Field r = chern_curvature(cm);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        ScalarField d2 = spectral_partial2(f, k, l);
        for (std::size_t p = 0; p < g.npts(); ++p)
          for (int i = 0; i < 2; ++i)
            for (int q = 0; q < 2; ++q) {
              const cxd expect = (i == q) ? -d2[p] : cxd(0.0);
              worst = std::max(worst, std::abs(r.at(p, k, l, i, q) - expect));
            }
      }
    CHECK(worst < 1e-9);
  }
  SUBCASE("random metric: FD oracle on the curvature definition") {
    Grid g(2, 32);
    MetricField gm = random_metric(g, 1, 41, 0.1);
    Tensor3Field gamma = christoffel(gm);
    Tensor4Field r = chern_curvature(gm);
    double worst = 0.0;
    for (int q = 0; q < 2; ++q)
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i) {
          ScalarField c = lift_gamma(gamma, q, k, i);
          for (int l = 0; l < 2; ++l) {
            ScalarField d = fd_partial(c, l, true);
            for (std::size_t p = 0; p < g.npts(); ++p)
              worst = std::max(worst, std::abs(r.at(p, k, l, i, q) + d[p]));
          }
        }
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("chern_ricci: conformal law and the curvature-trace cross-check") {
  SUBCASE("conformal: Ric = -n Hess f") {
    for (int n : {2, 3}) {
      Grid g(n, 8);
      ScalarField f = random_real_field(g, 1, 55, 0.2);
      MetricField cm = conformal_metric(f);
      MatrixField ric = chern_ricci(cm);
      MatrixField hess = hermitian_hessian(f);
      double worst = 0.0;
      for (std::size_t p = 0; p < g.npts(); ++p)
        worst = std::max(worst, (SmallMat(ric.at(p)) +
                                 double(n) * SmallMat(hess.at(p)))
                                    .cwiseAbs()
                                    .maxCoeff());
      CHECK(worst < 1e-10);
    }
  }
  SUBCASE("two formulas agree on a random metric") {
    Grid g(2, 16);
    MetricField gm = random_metric(g, 1, 61, 0.1);
    MatrixField a = chern_ricci(gm);
    MatrixField b = chern_ricci_from_curvature(gm);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.npts(); ++p)
      worst = std::max(worst,
                       (SmallMat(a.at(p)) - SmallMat(b.at(p))).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-7);
    CHECK(a.max_hermiticity_residual() < 1e-12);
  }
  SUBCASE("spatial mean of the Ricci matrix vanishes") {
    Grid g(2, 16);
    MetricField gm = random_metric(g, 1, 71, 0.15);
    MatrixField ric = chern_ricci(gm);
    SmallMat mean = SmallMat::Zero(2, 2);
    for (std::size_t p = 0; p < g.npts(); ++p) mean += ric.at(p);
    mean /= static_cast<double>(g.npts());
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("conformal scaling law Ric(e^f g) = Ric(g) - n Hess f") {
    Grid g(2, 16);
    MetricField gm = random_metric(g, 1, 81, 0.1);
    ScalarField f = random_real_field(g, 1, 91, 0.2);
    MatrixField m(g, 2);
    for (std::size_t p = 0; p < g.npts(); ++p)
      m.at(p) = std::exp(f[p].real()) * SmallMat(gm.at(p));
    MetricField scaled(std::move(m));
    MatrixField lhs = chern_ricci(scaled);
    MatrixField rhs = chern_ricci(gm);
    MatrixField hess = hermitian_hessian(f);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.npts(); ++p)
      worst = std::max(worst, (SmallMat(lhs.at(p)) - SmallMat(rhs.at(p)) +
                               2.0 * SmallMat(hess.at(p)))
                                  .cwiseAbs()
                                  .maxCoeff());
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("covariant_deriv_1form") {
  SUBCASE("flat metric: covariant = partial, and Hessian of u is symmetric") {
    Grid g(2, 8);
    MetricField flat = flat_metric(g);
    ScalarField u = random_real_field(g, 2, 101);
    VectorField du = gradient_form(u);
    MatrixField nd = covariant_deriv_1form(du, flat);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      ScalarField ui(g);
      auto& v = ui.values_mut();
      for (std::size_t p = 0; p < g.npts(); ++p) v[p] = du.at(p, i);
      for (int l = 0; l < 2; ++l) {
        ScalarField d = spectral_partial(ui, l, false);
        for (std::size_t p = 0; p < g.npts(); ++p)
          worst = std::max(worst, std::abs(nd.at(p)(l, i) - d[p]));
      }
    }
    CHECK(worst < 1e-12);
    double asym = 0.0;
    for (std::size_t p = 0; p < g.npts(); ++p)
      asym = std::max(asym, std::abs(nd.at(p)(0, 1) - nd.at(p)(1, 0)));
    CHECK(asym < 1e-12);
  }
  SUBCASE("random metric: FD oracle") {
    Grid g(2, 32);
    MetricField gm = random_metric(g, 1, 111, 0.1);
    ScalarField u = random_real_field(g, 1, 121);
    VectorField a = gradient_form(u);
    MatrixField nd = covariant_deriv_1form(a, gm);
    Tensor3Field gamma = christoffel(gm);
    double worst = 0.0;
    for (int l = 0; l < 2; ++l) {
      ScalarField al(g);
      auto& v = al.values_mut();
      for (std::size_t p = 0; p < g.npts(); ++p) v[p] = a.at(p, l);
      for (int i = 0; i < 2; ++i) {
        ScalarField d = fd_partial(al, i, false);
        for (std::size_t p = 0; p < g.npts(); ++p) {
          cxd expect = d[p];
          for (int q = 0; q < 2; ++q)
            expect -= gamma.at(p, q, i, l) * a.at(p, q);
          worst = std::max(worst, std::abs(nd.at(p)(i, l) - expect));
        }
      }
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("commutation identities") {
  SUBCASE("constant u gives exactly zero") {
    Grid g(2, 4);
    MetricField gm = random_metric(g, 1, 131, 0.1);
    ScalarField u(g, cxd(1.5, 0.0));
    CHECK(commutation_residual(u, gm).max() == 0.0);
  }
  SUBCASE("flat metric reduces to symmetry of partials") {
    for (int n : {2, 3}) {
      Grid g(n, 4);
      MetricField flat = flat_metric(g);
      ScalarField u = random_real_field(g, 1, 141);
      CHECK(commutation_residual(u, flat).max() < 1e-10);
    }
  }
  SUBCASE("conformal metric, low-frequency u") {
    Grid g(2, 16);
    ScalarField f = random_real_field(g, 1, 151, 0.05);
    MetricField cm = conformal_metric(f);
    ScalarField u = random_real_field(g, 1, 161);
    CommutationResidual r = commutation_residual(u, cm);
    CHECK(r.mixed_third < 1e-7);
    CHECK(r.barred_third < 1e-7);
    CHECK(r.unbarred_third < 1e-7);
    CHECK(r.fourth < 1e-7);
  }
}
