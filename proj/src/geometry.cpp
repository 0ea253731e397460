#include "pshflow/geometry.hpp"

#include <vector>

namespace pshflow {

namespace {

// Lift one tensor component into a ScalarField so it can be differentiated
// spectrally.
template <typename F>
ScalarField lift(const Grid& g, F&& value_at) {
  ScalarField out(g);
  auto& v = out.values_mut();
  for (std::size_t p = 0; p < g.npts(); ++p) v[p] = value_at(p);
  return out;
}

}  // namespace

Tensor4Field::Tensor4Field(const Grid& grid, int dim)
    : grid_(&grid),
      dim_(dim),
      data_(grid.npts() * static_cast<std::size_t>(dim) * dim * dim * dim) {}

double Tensor4Field::sup_norm() const {
  double m = 0.0;
  for (const cxd& c : data_) m = std::max(m, std::abs(c));
  return m;
}

Tensor3Field christoffel(const MetricField& g) {
  const Grid& gr = g.grid();
  const int n = g.dim();
  Tensor3Field gamma(gr, n);
  // dg[i][j][l] = d_i g_{j lbar}
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      ScalarField gjl = lift(gr, [&](std::size_t p) { return g.at(p)(j, l); });
      for (int i = 0; i < n; ++i) {
        ScalarField d = spectral_partial(gjl, i, false);
        for (std::size_t p = 0; p < gr.npts(); ++p) {
          const auto ginv = g.inv(p);
          for (int k = 0; k < n; ++k)
            gamma.at(p, k, i, j) += ginv(l, k) * d[p];
        }
      }
    }
  }
  return gamma;
}

Tensor3Field torsion(const Tensor3Field& gamma) {
  const Grid& gr = gamma.grid();
  const int n = gamma.dim();
  Tensor3Field t(gr, n);
  for (std::size_t p = 0; p < gr.npts(); ++p)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          t.at(p, k, i, j) = gamma.at(p, k, i, j) - gamma.at(p, k, j, i);
  return t;
}

Tensor3Field torsion(const MetricField& g) { return torsion(christoffel(g)); }

Tensor4Field chern_curvature(const MetricField& g) {
  const Grid& gr = g.grid();
  const int n = g.dim();
  const Tensor3Field gamma = christoffel(g);
  Tensor4Field r(gr, n);
  for (int q = 0; q < n; ++q) {
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        ScalarField c =
            lift(gr, [&](std::size_t p) { return gamma.at(p, q, k, i); });
        for (int l = 0; l < n; ++l) {
          ScalarField d = spectral_partial(c, l, true);
          for (std::size_t p = 0; p < gr.npts(); ++p)
            r.at(p, k, l, i, q) = -d[p];
        }
      }
    }
  }
  return r;
}

MatrixField chern_ricci(const MetricField& g) {
  MatrixField ric = hermitian_hessian(g.log_det_field());
  ric *= -1.0;
  return ric;
}

MatrixField chern_ricci_from_curvature(const MetricField& g) {
  const Grid& gr = g.grid();
  const int n = g.dim();
  const Tensor3Field gamma = christoffel(g);
  MatrixField ric(gr, n);
  // R_{i jbar} = g^{k lbar} R_{i jbar k lbar},
  // R_{i jbar k lbar} = R_{i jbar k}^p g_{p lbar} = -(d_jbar Gamma^p_{ik}) g_{p lbar}
  for (int p_idx = 0; p_idx < n; ++p_idx) {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        ScalarField c = lift(
            gr, [&](std::size_t p) { return gamma.at(p, p_idx, i, k); });
        for (int j = 0; j < n; ++j) {
          ScalarField d = spectral_partial(c, j, true);
          for (std::size_t p = 0; p < gr.npts(); ++p) {
            const auto gm = g.at(p);
            const auto ginv = g.inv(p);
            cxd w = 0.0;
            for (int l = 0; l < n; ++l) w += ginv(l, k) * gm(p_idx, l);
            ric.at(p)(i, j) += -d[p] * w;
          }
        }
      }
    }
  }
  return ric;
}

MatrixField covariant_deriv_1form(const VectorField& a, const MetricField& g) {
  const Grid& gr = g.grid();
  const int n = g.dim();
  if (a.dim() != n || &a.grid() != &gr)
    throw DimensionError("covariant_deriv_1form: form/metric mismatch");
  const Tensor3Field gamma = christoffel(g);
  MatrixField out(gr, n);
  for (int l = 0; l < n; ++l) {
    ScalarField al = lift(gr, [&](std::size_t p) { return a.at(p, l); });
    for (int i = 0; i < n; ++i) {
      ScalarField d = spectral_partial(al, i, false);
      for (std::size_t p = 0; p < gr.npts(); ++p) {
        cxd v = d[p];
        for (int q = 0; q < n; ++q) v -= gamma.at(p, q, i, l) * a.at(p, q);
        out.at(p)(i, l) = v;
      }
    }
  }
  return out;
}

CommutationResidual commutation_residual(const ScalarField& u,
                                         const MetricField& g) {
  const Grid& gr = u.grid();
  const int n = g.dim();
  const std::size_t np = gr.npts();
  const Tensor3Field gamma = christoffel(g);
  const Tensor3Field tor = torsion(gamma);
  const Tensor4Field r = chern_curvature(g);

  // first derivatives u_p
  std::vector<ScalarField> du;
  for (int i = 0; i < n; ++i) du.push_back(spectral_partial(u, i, false));

  // mixed Hessian m[i][j] = u_{i jbar} (no connection terms on a scalar)
  std::vector<ScalarField> m;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.push_back(spectral_partial2(u, i, j));
  auto mix = [&](int i, int j) -> const ScalarField& { return m[i * n + j]; };

  // unbarred covariant second derivatives uu[i][l] = u_{il}
  std::vector<ScalarField> uu;
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      ScalarField f = spectral_partial(du[i], l, false);
      auto& v = f.values_mut();
      for (std::size_t p = 0; p < np; ++p)
        for (int q = 0; q < n; ++q) v[p] -= gamma.at(p, q, l, i) * du[q][p];
      uu.push_back(std::move(f));
    }
  }

  // third covariant derivatives with pattern u_{a bbar c}
  std::vector<ScalarField> t3;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        ScalarField f = spectral_partial(mix(a, b), c, false);
        auto& v = f.values_mut();
        for (std::size_t p = 0; p < np; ++p)
          for (int q = 0; q < n; ++q) v[p] -= gamma.at(p, q, c, a) * mix(q, b)[p];
        t3.push_back(std::move(f));
      }
    }
  }
  auto T3 = [&](int a, int b, int c) -> const ScalarField& {
    return t3[(a * n + b) * n + c];
  };

  // third covariant derivatives with pattern u_{a bbar cbar}
  std::vector<ScalarField> w3;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        ScalarField f = spectral_partial(mix(a, b), c, true);
        auto& v = f.values_mut();
        for (std::size_t p = 0; p < np; ++p)
          for (int q = 0; q < n; ++q)
            v[p] -= std::conj(gamma.at(p, q, c, b)) * mix(a, q)[p];
        w3.push_back(std::move(f));
      }
    }
  }
  auto W3 = [&](int a, int b, int c) -> const ScalarField& {
    return w3[(a * n + b) * n + c];
  };

  CommutationResidual res;

  // u_{i jbar l} = u_{i l jbar} - u_p R_{l jbar i}^p
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        ScalarField rhs = spectral_partial(uu[i * n + l], j, true);
        for (std::size_t p = 0; p < np; ++p) {
          cxd v = T3(i, j, l)[p] - rhs[p];
          for (int q = 0; q < n; ++q) v += du[q][p] * r.at(p, l, j, i, q);
          res.mixed_third = std::max(res.mixed_third, std::abs(v));
        }
      }
    }
  }

  // u_{p jbar mbar} = u_{p mbar jbar} - conj(T^q_{mj}) u_{p qbar}
  for (int a = 0; a < n; ++a) {
    for (int j = 0; j < n; ++j) {
      for (int mi = 0; mi < n; ++mi) {
        for (std::size_t p = 0; p < np; ++p) {
          cxd v = W3(a, j, mi)[p] - W3(a, mi, j)[p];
          for (int q = 0; q < n; ++q)
            v += std::conj(tor.at(p, q, mi, j)) * mix(a, q)[p];
          res.barred_third = std::max(res.barred_third, std::abs(v));
        }
      }
    }
  }

  // u_{i qbar l} = u_{l qbar i} - T^p_{li} u_{p qbar}
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < n; ++q) {
      for (int l = 0; l < n; ++l) {
        for (std::size_t p = 0; p < np; ++p) {
          cxd v = T3(i, q, l)[p] - T3(l, q, i)[p];
          for (int a = 0; a < n; ++a)
            v += tor.at(p, a, l, i) * mix(a, q)[p];
          res.unbarred_third = std::max(res.unbarred_third, std::abs(v));
        }
      }
    }
  }

  // fourth order: u_{i jbar l mbar} vs the swapped side
  // D[(a,b,c)][e] = d_ebar of t3(a,b,c)
  std::vector<ScalarField> d4;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e)
          d4.push_back(spectral_partial(T3(a, b, c), e, true));
  auto D4 = [&](int a, int b, int c, int e) -> const ScalarField& {
    return d4[((a * n + b) * n + c) * n + e];
  };

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        for (int mi = 0; mi < n; ++mi) {
          for (std::size_t p = 0; p < np; ++p) {
            cxd lhs = D4(i, j, l, mi)[p];
            for (int q = 0; q < n; ++q)
              lhs -= std::conj(gamma.at(p, q, mi, j)) * T3(i, q, l)[p];
            cxd rhs = D4(l, mi, i, j)[p];
            for (int q = 0; q < n; ++q)
              rhs -= std::conj(gamma.at(p, q, j, mi)) * T3(l, q, i)[p];
            for (int q = 0; q < n; ++q) {
              rhs += mix(q, j)[p] * r.at(p, l, mi, i, q);
              rhs -= mix(q, mi)[p] * r.at(p, i, j, l, q);
              rhs -= tor.at(p, q, l, i) * W3(q, mi, j)[p];
              rhs -= std::conj(tor.at(p, q, mi, j)) * T3(l, q, i)[p];
            }
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b)
                rhs -= tor.at(p, a, i, l) * std::conj(tor.at(p, b, mi, j)) *
                       mix(a, b)[p];
            res.fourth = std::max(res.fourth, std::abs(lhs - rhs));
          }
        }
      }
    }
  }
  return res;
}

}  // namespace pshflow
