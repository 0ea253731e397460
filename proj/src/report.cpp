#include "pshflow/report.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "pshflow/geometry.hpp"

namespace pshflow {

namespace {

// Small deterministic band-limited real field for exercising identities.
ScalarField probe_field(const Grid& g, unsigned seed, double amp) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> freq(-1, 1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  ScalarField out(g);
  auto& v = out.values_mut();
  for (int term = 0; term < 6; ++term) {
    std::vector<int> k(g.real_axes());
    for (auto& ki : k) ki = freq(rng);
    const double ph = phase(rng);
    for (std::size_t p = 0; p < g.npts(); ++p) {
      double arg = ph;
      for (int a = 0; a < g.real_axes(); ++a)
        arg += 2.0 * M_PI * k[a] * g.coord(p, a) / g.period(a / 2);
      v[p] += (amp / 6.0) * std::cos(arg);
    }
  }
  return out;
}

double sup_diff(const MatrixField& a, const MatrixField& b) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.npts(); ++p)
    worst = std::max(worst,
                     (SmallMat(a.at(p)) - SmallMat(b.at(p))).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace

CheckReport run_identity_checks(const MetricField& metric,
                                bool kahler_expected, unsigned seed) {
  const Grid& g = metric.grid();
  const int n = metric.dim();
  CheckReport rep;

  rep.add("metric_hermiticity", metric.mat().max_hermiticity_residual(),
          1e-12);
  if (kahler_expected) {
    Tensor3Field t = torsion(metric);
    rep.add("kahler_torsion", t.sup_norm(), 1e-10);
  }
  rep.add("ricci_formula_agreement",
          sup_diff(chern_ricci(metric), chern_ricci_from_curvature(metric)),
          1e-7);
  {
    ScalarField u = probe_field(g, seed, 0.05);
    rep.add("commutation_identities", commutation_residual(u, metric).max(),
            1e-6);
  }
  {
    ScalarField f = probe_field(g, seed + 1, 0.1);
    MatrixField alpha = hermitian_hessian(f);
    for (std::size_t p = 0; p < g.npts(); ++p)
      alpha.at(p) += SmallMat(metric.at(p));
    rep.add("wedge_vs_brute",
            sup_diff(wedge_omega_nm2(alpha, metric),
                     brute_wedge(alpha, metric, n - 2)),
            1e-11);
    MatrixField psi = power_n1(metric);
    rep.add("star_vs_brute",
            sup_diff(hodge_star_n1(psi, metric),
                     brute_hodge_star_n1(psi, metric)),
            1e-11);
    // det(omega^{n-1}) = (det g)^{n-1}
    ScalarField d = det_n1n1(psi);
    double worst = 0.0;
    for (std::size_t p = 0; p < g.npts(); ++p) {
      const double expect = std::exp((n - 1.0) * metric.log_det(p));
      worst = std::max(worst, std::abs(d[p].real() - expect) / expect);
    }
    rep.add("det_power_identity", worst, 1e-12);
    rep.add("power_root_roundtrip",
            sup_diff(root_n1(psi).mat(), metric.mat()), 1e-10);
  }
  return rep;
}

void write_check_report(std::ostream& os, const CheckReport& rep) {
  for (const auto& item : rep.items) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e (tol %.1e)", item.residual,
                  item.threshold);
    os << (item.pass ? "PASS" : "FAIL") << "  " << item.name << "  " << buf
       << "\n";
  }
  os << (rep.ok ? "all identity checks passed" : "identity check FAILURE")
     << "\n";
}

EstimateReport read_estimates_csv(std::istream& is) {
  EstimateReport rep;
  std::string line;
  if (!std::getline(is, line) || line != "# pshflow-estimates-csv v1")
    throw ConfigError("estimates csv: bad or missing version header");
  if (!std::getline(is, line))
    throw ConfigError("estimates csv: missing column header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 12)
      throw ConfigError("estimates csv: wrong column count");
    EstimateSample s;
    s.t = vals[0];
    s.sup_u = vals[1];
    s.sup_udot = vals[2];
    s.vol_ratio_min = vals[3];
    s.vol_ratio_max = vals[4];
    s.sup_trace = vals[5];
    s.sup_grad2 = vals[6];
    s.min_eig = vals[7];
    s.trace_bound_ratio = vals[8];
    s.trace_identity_res = vals[9];
    s.eta_expr_res = vals[10];
    s.theta_min_eig = vals[11];
    rep.add(s);
  }
  return rep;
}

}  // namespace pshflow
