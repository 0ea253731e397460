#include "pshflow/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pshflow {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(where, "unknown key '" + it.key() + "'");
}

double get_num(const json& j, const std::string& where, const std::string& key,
               double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) fail(where + "." + key, "expected a number");
  return j[key].get<double>();
}

// Trigonometric polynomial: [{"amp": a, "k": [k_1..k_{2n}], "phase": p}, ...]
// meaning sum of a cos(2 pi k.x + p) over the real coordinates.
ScalarField trig_field(const Grid& g, const json& spec,
                       const std::string& where) {
  if (!spec.is_array()) fail(where, "expected an array of terms");
  ScalarField out(g);
  auto& v = out.values_mut();
  int tidx = 0;
  for (const auto& term : spec) {
    const std::string twhere = where + "[" + std::to_string(tidx++) + "]";
    require_keys(term, twhere, {"amp", "k", "phase"});
    if (!term.contains("amp") || !term.contains("k"))
      fail(twhere, "needs 'amp' and 'k'");
    const double amp = term["amp"].get<double>();
    const double phase = get_num(term, twhere, "phase", 0.0);
    if (!term["k"].is_array() ||
        term["k"].size() != static_cast<std::size_t>(g.real_axes()))
      fail(twhere + ".k", "expected " + std::to_string(g.real_axes()) +
                              " integer frequencies");
    std::vector<double> k;
    for (const auto& ki : term["k"]) k.push_back(ki.get<double>());
    for (std::size_t p = 0; p < g.npts(); ++p) {
      double arg = phase;
      for (int a = 0; a < g.real_axes(); ++a)
        arg += 2.0 * M_PI * k[a] * g.coord(p, a) / g.period(a / 2);
      v[p] += amp * std::cos(arg);
    }
  }
  return out;
}

MetricField metric_from_recipe(const Grid& g, const json& spec,
                               const std::string& where, bool* is_kahler) {
  require_keys(spec, where, {"type", "f", "phi", "matrix"});
  if (!spec.contains("type")) fail(where, "metric recipe needs 'type'");
  const std::string type = spec["type"].get<std::string>();
  if (is_kahler) *is_kahler = false;
  if (type == "flat") {
    if (is_kahler) *is_kahler = true;
    return flat_metric(g);
  }
  if (type == "conformal") {
    if (!spec.contains("f")) fail(where, "conformal metric needs 'f'");
    ScalarField f = trig_field(g, spec["f"], where + ".f");
    MatrixField m(g, g.n());
    for (std::size_t p = 0; p < g.npts(); ++p)
      m.at(p) = std::exp(f[p].real()) * SmallMat::Identity(g.n(), g.n());
    return MetricField(std::move(m));
  }
  if (type == "kahler") {
    if (!spec.contains("phi")) fail(where, "kahler metric needs 'phi'");
    ScalarField phi = trig_field(g, spec["phi"], where + ".phi");
    MatrixField m = hermitian_hessian(phi);
    for (std::size_t p = 0; p < g.npts(); ++p)
      m.at(p) += SmallMat::Identity(g.n(), g.n());
    if (is_kahler) *is_kahler = true;
    return MetricField(std::move(m));
  }
  if (type == "explicit") {
    if (!spec.contains("matrix"))
      fail(where, "explicit metric needs 'matrix' ([[re, im] ...] rows)");
    const json& rows = spec["matrix"];
    const int n = g.n();
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(n))
      fail(where + ".matrix", "expected " + std::to_string(n) + " rows");
    SmallMat m0(n, n);
    for (int i = 0; i < n; ++i) {
      if (rows[i].size() != static_cast<std::size_t>(n))
        fail(where + ".matrix", "row " + std::to_string(i) + " wrong length");
      for (int j = 0; j < n; ++j) {
        const json& e = rows[i][j];
        if (!e.is_array() || e.size() != 2)
          fail(where + ".matrix", "entries are [re, im] pairs");
        m0(i, j) = cxd(e[0].get<double>(), e[1].get<double>());
      }
    }
    MatrixField m(g, n);
    for (std::size_t p = 0; p < g.npts(); ++p) m.at(p) = m0;
    return MetricField(std::move(m));
  }
  fail(where + ".type", "unknown metric type '" + type + "'");
}

}  // namespace

BuiltProblem build_problem_from_json(const std::string& text) {
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  require_keys(cfg, "$",
               {"schema", "geometry", "metric", "problem", "integrator",
                "monitor", "maxtime", "output", "seed"});
  if (cfg.contains("schema") && cfg["schema"].get<int>() != 1)
    fail("$.schema", "unsupported schema version");

  BuiltProblem out;
  if (!cfg.contains("geometry")) fail("$", "missing 'geometry'");
  const json& geo = cfg["geometry"];
  require_keys(geo, "$.geometry", {"n", "N", "periods"});
  const int n = static_cast<int>(get_num(geo, "$.geometry", "n", 0));
  const int N = static_cast<int>(get_num(geo, "$.geometry", "N", 0));
  if (n < 2 || n > 3) fail("$.geometry.n", "n must be 2 or 3");
  if (N < 2 || (N & (N - 1)) != 0)
    fail("$.geometry.N", "N must be a power of two >= 2");
  std::array<double, 3> periods{1.0, 1.0, 1.0};
  if (geo.contains("periods")) {
    const json& per = geo["periods"];
    if (!per.is_array() || per.size() != static_cast<std::size_t>(n))
      fail("$.geometry.periods", "expected " + std::to_string(n) + " entries");
    for (int i = 0; i < n; ++i) periods[i] = per[i].get<double>();
  }
  out.grid = std::make_unique<Grid>(n, N, periods);
  const Grid& g = *out.grid;

  if (!cfg.contains("metric")) fail("$", "missing 'metric'");
  MetricField omega =
      metric_from_recipe(g, cfg["metric"], "$.metric", &out.metric_is_kahler);

  const json prob = cfg.contains("problem") ? cfg["problem"] : json::object();
  require_keys(prob, "$.problem",
               {"omega0", "chi", "psi", "S", "Omega", "variant",
                "expect_singular"});
  MetricField omega0 =
      prob.contains("omega0")
          ? metric_from_recipe(g, prob["omega0"], "$.problem.omega0", nullptr)
          : MetricField(MatrixField(omega.mat()));
  ScalarField psi =
      prob.contains("psi") ? trig_field(g, prob["psi"], "$.problem.psi")
                           : ScalarField(g, 0.0);
  const double S = get_num(prob, "$.problem", "S", 1.0);
  FlowVariant variant = FlowVariant::base;
  if (prob.contains("variant")) {
    const std::string v = prob["variant"].get<std::string>();
    if (v == "gauduchon")
      variant = FlowVariant::gauduchon;
    else if (v != "base")
      fail("$.problem.variant", "unknown variant '" + v + "'");
  }
  out.expect_singular =
      prob.contains("expect_singular") && prob["expect_singular"].get<bool>();

  std::optional<ScalarField> factor;
  if (prob.contains("Omega")) {
    const json& om = prob["Omega"];
    require_keys(om, "$.problem.Omega", {"type", "F"});
    const std::string type =
        om.contains("type") ? om["type"].get<std::string>() : "default";
    if (type == "exp_factor") {
      if (!om.contains("F")) fail("$.problem.Omega", "exp_factor needs 'F'");
      factor = trig_field(g, om["F"], "$.problem.Omega.F");
    } else if (type != "default") {
      fail("$.problem.Omega.type", "unknown type '" + type + "'");
    }
  }

  std::string chi_type = "canonical";
  const json chi_spec =
      prob.contains("chi") ? prob["chi"] : json{{"type", "canonical"}};
  require_keys(chi_spec, "$.problem.chi", {"type", "c", "h"});
  if (chi_spec.contains("type"))
    chi_type = chi_spec["type"].get<std::string>();
  if (chi_type == "canonical") {
    if (factor.has_value())
      fail("$.problem", "canonical chi requires the default Omega");
    out.problem = std::make_unique<FlowProblem>(FlowProblem::canonical(
        std::move(omega), std::move(omega0), std::move(psi), S, variant));
  } else {
    MatrixField chi(g, n);
    if (chi_type == "scaled_omega" || chi_type == "mix") {
      const double c = get_num(chi_spec, "$.problem.chi", "c", 0.0);
      for (std::size_t p = 0; p < g.npts(); ++p)
        chi.at(p) = c * SmallMat(omega.at(p));
    }
    if (chi_type == "hessian" || chi_type == "mix") {
      if (!chi_spec.contains("h")) fail("$.problem.chi", "needs 'h'");
      chi += hermitian_hessian(trig_field(g, chi_spec["h"], "$.problem.chi.h"));
    }
    if (chi_type != "scaled_omega" && chi_type != "hessian" &&
        chi_type != "mix")
      fail("$.problem.chi.type", "unknown type '" + chi_type + "'");
    out.problem = std::make_unique<FlowProblem>(
        std::move(omega), std::move(omega0), std::move(chi), std::move(psi),
        S, variant, std::move(factor));
  }

  const json integ =
      cfg.contains("integrator") ? cfg["integrator"] : json::object();
  require_keys(integ, "$.integrator",
               {"dt_max", "dt_min", "err_tol", "fixed_dt", "t_end"});
  out.control.dt_max = get_num(integ, "$.integrator", "dt_max", 1e-2);
  out.control.dt_min = get_num(integ, "$.integrator", "dt_min", 1e-12);
  out.control.err_tol = get_num(integ, "$.integrator", "err_tol", 1e-8);
  out.control.fixed_dt =
      integ.contains("fixed_dt") && integ["fixed_dt"].get<bool>();
  out.t_end = get_num(integ, "$.integrator", "t_end", 1.0);

  const json mon = cfg.contains("monitor") ? cfg["monitor"] : json::object();
  require_keys(mon, "$.monitor", {"sample_every"});
  out.sample_every =
      static_cast<long>(get_num(mon, "$.monitor", "sample_every", 10));
  if (out.sample_every < 1) fail("$.monitor.sample_every", "must be >= 1");

  const json mt = cfg.contains("maxtime") ? cfg["maxtime"] : json::object();
  require_keys(mt, "$.maxtime",
               {"t_hi", "t_tol", "K", "ascent_iters", "restarts", "run_flow"});
  out.mt_t_hi = get_num(mt, "$.maxtime", "t_hi", 1.0);
  out.mt_t_tol = get_num(mt, "$.maxtime", "t_tol", 1e-2);
  out.mt_K = static_cast<int>(get_num(mt, "$.maxtime", "K", 2));
  out.mt_ascent_iters =
      static_cast<int>(get_num(mt, "$.maxtime", "ascent_iters", 100));
  out.mt_restarts = static_cast<int>(get_num(mt, "$.maxtime", "restarts", 2));
  out.mt_run_flow = mt.contains("run_flow") && mt["run_flow"].get<bool>();

  const json outp = cfg.contains("output") ? cfg["output"] : json::object();
  require_keys(outp, "$.output", {"prefix"});
  if (outp.contains("prefix"))
    out.out_prefix = outp["prefix"].get<std::string>();
  if (cfg.contains("seed")) out.seed = cfg["seed"].get<unsigned>();
  return out;
}

BuiltProblem load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return build_problem_from_json(ss.str());
}

}  // namespace pshflow
