#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pshflow/config.hpp"
#include "pshflow/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 2;
constexpr int kExitSingular = 3;
constexpr int kExitConfig = 4;

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::string resume_path;
  std::string out_dir;
  int threads = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* c = cmd->add_option("--config", o.config_path, "config JSON path");
  if (need_config) c->required();
  cmd->add_option("--resume", o.resume_path, "checkpoint to resume from");
  cmd->add_option("--out", o.out_dir, "output directory (overrides config)");
  cmd->add_option("--threads", o.threads, "worker threads (single-threaded build)");
  cmd->add_flag("--verbose", o.verbose, "chatty progress output");
}

fs::path out_dir_for(const pshflow::BuiltProblem& bp, const CommonOpts& o) {
  fs::path dir = o.out_dir.empty() ? fs::path(bp.out_prefix) : fs::path(o.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_check(const CommonOpts& o) {
  pshflow::BuiltProblem bp = pshflow::load_config(o.config_path);
  pshflow::CheckReport rep = pshflow::run_identity_checks(
      bp.problem->omega(), bp.metric_is_kahler, bp.seed);
  pshflow::write_check_report(std::cout, rep);
  return rep.ok ? kExitOk : kExitInvariant;
}

int cmd_run(const CommonOpts& o) {
  pshflow::BuiltProblem bp = pshflow::load_config(o.config_path);
  const pshflow::FlowProblem& p = *bp.problem;
  fs::path dir = out_dir_for(bp, o);

  pshflow::EstimateReport est;
  pshflow::FlowState start(p.grid());
  start.dt = std::min(bp.control.dt_max, 1e-4);
  if (bp.control.fixed_dt) start.dt = bp.control.dt_max;
  if (!o.resume_path.empty())
    start = pshflow::load_checkpoint(o.resume_path, p.grid());
  else
    est.add(pshflow::measure(p, start));

  pshflow::RunOptions opts;
  opts.control = bp.control;
  opts.sample_every = bp.sample_every;
  long samples = 0;
  opts.callback = [&](const pshflow::FlowState& st, const pshflow::ScalarField&) {
    est.add(pshflow::measure(p, st));
    pshflow::save_checkpoint((dir / "latest.ckpt").string(), st);
    ++samples;
    if (o.verbose)
      std::cerr << "t = " << st.t << "  (" << samples << " samples)\n";
  };
  pshflow::RunResult res = pshflow::run_from(p, std::move(start), bp.t_end, opts);

  {
    std::ofstream csv(dir / "estimates.csv");
    est.write_csv(csv);
    std::ofstream js(dir / "summary.json");
    js << est.json_summary() << "\n";
    pshflow::save_checkpoint((dir / "final.ckpt").string(), res.state);
  }
  if (res.singular && !bp.expect_singular) {
    std::cerr << "flow: singular time reached at t = " << res.state.t << "\n";
    return kExitSingular;
  }
  if (o.verbose)
    std::cout << "finished at t = " << res.state.t
              << (res.converged ? " (converged, b = " + std::to_string(res.b) + ")" : "")
              << "\n";
  return kExitOk;
}

int cmd_maxtime(const CommonOpts& o) {
  pshflow::BuiltProblem bp = pshflow::load_config(o.config_path);
  fs::path dir = out_dir_for(bp, o);
  pshflow::MaxTimeQuery q;
  q.omega = &bp.problem->omega();
  q.omega0 = &bp.problem->omega0();
  q.chi = &bp.problem->chi();
  q.t_hi = bp.mt_t_hi;
  q.t_tol = bp.mt_t_tol;
  q.K = bp.mt_K;
  q.ascent_iters = bp.mt_ascent_iters;
  q.restarts = bp.mt_restarts;
  q.seed = bp.seed;
  std::string rep = pshflow::maxtime_report_json(
      q, bp.mt_run_flow ? bp.problem.get() : nullptr, bp.t_end,
      (dir / "certificate").string());
  std::ofstream js(dir / "maxtime.json");
  js << rep << "\n";
  std::cout << rep << "\n";
  return kExitOk;
}

int cmd_report(const CommonOpts& o) {
  pshflow::BuiltProblem bp = pshflow::load_config(o.config_path);
  fs::path dir = out_dir_for(bp, o);
  std::ifstream csv(dir / "estimates.csv");
  if (!csv)
    throw pshflow::ConfigError("report: cannot open " +
                               (dir / "estimates.csv").string());
  pshflow::EstimateReport est = pshflow::read_estimates_csv(csv);
  std::cout << est.json_summary() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and verification harness for a parabolic "
               "Monge-Ampere flow on flat complex tori"};
  app.require_subcommand(1);
  CommonOpts check_o, run_o, maxtime_o, report_o;
  auto* check = app.add_subcommand("check", "run the identity suites");
  add_common(check, check_o);
  auto* runc = app.add_subcommand("run", "integrate the flow with monitors");
  add_common(runc, run_o);
  auto* maxt = app.add_subcommand("maxtime", "estimate the maximal existence time");
  add_common(maxt, maxtime_o);
  auto* repc = app.add_subcommand("report", "summarize an estimates CSV");
  add_common(repc, report_o);

  CLI11_PARSE(app, argc, argv);
  try {
    if (check->parsed()) return cmd_check(check_o);
    if (runc->parsed()) return cmd_run(run_o);
    if (maxt->parsed()) return cmd_maxtime(maxtime_o);
    if (repc->parsed()) return cmd_report(report_o);
  } catch (const pshflow::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const pshflow::SingularTimeReached& e) {
    std::cerr << e.what() << "\n";
    return kExitSingular;
  } catch (const std::exception& e) {
    // invariant violations: Hermiticity, positivity, internal cross-checks
    std::cerr << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
