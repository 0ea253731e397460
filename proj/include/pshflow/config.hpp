#pragma once

#include <memory>
#include <string>

#include "pshflow/flow.hpp"
#include "pshflow/maxtime.hpp"

namespace pshflow {

// A config file fully determines a problem instance. Geometry, metric
// recipes (closed-form trigonometric expressions), problem data, integrator
// tolerances and monitor cadence are all key-value JSON with unknown keys
// rejected; see README for the grammar.
struct BuiltProblem {
  std::unique_ptr<Grid> grid;
  std::unique_ptr<FlowProblem> problem;
  StepControl control;
  double t_end = 1.0;
  long sample_every = 10;
  bool expect_singular = false;
  bool metric_is_kahler = false;
  std::string out_prefix = "out";
  unsigned seed = 12345;
  // maxtime query parameters (the field pointers are wired by the caller)
  double mt_t_hi = 1.0;
  double mt_t_tol = 1e-2;
  int mt_K = 2;
  int mt_ascent_iters = 100;
  int mt_restarts = 2;
  bool mt_run_flow = false;
};

// Parses and validates a config document; throws ConfigError with a
// field-precise message on any problem, including unknown keys.
BuiltProblem build_problem_from_json(const std::string& text);
BuiltProblem load_config(const std::string& path);

}  // namespace pshflow
