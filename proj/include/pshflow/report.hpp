#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pshflow/estimates.hpp"

namespace pshflow {

struct CheckItem {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool ok = true;

  void add(const std::string& name, double residual, double threshold) {
    items.push_back({name, residual, threshold, residual <= threshold});
    ok = ok && residual <= threshold;
  }
};

// Differential-geometry and form-algebra identity suite at the configured
// resolution: curvature formula agreement, commutation relations, Hodge-star
// and wedge against the brute-force exterior-algebra engine, determinant and
// root identities. kahler_expected additionally checks vanishing torsion.
CheckReport run_identity_checks(const MetricField& metric,
                                bool kahler_expected, unsigned seed);

void write_check_report(std::ostream& os, const CheckReport& rep);

// Inverse of EstimateReport::write_csv.
EstimateReport read_estimates_csv(std::istream& is);

}  // namespace pshflow
