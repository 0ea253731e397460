#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pshflow {

using cxd = std::complex<double>;

// Small Hermitian matrices per grid point; complex dimension is 2 or 3,
// so fixed-capacity dynamic matrices stay on the stack.
using SmallMat =
    Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using SmallVec = Eigen::Matrix<cxd, Eigen::Dynamic, 1, 0, 3, 1>;

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonHermitianError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMetricError : std::runtime_error {
  SingularMetricError(const std::string& what, std::size_t point, double eig)
      : std::runtime_error(what), point(point), eigenvalue(eig) {}
  std::size_t point;
  double eigenvalue;
};

// Thrown when the evolving metric loses positivity: the flow is approaching
// its singular time.
struct PositivityLost : std::runtime_error {
  PositivityLost(double t, std::size_t point, double eig)
      : std::runtime_error("positivity lost at t=" + std::to_string(t) +
                           ", grid point " + std::to_string(point) +
                           ", min eigenvalue " + std::to_string(eig)),
        t(t), point(point), eigenvalue(eig) {}
  double t;
  std::size_t point;
  double eigenvalue;
};

struct SingularTimeReached : std::runtime_error {
  explicit SingularTimeReached(double t)
      : std::runtime_error("singular time reached near t=" + std::to_string(t)),
        t(t) {}
  double t;
};

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(double t)
      : std::runtime_error("non-finite value at t=" + std::to_string(t)), t(t) {}
  double t;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A redundant internal cross-check (two independent formulas for the same
// quantity) disagreed beyond tolerance; indicates a bug, not bad input.
struct InternalCheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pshflow
