#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "pshflow/core.hpp"

namespace pshflow {

// Periodic grid on the torus C^n / (Z^n + i Z^n), optionally with anisotropic
// periods. Real coordinates are ordered (x^1, y^1, ..., x^n, y^n) so that
// z^j = x^j + i y^j; fields are stored row-major over these 2n axes (last
// axis fastest). All spectral transforms go through the plans owned here.
class Grid {
 public:
  Grid(int n, int N, std::array<double, 3> periods = {1.0, 1.0, 1.0},
       bool dealias = false);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int n() const { return n_; }
  int N() const { return N_; }
  int real_axes() const { return 2 * n_; }
  std::size_t npts() const { return npts_; }
  double period(int complex_axis) const { return periods_[complex_axis]; }
  bool dealias() const { return dealias_; }
  void set_dealias(bool on) { dealias_ = on; }

  // Index of point p along real axis a (0 <= a < 2n).
  int axis_index(std::size_t p, int a) const {
    return static_cast<int>((p / strides_[a]) % static_cast<std::size_t>(N_));
  }
  // Coordinate along real axis a.
  double coord(std::size_t p, int a) const {
    return periods_[a / 2] * axis_index(p, a) / N_;
  }
  // Signed integer mode along axis a for spectral index m; the Nyquist mode
  // is mapped to 0 so odd-order derivative symbols stay skew.
  int mode(int m) const {
    if (2 * m < N_) return m;
    if (2 * m == N_) return 0;
    return m - N_;
  }
  // Angular wavenumber 2*pi*k/period along real axis a.
  double wavenumber(int a, int m) const {
    return 2.0 * M_PI * mode(m) / periods_[a / 2];
  }

  // Unnormalized forward DFT and normalized inverse.
  void forward(const cxd* in, cxd* out) const;
  void backward(const cxd* in, cxd* out) const;

 private:
  int n_, N_;
  std::array<double, 3> periods_;
  bool dealias_;
  std::size_t npts_;
  std::array<std::size_t, 6> strides_{};
  void* plan_fwd_ = nullptr;  // fftw_plan
  void* plan_bwd_ = nullptr;
};

// Scalar field with point values and a lazily cached spectrum.
class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, cxd fill = cxd(0.0, 0.0));

  const Grid& grid() const { return *grid_; }
  std::size_t size() const { return values_.size(); }

  const std::vector<cxd>& values() const { return values_; }
  std::vector<cxd>& values_mut() {
    spectrum_valid_ = false;
    return values_;
  }
  cxd operator[](std::size_t p) const { return values_[p]; }

  const std::vector<cxd>& spectrum() const;
  void set_spectrum(std::vector<cxd> spec);

  bool is_real(double tol = 1e-12) const;
  ScalarField real_part() const;

 private:
  const Grid* grid_;
  std::vector<cxd> values_;
  mutable std::vector<cxd> spectrum_;
  mutable bool spectrum_valid_ = false;
};

// Holomorphic / antiholomorphic spectral derivative of the trigonometric
// interpolant: d_j = (d/dx^j - i d/dy^j)/2, d_jbar = (d/dx^j + i d/dy^j)/2.
ScalarField spectral_partial(const ScalarField& f, int j, bool conjugate);

// Mixed second derivative d_a d_bbar f in one spectral pass.
ScalarField spectral_partial2(const ScalarField& f, int a, int b);

// Pointwise helpers.
ScalarField make_field(const Grid& grid,
                       const std::function<cxd(const std::array<double, 6>&)>& fn);
double sup_abs(const ScalarField& f);
double max_imag_abs(const ScalarField& f);
cxd mean(const ScalarField& f);
double mean_sq_abs(const ScalarField& f);

}  // namespace pshflow
