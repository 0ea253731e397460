#include "pshflow/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <functional>

namespace pshflow {

namespace {
bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

Grid::Grid(int n, int N, std::array<double, 3> periods, bool dealias)
    : n_(n), N_(N), periods_(periods), dealias_(dealias) {
  if (n < 2 || n > 3)
    throw DimensionError("complex dimension must be 2 or 3, got " +
                         std::to_string(n));
  if (!is_power_of_two(N))
    throw DimensionError("points per axis must be a power of two, got " +
                         std::to_string(N));
  for (int j = 0; j < n; ++j)
    if (!(periods_[j] > 0.0))
      throw DimensionError("periods must be positive");

  npts_ = 1;
  for (int a = 0; a < 2 * n_; ++a) npts_ *= static_cast<std::size_t>(N_);
  std::size_t s = 1;
  for (int a = 2 * n_ - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= static_cast<std::size_t>(N_);
  }

  std::vector<int> dims(2 * n_, N_);
  std::vector<cxd> scratch(npts_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  plan_fwd_ = fftw_plan_dft(2 * n_, dims.data(), buf, buf, FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft(2 * n_, dims.data(), buf, buf, FFTW_BACKWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Grid::~Grid() {
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void Grid::forward(const cxd* in, cxd* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<cxd*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void Grid::backward(const cxd* in, cxd* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<cxd*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double inv = 1.0 / static_cast<double>(npts_);
  for (std::size_t p = 0; p < npts_; ++p) out[p] *= inv;
}

ScalarField::ScalarField(const Grid& grid, cxd fill)
    : grid_(&grid), values_(grid.npts(), fill) {}

const std::vector<cxd>& ScalarField::spectrum() const {
  if (!spectrum_valid_) {
    spectrum_.resize(values_.size());
    grid_->forward(values_.data(), spectrum_.data());
    spectrum_valid_ = true;
  }
  return spectrum_;
}

void ScalarField::set_spectrum(std::vector<cxd> spec) {
  spectrum_ = std::move(spec);
  spectrum_valid_ = true;
  values_.resize(spectrum_.size());
  grid_->backward(spectrum_.data(), values_.data());
}

bool ScalarField::is_real(double tol) const {
  return max_imag_abs(*this) <= tol;
}

ScalarField ScalarField::real_part() const {
  ScalarField out(*grid_);
  auto& v = out.values_mut();
  for (std::size_t p = 0; p < values_.size(); ++p) v[p] = values_[p].real();
  return out;
}

namespace {

// Symbol of d_j (conjugate=false) or d_jbar (conjugate=true) at spectral
// index p. kx, ky are the angular wavenumbers of the two real axes of z^j.
inline cxd partial_symbol(double kx, double ky, bool conjugate) {
  // d_j e^{i(kx x + ky y)} = (i kx + ky)/2 * e^{...};  d_jbar flips ky.
  return conjugate ? cxd(-ky / 2.0, kx / 2.0) : cxd(ky / 2.0, kx / 2.0);
}

// Applies op(spectral index) -> multiplier to the spectrum of f.
ScalarField apply_symbol(const ScalarField& f,
                         const std::function<cxd(std::size_t)>& sym) {
  const Grid& g = f.grid();
  const auto& spec = f.spectrum();
  std::vector<cxd> out(spec.size());
  const int limit = g.N() / 3;  // 2/3-rule in symmetric-mode units
  for (std::size_t p = 0; p < spec.size(); ++p) {
    cxd m = sym(p);
    if (g.dealias()) {
      for (int a = 0; a < g.real_axes(); ++a) {
        if (std::abs(g.mode(g.axis_index(p, a))) > limit) {
          m = 0.0;
          break;
        }
      }
    }
    out[p] = spec[p] * m;
  }
  ScalarField r(g);
  r.set_spectrum(std::move(out));
  return r;
}

}  // namespace

ScalarField spectral_partial(const ScalarField& f, int j, bool conjugate) {
  const Grid& g = f.grid();
  if (j < 0 || j >= g.n())
    throw DimensionError("spectral_partial: coordinate index out of range");
  return apply_symbol(f, [&](std::size_t p) {
    const double kx = g.wavenumber(2 * j, g.axis_index(p, 2 * j));
    const double ky = g.wavenumber(2 * j + 1, g.axis_index(p, 2 * j + 1));
    return partial_symbol(kx, ky, conjugate);
  });
}

ScalarField spectral_partial2(const ScalarField& f, int a, int b) {
  const Grid& g = f.grid();
  if (a < 0 || a >= g.n() || b < 0 || b >= g.n())
    throw DimensionError("spectral_partial2: coordinate index out of range");
  return apply_symbol(f, [&](std::size_t p) {
    const double kxa = g.wavenumber(2 * a, g.axis_index(p, 2 * a));
    const double kya = g.wavenumber(2 * a + 1, g.axis_index(p, 2 * a + 1));
    const double kxb = g.wavenumber(2 * b, g.axis_index(p, 2 * b));
    const double kyb = g.wavenumber(2 * b + 1, g.axis_index(p, 2 * b + 1));
    return partial_symbol(kxa, kya, false) * partial_symbol(kxb, kyb, true);
  });
}

ScalarField make_field(const Grid& grid,
                       const std::function<cxd(const std::array<double, 6>&)>& fn) {
  ScalarField f(grid);
  auto& v = f.values_mut();
  std::array<double, 6> x{};
  for (std::size_t p = 0; p < grid.npts(); ++p) {
    for (int a = 0; a < grid.real_axes(); ++a) x[a] = grid.coord(p, a);
    v[p] = fn(x);
  }
  return f;
}

double sup_abs(const ScalarField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_imag_abs(const ScalarField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v.imag()));
  return m;
}

cxd mean(const ScalarField& f) {
  cxd s = 0.0;
  for (const auto& v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

double mean_sq_abs(const ScalarField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s / static_cast<double>(f.size());
}

}  // namespace pshflow
