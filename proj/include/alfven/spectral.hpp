#pragma once

// Fourier-space vector calculus on the periodic box.
//
// Coefficients follow the real-to-complex layout: index (i1, i2, i3) with
// i3 in [0, n3/2], flattened as (i1 * n2 + i2) * (n3/2 + 1) + i3. The
// normalisation is f(x) = sum_k c_k exp(i k.(x - x0)) with x0 = -L/2 per axis,
// so a constant field has c_0 equal to that constant.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>

#include <Eigen/Core>

#include "alfven/grid.hpp"

namespace alfven {

using Complex = std::complex<double>;
using RealArray = Eigen::ArrayXd;
using ComplexArray = Eigen::ArrayXcd;
using Vec3 = Eigen::Vector3d;

/// Shared, immutable spectral context for one DomainSpec: wavenumber tables,
/// the 2/3 dealiasing mask and FFTW plans.
class SpectralGrid {
public:
  explicit SpectralGrid(const DomainSpec& domain);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  static std::shared_ptr<const SpectralGrid> make(const DomainSpec& domain);

  const DomainSpec& domain() const { return domain_; }
  int n(int axis) const { return domain_.n[axis]; }
  /// Number of stored x3 modes, n3/2 + 1.
  int nh() const { return domain_.n[2] / 2 + 1; }
  std::size_t physical_size() const { return domain_.size(); }
  std::size_t spectral_size() const { return std::size_t(n(0)) * n(1) * nh(); }
  std::size_t spectral_index(int i1, int i2, int i3) const {
    return (std::size_t(i1) * n(1) + i2) * nh() + i3;
  }

  /// Signed integer mode number of storage index i along an axis.
  int mode(int axis, int i) const;

  /// Derivative wavenumbers per spectral index (Nyquist entries are zero).
  const RealArray& k(int axis) const { return k_[axis]; }
  const RealArray& k2() const { return k2_; }
  /// 1/k^2, zero at k = 0.
  const RealArray& inv_k2() const { return inv_k2_; }
  /// 1 where every |m_i| <= n_i/3, 0 elsewhere.
  const RealArray& dealias_mask() const { return mask_; }
  /// Multiplicity of each stored coefficient in the full spectrum (1 or 2).
  const RealArray& parseval_weight() const { return weight_; }

  /// Forward transform, normalised by 1/N.
  void forward(const double* in, Complex* out) const;
  /// Inverse transform; the input is not modified.
  void inverse(const Complex* in, double* out) const;

private:
  DomainSpec domain_;
  std::array<RealArray, 3> k_;
  RealArray k2_;
  RealArray inv_k2_;
  RealArray mask_;
  RealArray weight_;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

struct RealScalarField {
  GridPtr grid;
  RealArray v;

  RealScalarField() = default;
  explicit RealScalarField(GridPtr g);
  RealScalarField(GridPtr g, RealArray values);
};

struct RealVectorField {
  GridPtr grid;
  std::array<RealArray, 3> c;

  RealVectorField() = default;
  explicit RealVectorField(GridPtr g);
  /// Ingest samples; throws InvalidData on NaN/Inf and ShapeMismatch on size.
  static RealVectorField from_samples(GridPtr g, std::array<RealArray, 3> samples);

  /// Pointwise Euclidean norm.
  RealArray magnitude() const;
  double max_magnitude() const;
};

struct SpectralScalarField {
  GridPtr grid;
  ComplexArray c;

  SpectralScalarField() = default;
  explicit SpectralScalarField(GridPtr g);
};

struct SpectralVectorField {
  GridPtr grid;
  std::array<ComplexArray, 3> c;

  SpectralVectorField() = default;
  explicit SpectralVectorField(GridPtr g);

  SpectralVectorField& operator+=(const SpectralVectorField& o);
  SpectralVectorField& operator-=(const SpectralVectorField& o);
  SpectralVectorField& operator*=(double s);
};

SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b);
SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b);
SpectralVectorField operator*(double s, SpectralVectorField a);

void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what);

SpectralScalarField transform(const RealScalarField& f);
SpectralVectorField transform(const RealVectorField& f);
RealScalarField inverse(const SpectralScalarField& f);
RealVectorField inverse(const SpectralVectorField& f);

/// Spectral partial derivative along an axis (0, 1, 2).
SpectralScalarField partial(const SpectralScalarField& f, int axis);
SpectralVectorField partial(const SpectralVectorField& f, int axis);
/// Mixed derivative d^alpha for a multi-index alpha.
SpectralVectorField partial(const SpectralVectorField& f, const std::array<int, 3>& alpha);

SpectralVectorField gradient(const SpectralScalarField& g);
SpectralScalarField divergence(const SpectralVectorField& f);
SpectralVectorField curl(const SpectralVectorField& f);
SpectralScalarField laplacian(const SpectralScalarField& g);

/// Removes the gradient part; leaves the k = 0 mode untouched.
SpectralVectorField leray_project(const SpectralVectorField& f);
void leray_project_in_place(SpectralVectorField& f);

/// Zeroes every coefficient with some |m_i| > n_i/3.
SpectralScalarField dealias(SpectralScalarField f);
SpectralVectorField dealias(SpectralVectorField f);

/// p solving -Lap p = d_i zm^j d_j zp^i with the source dealiased and the
/// k = 0 mode set to zero.
SpectralScalarField solve_pressure(const SpectralVectorField& zp, const SpectralVectorField& zm);

/// Dealiased pressure source d_i zm^j d_j zp^i.
SpectralScalarField pressure_source(const SpectralVectorField& zp, const SpectralVectorField& zm);

/// The field translated along x3: result(x) = f(x1, x2, x3 + s).
SpectralVectorField shift_x3(const SpectralVectorField& f, double s);

/// Band-limited (trigonometric) evaluation of f at grid column (i1, i2) and an
/// arbitrary x3.
Vec3 interpolate_x3(const SpectralVectorField& f, int i1, int i2, double x3);

/// Largest |c(-k) - conj c(k)| over the self-conjugate planes.
double hermitian_defect(const SpectralVectorField& f);
double hermitian_defect(const SpectralScalarField& f);

/// Max |div f| in physical space.
double max_divergence(const SpectralVectorField& f);

/// Integral of |f|^2 over the box evaluated from the coefficients.
double parseval_norm_squared(const SpectralVectorField& f);
/// Integral of |f|^2 over the box by grid quadrature.
double quadrature_norm_squared(const RealVectorField& f);

/// Max over the grid of the Euclidean norm.
double max_abs(const SpectralVectorField& f);

} // namespace alfven
