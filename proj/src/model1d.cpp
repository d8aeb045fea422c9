#include "alfven/model1d.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "alfven/errors.hpp"

namespace alfven::model1d {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Periodic spectral derivative on [-L/2, L/2), Nyquist mode dropped.
RealArray spectral_derivative(const RealArray& f, double L) {
  const int n = static_cast<int>(f.size());
  const int nh = n / 2 + 1;
  std::vector<double> in(f.data(), f.data() + n);
  std::vector<Complex> spec(nh);
  std::vector<double> out(n);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(plan_mutex());
    fwd = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (int m = 0; m < nh; ++m) {
    const double k = (2 * m == n) ? 0.0 : 2.0 * std::numbers::pi * m / L;
    spec[m] *= Complex(0.0, k) / static_cast<double>(n);
  }
  fftw_execute(inv);
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  return Eigen::Map<RealArray>(out.data(), n);
}

// Trapezoid antiderivative starting at zero on the left end.
RealArray cumulative(const RealArray& f, double h) {
  RealArray F(f.size());
  F[0] = 0.0;
  for (Eigen::Index i = 1; i < f.size(); ++i) F[i] = F[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return F;
}

} // namespace

Wave1D Wave1D::from_samples(double L, RealArray phi0, RealArray phi1) {
  if (!(L > 0.0)) throw RangeError("model1d: L must be positive");
  if (phi0.size() != phi1.size()) throw ShapeMismatch("model1d: phi0 and phi1 differ in length");
  if (phi0.size() < 8 || phi0.size() % 2 != 0) throw RangeError("model1d: need an even sample count >= 8");
  if (!phi0.isFinite().all() || !phi1.isFinite().all()) throw InvalidData("model1d: non-finite samples");
  Wave1D w;
  w.L = L;
  w.n = static_cast<int>(phi0.size());
  const double h = w.h();
  w.x = RealArray::LinSpaced(w.n, -0.5 * L, -0.5 * L + (w.n - 1) * h);
  w.phi0 = std::move(phi0);
  w.phi1 = std::move(phi1);
  w.dphi0 = spectral_derivative(w.phi0, L);
  w.dphi_plus = 0.5 * (w.dphi0 - w.phi1);
  w.dphi_minus = 0.5 * (w.dphi0 + w.phi1);
  const RealArray Phi1 = cumulative(w.phi1, h);
  w.phi_plus = 0.5 * (w.phi0 - Phi1);
  w.phi_minus = 0.5 * (w.phi0 + Phi1);
  return w;
}

Wave1D Wave1D::from_functions(double L, int n, const std::function<double(double)>& phi0,
                              const std::function<double(double)>& phi1) {
  RealArray a(n), b(n);
  const double h = L / n;
  for (int i = 0; i < n; ++i) {
    const double x = -0.5 * L + i * h;
    a[i] = phi0(x);
    b[i] = phi1(x);
  }
  return from_samples(L, std::move(a), std::move(b));
}

double sample_profile(const Wave1D& w, const RealArray& profile, double y) {
  const double r = (y + 0.5 * w.L) / w.h();
  const double nearest = std::round(r);
  auto at = [&](long i) { return profile[std::clamp<long>(i, 0, w.n - 1)]; };
  if (std::abs(r - nearest) < 1e-9) return at(static_cast<long>(nearest));
  const long i0 = static_cast<long>(std::floor(r));
  const double s = r - static_cast<double>(i0);
  // Cubic Lagrange through i0-1 .. i0+2.
  const double c0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
  const double c1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  const double c2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
  const double c3 = (s + 1.0) * s * (s - 1.0) / 6.0;
  return c0 * at(i0 - 1) + c1 * at(i0) + c2 * at(i0 + 1) + c3 * at(i0 + 2);
}

RealArray dalembert_evolve(const Wave1D& w, double t) {
  RealArray out(w.n);
  for (int i = 0; i < w.n; ++i) {
    out[i] = sample_profile(w, w.phi_plus, w.x[i] - t) + sample_profile(w, w.phi_minus, w.x[i] + t);
  }
  return out;
}

NullDerivatives null_derivatives(const Wave1D& w, double t) {
  // phi_t - phi_x = -2 phi+'(x - t), phi_t + phi_x = 2 phi-'(x + t).
  NullDerivatives out{RealArray(w.n), RealArray(w.n)};
  for (int i = 0; i < w.n; ++i) {
    out.lbar[i] = -2.0 * sample_profile(w, w.dphi_plus, w.x[i] - t);
    out.l[i] = 2.0 * sample_profile(w, w.dphi_minus, w.x[i] + t);
  }
  return out;
}

ScatteringFields1D scattering_1d(const Wave1D& w) {
  ScatteringFields1D f;
  f.coord = w.x;
  f.lbar_future = w.phi1 - w.dphi0;
  f.l_future = w.phi1 + w.dphi0;
  f.lbar_past = f.lbar_future;
  f.l_past = f.l_future;
  return f;
}

NullDerivatives characteristic_trace(const Wave1D& w, double t) {
  NullDerivatives out{RealArray(w.n), RealArray(w.n)};
  for (int i = 0; i < w.n; ++i) {
    // Lbar phi(t, u + t) and L phi(t, ubar - t).
    out.lbar[i] = -2.0 * sample_profile(w, w.dphi_plus, (w.x[i] + t) - t);
    out.l[i] = 2.0 * sample_profile(w, w.dphi_minus, (w.x[i] - t) + t);
  }
  return out;
}

const char* to_string(RigidityModel m) { return m == RigidityModel::model1 ? "model1" : "model2"; }

RigidityOutcome rigidity_check_1d(double L, const RealArray& lbar, const RealArray& l, RigidityModel,
                                  double tol) {
  if (lbar.size() != l.size()) throw ShapeMismatch("model1d: scattering fields differ in length");
  RigidityOutcome out;
  out.max_field = std::max(lbar.abs().maxCoeff(), l.abs().maxCoeff());
  out.fields_vanish = out.max_field <= tol;
  const RealArray phi1 = 0.5 * (lbar + l);
  const RealArray dphi0 = 0.5 * (l - lbar);
  const RealArray phi0 = cumulative(dphi0, L / static_cast<double>(lbar.size()));
  const Wave1D w = Wave1D::from_samples(L, phi0, phi1);
  for (double t : {0.0, 0.125 * L, -0.125 * L, 0.25 * L}) {
    out.max_reconstruction = std::max(out.max_reconstruction, dalembert_evolve(w, t).abs().maxCoeff());
  }
  out.holds = out.fields_vanish && out.max_reconstruction <= tol;
  return out;
}

RigidityOutcome rigidity_check_1d(double L, const ScatteringFields1D& f, RigidityModel model, double tol) {
  const RealArray& l = model == RigidityModel::model1 ? f.l_future : f.l_past;
  return rigidity_check_1d(L, f.lbar_future, l, model, tol);
}

} // namespace alfven::model1d
