#pragma once

// The one dimensional wave equation -phi_tt + phi_xx = 0 on a sampled line:
// exact evolution by profile shifts, scattering fields and the two rigidity
// statements.

#include <functional>

#include "alfven/spectral.hpp"

namespace alfven::model1d {

/// Data (phi0, phi1) on x_i = -L/2 + i h, i < n. The profiles phi+ and phi-
/// are extended by their end values outside the sampled interval, so the
/// data should vanish near both ends.
struct Wave1D {
  double L = 0.0;
  int n = 0;
  RealArray x;
  RealArray phi0;
  RealArray phi1;
  /// Spectral derivative of phi0.
  RealArray dphi0;
  /// phi+' = (phi0' - phi1)/2 and phi-' = (phi0' + phi1)/2.
  RealArray dphi_plus;
  RealArray dphi_minus;
  /// phi = phi+(x - t) + phi-(x + t).
  RealArray phi_plus;
  RealArray phi_minus;

  static Wave1D from_samples(double L, RealArray phi0, RealArray phi1);
  static Wave1D from_functions(double L, int n, const std::function<double(double)>& phi0,
                               const std::function<double(double)>& phi1);

  double h() const { return L / n; }
};

/// Value of a sampled profile at an arbitrary y: exact on grid points,
/// cubic Lagrange in between, constant beyond the ends.
double sample_profile(const Wave1D& w, const RealArray& profile, double y);

/// phi(t, x_i) for every grid point.
RealArray dalembert_evolve(const Wave1D& w, double t);

/// Lbar phi = phi_t - phi_x and L phi = phi_t + phi_x at time t on the grid.
struct NullDerivatives {
  RealArray lbar;
  RealArray l;
};
NullDerivatives null_derivatives(const Wave1D& w, double t);

/// Scattering fields on the grid lattice. Both are constant along their
/// characteristics, so the future and past fields share the same values:
/// Lbar phi(+-inf; u) = phi1 - phi0' and L phi(+-inf; ubar) = phi1 + phi0'.
struct ScatteringFields1D {
  RealArray coord;
  RealArray lbar_future;
  RealArray l_future;
  RealArray lbar_past;
  RealArray l_past;
};
ScatteringFields1D scattering_1d(const Wave1D& w);

/// Traces of Lbar phi on x = u + t and of L phi on x = ubar - t at time t,
/// sampled at the lattice points u, ubar.
NullDerivatives characteristic_trace(const Wave1D& w, double t);

/// model1: Lbar phi at future infinity and L phi at future infinity.
/// model2: Lbar phi at future infinity and L phi at past infinity.
enum class RigidityModel { model1, model2 };

const char* to_string(RigidityModel m);

struct RigidityOutcome {
  /// Both supplied fields vanish to tol.
  bool fields_vanish = false;
  double max_field = 0.0;
  /// Max |phi| of the solution rebuilt from the fields, over the probe times.
  double max_reconstruction = 0.0;
  /// fields_vanish and the reconstruction vanishes to tol.
  bool holds = false;
};

/// Rebuilds the solution from the two fields (phi1 = (Lbar + L)/2,
/// phi0' = (L - Lbar)/2) and reports whether it vanishes.
RigidityOutcome rigidity_check_1d(double L, const RealArray& lbar, const RealArray& l, RigidityModel model,
                                  double tol = 1e-14);

/// Same, taking the fields the model asks for from `f`.
RigidityOutcome rigidity_check_1d(double L, const ScatteringFields1D& f, RigidityModel model, double tol = 1e-14);

} // namespace alfven::model1d
