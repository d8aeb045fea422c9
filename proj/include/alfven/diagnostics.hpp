#pragma once

// Weighted energy and flux norms, conserved quantities and the decay ratios
// sampled along a run.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "alfven/solver.hpp"
#include "alfven/state.hpp"

namespace alfven {

/// All multi-indices alpha with |alpha| = k, in lexicographic order.
std::vector<std::array<int, 3>> multi_indices(int k);

/// k! / (a1! a2! a3!): how often d^alpha appears in the full tensor grad^k.
double multinomial(const std::array<int, 3>& alpha);

/// x3-dependent weight <u>^power for species s at time t, one value per x3
/// grid index. z+ uses <u->, z- uses <u+>; x3 is taken on the image of the
/// grid inside the species' window.
RealArray x3_weights(const ElsasserState& s, Species sp, double power);

/// Integral of w(x3) |f|^2 over the box.
double weighted_quadrature(const RealVectorField& f, const RealArray& w3);

/// E(t) = int <u>^{2 omega} |z|^2 for one species.
double energy_norm(const ElsasserState& s, Species sp);

/// E^k(t) = sum over |alpha| = k of int <u>^{2 omega} |curl d^alpha z|^2.
double higher_energy_norm(const ElsasserState& s, Species sp, int k);

/// Weighted data norm sum_{k <= k_max} int <u>^{2 omega} |grad^k z|^2 with the
/// full derivative tensor.
double data_norm(const ElsasserState& s, Species sp, int k_max);

/// Running flux F(t, u) through the characteristic surfaces x3 = u + tau
/// (z+) or x3 = u - tau (z-), with surface measure sqrt(2) dx1 dx2 dtau.
class FluxAccumulator : public Observer {
public:
  /// u lattice u_j = u_start + j * spacing, j < count. The spacing must equal
  /// the grid's h3 when samples are added.
  FluxAccumulator(Species sp, double u_start, double spacing, std::size_t count);

  /// Default lattice: every surface that meets the species' window during
  /// [t0, t_end], widened by `margin` on both sides.
  static FluxAccumulator covering(const ElsasserState& s, Species sp, double t_end, double margin);

  void observe(const RecordPoint& rec) override;
  void add_sample(const ElsasserState& s);

  Species species() const { return species_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& values() const { return values_; }
  /// sup over the lattice.
  double sup() const;
  double last_time() const { return last_t_; }

private:
  Species species_;
  std::vector<double> u_;
  std::vector<double> values_;
  std::vector<double> last_integrand_;
  double last_t_ = 0.0;
  bool started_ = false;
};

/// max over the grid of |z+||z-| (1 + |t + a|)^omega.
double separation_ratio(const ElsasserState& s);

/// Max |grad p| and max |grad^2 p| (Frobenius), each times (1 + |t + a|)^omega.
struct PressureRatios {
  double l1 = 0.0;
  double l2 = 0.0;
  double max_grad = 0.0;
  double max_hessian = 0.0;
};
PressureRatios pressure_decay_ratio(const ElsasserState& s);
PressureRatios pressure_decay_ratio(const ElsasserState& s, const SpectralScalarField& p);

struct Conserved {
  double energy = 0.0;
  double cross_helicity = 0.0;
};
Conserved conserved_quantities(const ElsasserState& s);

/// Pieces of the weighted div-curl inequality int l|grad v|^2 <~ int l|curl v|^2 + int l|v|^2.
struct DivCurlParts {
  double gradient = 0.0;
  double curl = 0.0;
  double mass = 0.0;
  double lhs() const { return gradient; }
  double rhs() const { return curl + mass; }
};
/// `lambda` holds one weight per x3 grid index.
DivCurlParts divcurl_check(const SpectralVectorField& f, const RealArray& lambda);

/// max |<u>^omega z|^2 divided by the weighted L2 norm of z plus the weighted
/// vorticity norms of order 0 and 1. Zero for a zero field.
double sobolev_check(const ElsasserState& s, Species sp);

struct NormSample {
  double t = 0.0;
  std::array<double, 2> E{};
  /// Ek[k][species]
  std::vector<std::array<double, 2>> Ek;
  std::array<double, 2> F{};
  double energy = 0.0;
  double cross_helicity = 0.0;
  double sep_ratio = 0.0;
  double p1_ratio = 0.0;
  double p2_ratio = 0.0;
  /// Not written to the CSV.
  double max_divergence = 0.0;
  double max_grad_p = 0.0;
};

/// Every field of a NormSample computable from one state; the fluxes, which
/// need the history, are NaN. The pressure is recomputed when not given.
NormSample snapshot_norms(const ElsasserState& s, int k_max, const SpectralScalarField* pressure = nullptr);

struct NormSeries {
  int k_max = 2;
  std::vector<NormSample> samples;
};

inline std::size_t species_index(Species s) { return s == Species::plus ? 0 : 1; }

/// Records a NormSample every `diag_every` record points and at the final
/// one, and keeps both flux accumulators.
class NormObserver : public Observer {
public:
  NormObserver(const ElsasserState& initial, double t_end, int k_max = 2, int diag_every = 1,
               std::optional<double> u_margin = std::nullopt);

  void observe(const RecordPoint& rec) override;

  const NormSeries& series() const { return series_; }
  const FluxAccumulator& flux(Species s) const { return flux_[species_index(s)]; }
  /// Largest max|div z| seen at any record point, sampled or not.
  double max_divergence() const { return max_div_; }

private:
  NormSample sample(const ElsasserState& s, const NonlinearTerms& n) const;

  int k_max_;
  int diag_every_;
  long seen_ = 0;
  double max_div_ = 0.0;
  std::array<FluxAccumulator, 2> flux_;
  NormSeries series_;
};

/// sup_t of the per-species total E + F + sum_k E^k divided by its initial value.
double main_estimate_constant(const NormSeries& s, Species sp);

} // namespace alfven
