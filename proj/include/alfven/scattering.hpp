#pragma once

// Scattering fields: the initial data minus the nonlinearity integrated along
// characteristic lines, stored on the (x1, x2, u) lattice of the grid.

#include <cstddef>
#include <deque>
#include <limits>
#include <optional>

#include "alfven/solver.hpp"
#include "alfven/state.hpp"

namespace alfven {

enum class TimeDirection { future, past };

const char* to_string(TimeDirection d);

/// z+ lives on (x1, x2, u-) and z- on (x1, x2, u+). Lattice index i3 carries
/// the x3 value of the line at t_origin, taken in the species' window there.
struct ScatteringField {
  Species species = Species::plus;
  TimeDirection direction = TimeDirection::future;
  SpectralVectorField field;
  double t_origin = 0.0;
  double window_center = 0.0;
  WeightParams weights;
  /// Time at which the integral was truncated.
  double t_end = 0.0;
  double tail = std::numeric_limits<double>::quiet_NaN();

  /// Characteristic coordinate of lattice index i3.
  double u_at(int i3) const;
  /// <u>^power per lattice index i3.
  RealArray lattice_weights(double power) const;
};

/// sum over the full tensor grad^k of int <u>^{2 omega} |grad^k f|^2 dx1 dx2 du.
double scattering_norm(const ScatteringField& f, int k);

/// sqrt(int <u>^{2 omega} |a - b|^2) on the lattice of `a`.
double weighted_distance(const ScatteringField& a, const SpectralVectorField& b);

/// Integrates P(z-.grad z+) along x3 = u- - tau (or P(z+.grad z-) along
/// x3 = u+ + tau) with the trapezoid rule over record points.
class ScatteringAccumulator : public Observer {
public:
  struct Checkpoint {
    double t;
    SpectralVectorField integral;
  };

  /// Snapshots of the running integral are kept every `checkpoint_every`
  /// time units, at most `max_checkpoints` of them (oldest dropped).
  explicit ScatteringAccumulator(Species sp, double checkpoint_every = 1.0, std::size_t max_checkpoints = 8);

  void observe(const RecordPoint& rec) override;
  void add_sample(const ElsasserState& s, const NonlinearTerms& n);

  bool started() const { return started_; }
  Species species() const { return species_; }
  double t_origin() const { return t0_; }
  double last_time() const { return t_last_; }
  const SpectralVectorField& initial() const { return initial_; }
  const SpectralVectorField& integral() const { return integral_; }
  /// Max |integrand| at the last sample.
  double last_integrand_max() const;
  const std::deque<Checkpoint>& checkpoints() const { return checkpoints_; }

  /// initial - integral, truncated at the last sample.
  ScatteringField field() const;
  /// Weighted distance between integrals a and b on this lattice.
  double lattice_distance(const SpectralVectorField& a, const SpectralVectorField& b) const;

private:
  SpectralVectorField sample(const ElsasserState& s, const NonlinearTerms& n) const;

  Species species_;
  double checkpoint_every_;
  std::size_t max_checkpoints_;
  bool started_ = false;
  double t0_ = 0.0;
  double t_last_ = 0.0;
  double window_center_ = 0.0;
  double next_checkpoint_ = 0.0;
  WeightParams weights_;
  SpectralVectorField initial_;
  SpectralVectorField integral_;
  SpectralVectorField last_integrand_;
  std::deque<Checkpoint> checkpoints_;
};

/// max over the lattice of |(initial - integral) - z(T) on the moving line|.
double trace_identity_check(const ScatteringAccumulator& acc, const ElsasserState& s_at_T);

/// Weighted distance between the running integral at its last sample and the
/// checkpoint closest to `window` time units earlier. Throws
/// InsufficientHistory without an earlier checkpoint.
double convergence_tail(const ScatteringAccumulator& acc, double window);

} // namespace alfven
