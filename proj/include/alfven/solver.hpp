#pragma once

#include <functional>
#include <limits>
#include <span>
#include <utility>

#include "alfven/state.hpp"

namespace alfven {

enum class Direction { forward, backward };

struct StepperConfig {
  double dt = 0.05;
  double cfl = 0.5;
  double t_end = 0.0;
  Direction direction = Direction::forward;
  int record_every = 1;
  /// max|z| above this multiple of the initial max aborts the run.
  double blowup_factor = 10.0;

  /// Throws RangeError on dt <= 0, cfl outside (0, 1] or record_every < 1.
  void validate() const;
};

/// Leray-projected advection terms P(z- . grad z+) and P(z+ . grad z-).
///
/// These equal grad p + z-.grad z+ and grad p + z+.grad z- respectively, i.e.
/// the integrands of the scattering formulas; the evolution reads
/// d_t z+ - d_3 z+ = -plus and d_t z- + d_3 z- = -minus.
struct NonlinearTerms {
  SpectralVectorField plus;
  SpectralVectorField minus;
  /// Pressure with zero mean, from -Lap p = d_i z-^j d_j z+^i.
  SpectralScalarField pressure;
  double max_z_plus = 0.0;
  double max_z_minus = 0.0;
};

NonlinearTerms nonlinear_terms(const SpectralVectorField& zp, const SpectralVectorField& zm);
inline NonlinearTerms nonlinear_terms(const ElsasserState& s) { return nonlinear_terms(s.z_plus, s.z_minus); }

/// Full right-hand sides (d_t z+, d_t z-) including the transport terms.
std::pair<SpectralVectorField, SpectralVectorField> compute_rhs(const ElsasserState& s);

/// Exact linear propagation over time h: z+(x3) -> z+(x3 + h), z-(x3) -> z-(x3 - h).
ElsasserState propagate_linear(const ElsasserState& s, double h);

/// One integrating-factor RK4 step of signed size h. `first_stage`, when
/// given, must be nonlinear_terms(s).
ElsasserState step(const ElsasserState& s, double h, const NonlinearTerms* first_stage = nullptr,
                   double amplitude_cap = std::numeric_limits<double>::infinity());

/// One step of size cfg.dt in cfg.direction.
ElsasserState step(const ElsasserState& s, const StepperConfig& cfg);

/// Snapshot handed to observers at every record point.
struct RecordPoint {
  const ElsasserState& state;
  const NonlinearTerms& nonlinear;
  long step_index;
  /// Signed time since the previous record point (the planned interval at step 0).
  double record_dt;
  /// True at the last record point of advance().
  bool is_final;
};

class Observer {
public:
  virtual ~Observer() = default;
  virtual void observe(const RecordPoint& rec) = 0;
};

/// Uniform signed step covering [s.t, cfg.t_end] with |h| <= min(dt, cfl h_min / (1 + max|z|)).
struct StepPlan {
  long steps = 0;
  double h = 0.0;
};
StepPlan plan_steps(const ElsasserState& s, const StepperConfig& cfg);

/// Runs to cfg.t_end, invoking observers at the initial state, every
/// record_every steps and at the final state.
ElsasserState advance(ElsasserState s, const StepperConfig& cfg, std::span<Observer* const> observers = {});

} // namespace alfven
