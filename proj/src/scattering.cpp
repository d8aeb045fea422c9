#include "alfven/scattering.hpp"

#include <cmath>
#include <string>

#include "alfven/diagnostics.hpp"
#include "alfven/errors.hpp"

namespace alfven {

const char* to_string(TimeDirection d) { return d == TimeDirection::future ? "future" : "past"; }

double ScatteringField::u_at(int i3) const {
  const DomainSpec& d = field.grid->domain();
  const double x3 = unwrap_x3(d, i3, wrap_count_near(d, i3, window_center));
  return characteristic_coord(transport_family(species), t_origin, x3);
}

RealArray ScatteringField::lattice_weights(double power) const {
  const int n3 = field.grid->n(2);
  const Family fam = transport_family(species);
  RealArray w(n3);
  for (int i3 = 0; i3 < n3; ++i3) w[i3] = weight_value(u_at(i3), fam, weights, power);
  return w;
}

double scattering_norm(const ScatteringField& f, int k) {
  const RealArray w = f.lattice_weights(2.0 * f.weights.omega);
  double total = 0.0;
  for (const auto& alpha : multi_indices(k)) {
    total += multinomial(alpha) * weighted_quadrature(inverse(partial(f.field, alpha)), w);
  }
  return total;
}

double weighted_distance(const ScatteringField& a, const SpectralVectorField& b) {
  const RealArray w = a.lattice_weights(2.0 * a.weights.omega);
  return std::sqrt(weighted_quadrature(inverse(a.field - b), w));
}

// ---------------------------------------------------------------------------

ScatteringAccumulator::ScatteringAccumulator(Species sp, double checkpoint_every, std::size_t max_checkpoints)
    : species_(sp), checkpoint_every_(checkpoint_every), max_checkpoints_(max_checkpoints) {
  if (!(checkpoint_every > 0.0)) throw RangeError("scattering: checkpoint interval must be positive");
  if (max_checkpoints < 1) throw RangeError("scattering: need room for at least one checkpoint");
}

void ScatteringAccumulator::observe(const RecordPoint& rec) { add_sample(rec.state, rec.nonlinear); }

SpectralVectorField ScatteringAccumulator::sample(const ElsasserState& s, const NonlinearTerms& n) const {
  const SpectralVectorField& integrand = species_ == Species::plus ? n.plus : n.minus;
  // Line through lattice point xi: x3 = xi + sign (tau - t0).
  return shift_x3(integrand, propagation_sign(species_) * (s.t - t0_));
}

void ScatteringAccumulator::add_sample(const ElsasserState& s, const NonlinearTerms& n) {
  if (!started_) {
    t0_ = s.t;
    window_center_ = s.guard.window_center(species_, s.t);
    weights_ = s.weights;
    initial_ = s.z(species_);
    integral_ = SpectralVectorField(s.grid());
    last_integrand_ = sample(s, n);
    t_last_ = s.t;
    started_ = true;
    checkpoints_.push_back({s.t, integral_});
    next_checkpoint_ = checkpoint_every_;
    return;
  }
  SpectralVectorField cur = sample(s, n);
  const double dt = s.t - t_last_;
  for (int a = 0; a < 3; ++a) integral_.c[a] += (0.5 * dt) * (last_integrand_.c[a] + cur.c[a]);
  last_integrand_ = std::move(cur);
  t_last_ = s.t;
  if (std::abs(s.t - t0_) >= next_checkpoint_ - 1e-9 * checkpoint_every_) {
    checkpoints_.push_back({s.t, integral_});
    if (checkpoints_.size() > max_checkpoints_) checkpoints_.pop_front();
    while (next_checkpoint_ <= std::abs(s.t - t0_) + 1e-9 * checkpoint_every_) next_checkpoint_ += checkpoint_every_;
  }
}

double ScatteringAccumulator::last_integrand_max() const {
  if (!started_) return 0.0;
  return max_abs(last_integrand_);
}

ScatteringField ScatteringAccumulator::field() const {
  if (!started_) throw InsufficientHistory("scattering: no samples recorded");
  ScatteringField f;
  f.species = species_;
  f.direction = t_last_ >= t0_ ? TimeDirection::future : TimeDirection::past;
  f.field = initial_ - integral_;
  f.t_origin = t0_;
  f.window_center = window_center_;
  f.weights = weights_;
  f.t_end = t_last_;
  return f;
}

double ScatteringAccumulator::lattice_distance(const SpectralVectorField& a, const SpectralVectorField& b) const {
  ScatteringField f;
  f.species = species_;
  f.field = a;
  f.t_origin = t0_;
  f.window_center = window_center_;
  f.weights = weights_;
  return weighted_distance(f, b);
}

double trace_identity_check(const ScatteringAccumulator& acc, const ElsasserState& s_at_T) {
  const ScatteringField f = acc.field();
  const double sign = propagation_sign(acc.species());
  const SpectralVectorField trace = shift_x3(s_at_T.z(acc.species()), sign * (s_at_T.t - acc.t_origin()));
  return max_abs(f.field - trace);
}

double convergence_tail(const ScatteringAccumulator& acc, double window) {
  if (!acc.started()) throw InsufficientHistory("scattering: no samples recorded");
  const ScatteringAccumulator::Checkpoint* best = nullptr;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& cp : acc.checkpoints()) {
    const double age = std::abs(acc.last_time() - cp.t);
    if (age <= 0.0) continue;
    const double gap = std::abs(age - window);
    if (gap < best_gap) {
      best_gap = gap;
      best = &cp;
    }
  }
  if (!best) {
    throw InsufficientHistory("scattering: need a checkpoint earlier than t = " + std::to_string(acc.last_time()));
  }
  return acc.lattice_distance(acc.integral(), best->integral);
}

} // namespace alfven
