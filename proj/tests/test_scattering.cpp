#include <cmath>
#include <vector>

#include <doctest.h>

#include "alfven/diagnostics.hpp"
#include "alfven/errors.hpp"
#include "alfven/scattering.hpp"
#include "helpers.hpp"

using namespace alfven;
using namespace testing;

namespace {

StepperConfig to(double t_end, double dt) {
  StepperConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.direction = t_end >= 0.0 ? Direction::forward : Direction::backward;
  return c;
}

struct Run {
  ElsasserState end;
  ScatteringAccumulator plus{Species::plus};
  ScatteringAccumulator minus{Species::minus};
};

Run run(const ElsasserState& s, double t_end, double dt) {
  Run r;
  std::vector<Observer*> obs{&r.plus, &r.minus};
  r.end = advance(s, to(t_end, dt), obs);
  return r;
}

// Separation run length for the +-8 packets with sigma3 = 1.6.
constexpr double T_sep = 15.68;

} // namespace

TEST_CASE("one species: the scattering field is the initial data") {
  const ElsasserState s = small_collision(0.1, 0.0);
  const Run r = run(s, 6.0, 0.2);
  const ScatteringField f = r.plus.field();
  CHECK(f.direction == TimeDirection::future);
  CHECK(f.t_end == doctest::Approx(6.0));
  CHECK(max_abs(f.field - s.z_plus) == 0.0);
  CHECK(weighted_distance(f, s.z_plus) <= 1e-10);
  CHECK(trace_identity_check(r.plus, r.end) <= 1e-10);
  CHECK(scattering_norm(f, 0) == doctest::Approx(energy_norm(s, Species::plus)).epsilon(1e-8));
  CHECK(scattering_norm(f, 1) == doctest::Approx(data_norm(s, Species::plus, 1) - data_norm(s, Species::plus, 0)).epsilon(1e-8));
  CHECK(convergence_tail(r.plus, 1.0) == 0.0);
  CHECK(r.plus.last_integrand_max() == 0.0);
}

TEST_CASE("past fields come from a backward run") {
  ElsasserState s(box(16, 16, 64, 16.0, 16.0, 32.0));
  PacketSpec p;
  p.widths = {2.5, 2.5, 1.6};
  p.species = Species::minus;
  p.amplitude = 0.1;
  add_packet(s, p);
  const Run r = run(s, -4.0, 0.2);
  const ScatteringField f = r.minus.field();
  CHECK(f.direction == TimeDirection::past);
  CHECK(weighted_distance(f, s.z_minus) <= 1e-10);
  CHECK(trace_identity_check(r.minus, r.end) <= 1e-10);
}

TEST_CASE("zero data") {
  const ElsasserState s(box(16, 16, 32, 8.0, 8.0, 16.0));
  const Run r = run(s, 1.0, 0.1);
  CHECK(max_abs(r.plus.field().field) == 0.0);
  CHECK(scattering_norm(r.plus.field(), 0) == 0.0);
  CHECK(scattering_norm(r.minus.field(), 2) == 0.0);
  CHECK(trace_identity_check(r.minus, r.end) == 0.0);
}

TEST_CASE("lattice coordinates") {
  ElsasserState s = small_collision();
  ScatteringAccumulator acc(Species::plus);
  acc.add_sample(s, nonlinear_terms(s));
  const ScatteringField f = acc.field();
  // z+ window centred at 8: index 0 (x3 = -16) wraps to x3 = 16.
  CHECK(f.u_at(0) == doctest::Approx(16.0));
  CHECK(f.u_at(32) == doctest::Approx(0.0));
  CHECK(f.lattice_weights(2.0)[32] == doctest::Approx(1.0));
}

TEST_CASE("history requirements") {
  ScatteringAccumulator acc(Species::minus);
  CHECK_THROWS_AS(acc.field(), InsufficientHistory);
  CHECK_THROWS_AS(convergence_tail(acc, 1.0), InsufficientHistory);
  const ElsasserState s = small_collision();
  acc.add_sample(s, nonlinear_terms(s));
  CHECK_THROWS_AS(convergence_tail(acc, 1.0), InsufficientHistory);
  CHECK_THROWS_AS(ScatteringAccumulator(Species::plus, 0.0), RangeError);
}

TEST_CASE("collision: trace identity and its convergence") {
  const ElsasserState s = small_collision(0.05, 0.05);
  const Run coarse = run(s, T_sep, 0.2);
  const Run fine = run(s, T_sep, 0.1);
  for (Species sp : {Species::plus, Species::minus}) {
    const auto& c = sp == Species::plus ? coarse.plus : coarse.minus;
    const auto& f = sp == Species::plus ? fine.plus : fine.minus;
    const double e1 = trace_identity_check(c, coarse.end);
    const double e2 = trace_identity_check(f, fine.end);
    CHECK(e1 <= 1e-6);
    CHECK(e1 / e2 >= 4.0);
    // The field moved away from the data.
    CHECK(weighted_distance(c.field(), s.z(sp)) > 1e-6);
    for (int k = 0; k <= 2; ++k) CHECK(std::isfinite(scattering_norm(c.field(), k)));
  }
}

TEST_CASE("collision: the tail is positive during the collision and shrinks after it") {
  const ElsasserState s = small_collision(0.05, 0.05);
  const Run during = run(s, 9.0, 0.2);
  const Run after = run(s, T_sep, 0.2);
  const double t_during = convergence_tail(during.plus, 1.0);
  const double t_after = convergence_tail(after.plus, 1.0);
  CHECK(t_during > 0.0);
  CHECK(t_after < 0.1 * t_during);
}

TEST_CASE("collision: nothing is accumulated after separation") {
  const ElsasserState s = small_collision(0.05, 0.05);
  const Run r = run(s, T_sep, 0.2);
  CHECK(r.plus.last_integrand_max() <= 1e-12);
  CHECK(r.minus.last_integrand_max() <= 1e-12);
  CHECK(convergence_tail(r.plus, 1.0) <= 1e-10);
  CHECK(convergence_tail(r.minus, 1.0) <= 1e-10);
}

TEST_CASE("collision: doubling the run after separation leaves the norms unchanged") {
  // Long box so that a run to 2 T_sep stays clear of periodic images.
  ElsasserState s(box(16, 16, 192, 16.0, 16.0, 96.0));
  PacketSpec p;
  p.widths = {2.5, 2.5, 1.6};
  p.center = {0.0, 0.0, 8.0};
  p.polarization_seed = 1;
  add_packet(s, p, 2.0 * T_sep);
  p.species = Species::minus;
  p.center = {0.0, 0.0, -8.0};
  p.polarization_seed = 2;
  add_packet(s, p, 2.0 * T_sep);
  const Run once = run(s, T_sep, 0.2);
  const Run twice = run(s, 2.0 * T_sep, 0.2);
  for (int k = 0; k <= 2; ++k) {
    const double a = scattering_norm(once.plus.field(), k);
    const double b = scattering_norm(twice.plus.field(), k);
    CHECK(std::abs(a - b) / a <= 1e-9);
  }
}
