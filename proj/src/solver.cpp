#include "alfven/solver.hpp"

#include <cmath>
#include <string>

#include "alfven/errors.hpp"

namespace alfven {

void StepperConfig::validate() const {
  if (!(dt > 0.0)) throw RangeError("stepper: dt must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw RangeError("stepper: cfl must lie in (0, 1]");
  if (record_every < 1) throw RangeError("stepper: record_every must be >= 1");
  if (!(blowup_factor > 1.0)) throw RangeError("stepper: blowup_factor must exceed 1");
  if (!std::isfinite(t_end)) throw RangeError("stepper: t_end must be finite");
}

NonlinearTerms nonlinear_terms(const SpectralVectorField& zp, const SpectralVectorField& zm) {
  require_same_grid(zp.grid, zm.grid, "nonlinear_terms");
  const GridPtr& g = zp.grid;
  const SpectralGrid& G = *g;
  const RealVectorField p = inverse(zp);
  const RealVectorField m = inverse(zm);

  NonlinearTerms out{SpectralVectorField(g), SpectralVectorField(g), SpectralScalarField(g), p.max_magnitude(),
                     m.max_magnitude()};

  // Divergence form: (zm.grad zp)^i = d_j (zm^j zp^i), (zp.grad zm)^j = d_i (zp^i zm^j).
  // Both share the nine products T_ij = zm^j zp^i.
  const RealArray& mask = G.dealias_mask();
  RealArray product(static_cast<Eigen::Index>(G.physical_size()));
  ComplexArray t(static_cast<Eigen::Index>(G.spectral_size()));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      product = m.c[j] * p.c[i];
      G.forward(product.data(), t.data());
      const RealArray& ki = G.k(i);
      const RealArray& kj = G.k(j);
      for (Eigen::Index q = 0; q < t.size(); ++q) {
        if (mask[q] == 0.0) continue;
        const Complex v{-t[q].imag(), t[q].real()};  // i T
        out.plus.c[i][q] += kj[q] * v;
        out.minus.c[j][q] += ki[q] * v;
      }
    }
  }
  // -Lap p = div(zm.grad zp), so p = i k.N / k^2.
  const RealArray& inv = G.inv_k2();
  for (Eigen::Index q = 0; q < inv.size(); ++q) {
    const Complex kn = G.k(0)[q] * out.plus.c[0][q] + G.k(1)[q] * out.plus.c[1][q] + G.k(2)[q] * out.plus.c[2][q];
    out.pressure.c[q] = Complex{-kn.imag(), kn.real()} * inv[q];
  }
  leray_project_in_place(out.plus);
  leray_project_in_place(out.minus);
  return out;
}

std::pair<SpectralVectorField, SpectralVectorField> compute_rhs(const ElsasserState& s) {
  const NonlinearTerms n = nonlinear_terms(s);
  SpectralVectorField dp = partial(s.z_plus, 2);
  SpectralVectorField dm = -1.0 * partial(s.z_minus, 2);
  dp -= n.plus;
  dm -= n.minus;
  return {std::move(dp), std::move(dm)};
}

ElsasserState propagate_linear(const ElsasserState& s, double h) {
  ElsasserState out = s;
  out.z_plus = shift_x3(s.z_plus, h);
  out.z_minus = shift_x3(s.z_minus, -h);
  out.t = s.t + h;
  return out;
}

namespace {

// Pair of species fields, the unit the integrator works on.
struct Pair {
  SpectralVectorField plus;
  SpectralVectorField minus;
};

Pair shifted(const Pair& z, double h) { return {shift_x3(z.plus, h), shift_x3(z.minus, -h)}; }

// Time derivative of the nonlinear part: -(P(z-.grad z+), P(z+.grad z-)).
Pair nonlinear_rate(const NonlinearTerms& n) { return {-1.0 * n.plus, -1.0 * n.minus}; }

Pair axpy(const Pair& x, double a, const Pair& y) {
  return {x.plus + a * y.plus, x.minus + a * y.minus};
}

void check_cap(const NonlinearTerms& n, double cap, double t) {
  const double peak = std::max(n.max_z_plus, n.max_z_minus);
  if (!(peak <= cap)) {
    throw BlowupDetected("max|z| = " + std::to_string(peak) + " exceeds cap " + std::to_string(cap) +
                         " at t = " + std::to_string(t));
  }
}

} // namespace

ElsasserState step(const ElsasserState& s, double h, const NonlinearTerms* first_stage, double amplitude_cap) {
  s.guard.check(s.domain(), s.t + h);

  NonlinearTerms stage1;
  if (!first_stage) {
    stage1 = nonlinear_terms(s);
    first_stage = &stage1;
  }
  check_cap(*first_stage, amplitude_cap, s.t);

  const Pair z{s.z_plus, s.z_minus};
  const Pair k1 = nonlinear_rate(*first_stage);

  const Pair a = shifted(axpy(z, 0.5 * h, k1), 0.5 * h);
  const Pair k2 = nonlinear_rate(nonlinear_terms(a.plus, a.minus));

  const Pair z_half = shifted(z, 0.5 * h);
  const Pair b = axpy(z_half, 0.5 * h, k2);
  const Pair k3 = nonlinear_rate(nonlinear_terms(b.plus, b.minus));

  const Pair z_full = shifted(z, h);
  const Pair c = axpy(z_full, h, shifted(k3, 0.5 * h));
  const Pair k4 = nonlinear_rate(nonlinear_terms(c.plus, c.minus));

  const Pair k1_full = shifted(k1, h);
  const Pair k23_half = shifted(Pair{k2.plus + k3.plus, k2.minus + k3.minus}, 0.5 * h);

  ElsasserState out = s;
  out.z_plus = z_full.plus + (h / 6.0) * (k1_full.plus + 2.0 * k23_half.plus + k4.plus);
  out.z_minus = z_full.minus + (h / 6.0) * (k1_full.minus + 2.0 * k23_half.minus + k4.minus);
  out.t = s.t + h;
  return out;
}

ElsasserState step(const ElsasserState& s, const StepperConfig& cfg) {
  cfg.validate();
  const double h = cfg.direction == Direction::forward ? cfg.dt : -cfg.dt;
  return step(s, h);
}

StepPlan plan_steps(const ElsasserState& s, const StepperConfig& cfg) {
  cfg.validate();
  const double span = cfg.t_end - s.t;
  if ((cfg.direction == Direction::forward && span < 0.0) ||
      (cfg.direction == Direction::backward && span > 0.0)) {
    throw RangeError("stepper: t_end = " + std::to_string(cfg.t_end) + " lies against the run direction");
  }
  if (span == 0.0) return {};
  const double zmax = std::max(max_abs(s.z_plus), max_abs(s.z_minus));
  const double limit = std::min(cfg.dt, cfg.cfl * s.domain().min_spacing() / (1.0 + zmax));
  const long steps = static_cast<long>(std::ceil(std::abs(span) / limit - 1e-9));
  return {steps, span / static_cast<double>(steps)};
}

ElsasserState advance(ElsasserState s, const StepperConfig& cfg, std::span<Observer* const> observers) {
  const StepPlan plan = plan_steps(s, cfg);
  const double t0 = s.t;
  NonlinearTerms current = nonlinear_terms(s);
  const double initial_peak = std::max(current.max_z_plus, current.max_z_minus);
  const double cap = initial_peak > 0.0 ? cfg.blowup_factor * initial_peak : std::numeric_limits<double>::infinity();
  const double record_dt = plan.h * cfg.record_every;

  auto notify = [&](long index, double interval) {
    const RecordPoint rec{s, current, index, interval, index == plan.steps};
    for (Observer* o : observers) o->observe(rec);
  };
  notify(0, record_dt);

  for (long n = 1; n <= plan.steps; ++n) {
    s = step(s, plan.h, &current, cap);
    // Pin the clock to the plan to keep round-off out of the time axis.
    s.t = t0 + static_cast<double>(n) * plan.h;
    current = nonlinear_terms(s);
    if (n % cfg.record_every == 0) {
      notify(n, record_dt);
    } else if (n == plan.steps) {
      notify(n, static_cast<double>(n % cfg.record_every) * plan.h);
    }
  }
  check_cap(current, cap, s.t);
  return s;
}

} // namespace alfven
