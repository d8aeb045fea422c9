#include "alfven/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "alfven/errors.hpp"

namespace alfven {

std::vector<std::array<int, 3>> multi_indices(int k) {
  if (k < 0) throw RangeError("multi_indices: negative order");
  std::vector<std::array<int, 3>> out;
  for (int a = k; a >= 0; --a)
    for (int b = k - a; b >= 0; --b) out.push_back({a, b, k - a - b});
  return out;
}

double multinomial(const std::array<int, 3>& alpha) {
  auto fact = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  return fact(alpha[0] + alpha[1] + alpha[2]) / (fact(alpha[0]) * fact(alpha[1]) * fact(alpha[2]));
}

RealArray x3_weights(const ElsasserState& s, Species sp, double power) {
  const DomainSpec& d = s.domain();
  const Family fam = transport_family(sp);
  const double center = s.guard.window_center(sp, s.t);
  RealArray w(d.n[2]);
  for (int i3 = 0; i3 < d.n[2]; ++i3) {
    const double x3 = unwrap_x3(d, i3, wrap_count_near(d, i3, center));
    w[i3] = weight_value(characteristic_coord(fam, s.t, x3), fam, s.weights, power);
  }
  return w;
}

double weighted_quadrature(const RealVectorField& f, const RealArray& w3) {
  const DomainSpec& d = f.grid->domain();
  const int n3 = d.n[2];
  if (w3.size() != n3) throw ShapeMismatch("weighted_quadrature: weight length differs from n3");
  const RealArray sq = f.c[0].square() + f.c[1].square() + f.c[2].square();
  const std::size_t columns = std::size_t(d.n[0]) * d.n[1];
  double total = 0.0;
  for (std::size_t col = 0; col < columns; ++col) {
    total += (sq.segment(static_cast<Eigen::Index>(col * n3), n3) * w3).sum();
  }
  return total * d.cell_volume();
}

double energy_norm(const ElsasserState& s, Species sp) {
  return weighted_quadrature(inverse(s.z(sp)), x3_weights(s, sp, 2.0 * s.weights.omega));
}

double higher_energy_norm(const ElsasserState& s, Species sp, int k) {
  const RealArray w = x3_weights(s, sp, 2.0 * s.weights.omega);
  const SpectralVectorField j = curl(s.z(sp));
  double total = 0.0;
  for (const auto& alpha : multi_indices(k)) total += weighted_quadrature(inverse(partial(j, alpha)), w);
  return total;
}

double data_norm(const ElsasserState& s, Species sp, int k_max) {
  const RealArray w = x3_weights(s, sp, 2.0 * s.weights.omega);
  double total = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    for (const auto& alpha : multi_indices(k)) {
      total += multinomial(alpha) * weighted_quadrature(inverse(partial(s.z(sp), alpha)), w);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Flux

FluxAccumulator::FluxAccumulator(Species sp, double u_start, double spacing, std::size_t count)
    : species_(sp), values_(count, 0.0), last_integrand_(count, 0.0) {
  if (count == 0) throw RangeError("flux accumulator: empty u lattice");
  if (!(spacing > 0.0)) throw RangeError("flux accumulator: spacing must be positive");
  u_.resize(count);
  for (std::size_t j = 0; j < count; ++j) u_[j] = u_start + static_cast<double>(j) * spacing;
}

FluxAccumulator FluxAccumulator::covering(const ElsasserState& s, Species sp, double t_end, double margin) {
  const DomainSpec& d = s.domain();
  const double h = d.spacing(2);
  const double sigma = -propagation_sign(sp);
  const double c0 = s.guard.window_center(sp, s.t);
  // u = x3 - sigma tau for x3 in the window c0 - sigma (tau - t0) +- L3/2.
  const double at_start = c0 - sigma * s.t;
  const double at_end = c0 - sigma * (2.0 * t_end - s.t);
  const double lo = std::min(at_start, at_end) - 0.5 * d.L[2] - margin;
  const double hi = std::max(at_start, at_end) + 0.5 * d.L[2] + margin;
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  return FluxAccumulator(sp, lo, h, count);
}

void FluxAccumulator::observe(const RecordPoint& rec) { add_sample(rec.state); }

void FluxAccumulator::add_sample(const ElsasserState& s) {
  const DomainSpec& d = s.domain();
  const double h = d.spacing(2);
  if (u_.size() > 1 && std::abs((u_[1] - u_[0]) - h) > 1e-12 * h) {
    throw ShapeMismatch("flux accumulator: lattice spacing differs from the grid spacing");
  }
  const int n3 = d.n[2];
  const double tau = s.t;
  const double sigma = -propagation_sign(species_);
  const Family fam = transport_family(species_);
  const double two_omega = 2.0 * s.weights.omega;

  // The lattice spacing must match h3 so that all points share one sub-grid
  // offset: shift once, then read planes.
  const double y = (u_[0] + sigma * tau - d.coord(2, 0)) / h;
  const double base = std::floor(y);
  const RealVectorField g = inverse(shift_x3(s.z(species_), (y - base) * h));
  std::vector<double> plane(n3, 0.0);
  const std::size_t columns = std::size_t(d.n[0]) * d.n[1];
  for (std::size_t col = 0; col < columns; ++col) {
    for (int i3 = 0; i3 < n3; ++i3) {
      const std::size_t idx = col * n3 + i3;
      plane[i3] += g.c[0][idx] * g.c[0][idx] + g.c[1][idx] * g.c[1][idx] + g.c[2][idx] * g.c[2][idx];
    }
  }
  const double area = d.spacing(0) * d.spacing(1);
  const double center = s.guard.window_center(species_, tau);
  const long i_base = static_cast<long>(base);

  std::vector<double> integrand(u_.size(), 0.0);
  for (std::size_t j = 0; j < u_.size(); ++j) {
    const double x3 = u_[j] + sigma * tau;
    if (x3 < center - 0.5 * d.L[2] || x3 >= center + 0.5 * d.L[2]) continue;
    long i3 = (i_base + static_cast<long>(j)) % n3;
    if (i3 < 0) i3 += n3;
    const double w = weight_value(characteristic_coord(fam, tau, x3), fam, s.weights, two_omega);
    integrand[j] = std::numbers::sqrt2 * w * plane[i3] * area;
  }
  if (started_) {
    const double dtau = std::abs(tau - last_t_);
    for (std::size_t j = 0; j < u_.size(); ++j) values_[j] += 0.5 * (last_integrand_[j] + integrand[j]) * dtau;
  }
  last_integrand_ = std::move(integrand);
  last_t_ = tau;
  started_ = true;
}

double FluxAccumulator::sup() const { return *std::max_element(values_.begin(), values_.end()); }

// ---------------------------------------------------------------------------
// Decay ratios

namespace {
double decay_factor(const ElsasserState& s) {
  return std::pow(1.0 + std::abs(s.t + s.weights.a), s.weights.omega);
}
} // namespace

double separation_ratio(const ElsasserState& s) {
  const RealArray p = inverse(s.z_plus).magnitude();
  const RealArray m = inverse(s.z_minus).magnitude();
  return (p * m).maxCoeff() * decay_factor(s);
}

PressureRatios pressure_decay_ratio(const ElsasserState& s) {
  return pressure_decay_ratio(s, solve_pressure(s.z_plus, s.z_minus));
}

PressureRatios pressure_decay_ratio(const ElsasserState& s, const SpectralScalarField& p) {
  PressureRatios r;
  const SpectralVectorField grad = gradient(p);
  r.max_grad = inverse(grad).max_magnitude();
  RealArray frob = RealArray::Zero(static_cast<Eigen::Index>(p.grid->physical_size()));
  for (int i = 0; i < 3; ++i) {
    SpectralScalarField gi(p.grid);
    gi.c = grad.c[i];
    for (int j = i; j < 3; ++j) {
      const RealArray hij = inverse(partial(gi, j)).v;
      frob += (i == j ? 1.0 : 2.0) * hij.square();
    }
  }
  r.max_hessian = std::sqrt(frob.maxCoeff());
  const double f = decay_factor(s);
  r.l1 = r.max_grad * f;
  r.l2 = r.max_hessian * f;
  return r;
}

Conserved conserved_quantities(const ElsasserState& s) {
  const double ep = parseval_norm_squared(s.z_plus);
  const double em = parseval_norm_squared(s.z_minus);
  return {ep + em, ep - em};
}

DivCurlParts divcurl_check(const SpectralVectorField& f, const RealArray& lambda) {
  DivCurlParts out;
  for (int i = 0; i < 3; ++i) out.gradient += weighted_quadrature(inverse(partial(f, i)), lambda);
  out.curl = weighted_quadrature(inverse(curl(f)), lambda);
  out.mass = weighted_quadrature(inverse(f), lambda);
  return out;
}

double sobolev_check(const ElsasserState& s, Species sp) {
  const RealArray w = x3_weights(s, sp, 2.0 * s.weights.omega);
  const RealArray sq = inverse(s.z(sp)).magnitude().square();
  const int n3 = s.domain().n[2];
  double lhs = 0.0;
  for (Eigen::Index idx = 0; idx < sq.size(); ++idx) lhs = std::max(lhs, w[idx % n3] * sq[idx]);
  if (lhs == 0.0) return 0.0;
  const double rhs = energy_norm(s, sp) + higher_energy_norm(s, sp, 0) + higher_energy_norm(s, sp, 1);
  return lhs / rhs;
}

// ---------------------------------------------------------------------------
// Norm series

NormObserver::NormObserver(const ElsasserState& initial, double t_end, int k_max, int diag_every,
                           std::optional<double> u_margin)
    : k_max_(k_max),
      diag_every_(diag_every),
      flux_{FluxAccumulator::covering(initial, Species::plus, t_end, u_margin.value_or(0.0)),
            FluxAccumulator::covering(initial, Species::minus, t_end, u_margin.value_or(0.0))} {
  if (k_max < 0) throw RangeError("diagnostics: k_max must be >= 0");
  if (diag_every < 1) throw RangeError("diagnostics: diag_every must be >= 1");
  series_.k_max = k_max;
}

void NormObserver::observe(const RecordPoint& rec) {
  for (auto& f : flux_) f.add_sample(rec.state);
  max_div_ = std::max({max_div_, alfven::max_divergence(rec.state.z_plus), alfven::max_divergence(rec.state.z_minus)});
  if (seen_ % diag_every_ == 0 || rec.is_final) series_.samples.push_back(sample(rec.state, rec.nonlinear));
  ++seen_;
}

NormSample NormObserver::sample(const ElsasserState& s, const NonlinearTerms& n) const {
  NormSample out = snapshot_norms(s, k_max_, &n.pressure);
  for (Species sp : {Species::plus, Species::minus}) out.F[species_index(sp)] = flux_[species_index(sp)].sup();
  return out;
}

NormSample snapshot_norms(const ElsasserState& s, int k_max, const SpectralScalarField* pressure) {
  NormSample out;
  out.t = s.t;
  out.Ek.assign(static_cast<std::size_t>(k_max) + 1, {0.0, 0.0});
  for (Species sp : {Species::plus, Species::minus}) {
    const std::size_t i = species_index(sp);
    out.E[i] = energy_norm(s, sp);
    for (int k = 0; k <= k_max; ++k) out.Ek[k][i] = higher_energy_norm(s, sp, k);
    out.F[i] = std::numeric_limits<double>::quiet_NaN();
  }
  const Conserved c = conserved_quantities(s);
  out.energy = c.energy;
  out.cross_helicity = c.cross_helicity;
  out.sep_ratio = separation_ratio(s);
  const PressureRatios p = pressure ? pressure_decay_ratio(s, *pressure) : pressure_decay_ratio(s);
  out.p1_ratio = p.l1;
  out.p2_ratio = p.l2;
  out.max_grad_p = p.max_grad;
  out.max_divergence = std::max(alfven::max_divergence(s.z_plus), alfven::max_divergence(s.z_minus));
  return out;
}

double main_estimate_constant(const NormSeries& s, Species sp) {
  if (s.samples.empty()) return 0.0;
  const std::size_t i = species_index(sp);
  auto total = [&](const NormSample& x) {
    double v = x.E[i] + x.F[i];
    for (const auto& e : x.Ek) v += e[i];
    return v;
  };
  const double initial = total(s.samples.front());
  if (initial == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& x : s.samples) worst = std::max(worst, total(x));
  return worst / initial;
}

} // namespace alfven
