#include "alfven/state.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "alfven/errors.hpp"

namespace alfven {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

double support_radius(double sigma) { return sigma * std::sqrt(2.0 * std::log(1.0 / support_threshold)); }

// ---------------------------------------------------------------------------
// WrapGuard

double WrapGuard::window_center(Species s, double t) const {
  return track(s).anchor + propagation_sign(s) * (t - t_ref);
}

double WrapGuard::image_overlap(const DomainSpec& d, double t) const {
  const double L3 = d.L[2];
  const double dt = t - t_ref;
  double worst = 0.0;
  for (const auto& p : track(Species::plus).packets) {
    for (const auto& q : track(Species::minus).packets) {
      const double sep = (p.center - dt) - (q.center + dt);
      // nearest non-trivial periodic image
      const double m = std::round(sep / L3);
      double image = std::numeric_limits<double>::infinity();
      for (double k : {m - 1.0, m, m + 1.0}) {
        if (k != 0.0) image = std::min(image, std::abs(sep - k * L3));
      }
      const double spread = 2.0 * (p.sigma * p.sigma + q.sigma * q.sigma);
      worst = std::max(worst, std::exp(-image * image / spread));
    }
  }
  return worst;
}

void WrapGuard::check(const DomainSpec& d, double t) const {
  const double overlap = image_overlap(d, t);
  if (overlap > overlap_threshold) {
    throw DomainExhaustion("packets meet a periodic image at t = " + std::to_string(t) +
                           " (overlap " + std::to_string(overlap) + " > " +
                           std::to_string(overlap_threshold) + ")");
  }
}

WrapGuard WrapGuard::rebased(double t_now, double t_new) const {
  WrapGuard g = *this;
  for (Species s : {Species::plus, Species::minus}) {
    const double shift = propagation_sign(s) * (t_now - t_ref);
    auto& tr = g.track(s);
    tr.anchor += shift;
    for (auto& p : tr.packets) p.center += shift;
  }
  g.t_ref = t_new;
  return g;
}

ElsasserState::ElsasserState(GridPtr grid, WeightParams w)
    : weights(w), z_plus(grid), z_minus(grid) {}

// ---------------------------------------------------------------------------
// Initial data

Vec3 seeded_polarization(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double u = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  const double phi = std::uniform_real_distribution<double>(0.0, two_pi)(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
  return Vec3(r * std::cos(phi), r * std::sin(phi), u);
}

SpectralVectorField make_wave_packet(const GridPtr& grid, const PacketSpec& spec, double run_distance) {
  const auto& G = *grid;
  const auto& d = G.domain();
  for (int a = 0; a < 3; ++a) {
    if (!(spec.widths[a] > 0.0)) throw RangeError("wave packet: widths must be positive");
  }
  if (support_radius(spec.widths[2]) + run_distance > 0.5 * d.L[2]) {
    throw MarginViolation("wave packet (" + std::string(to_string(spec.species)) + ", x3 = " +
                          std::to_string(spec.center[2]) + "): support radius " +
                          std::to_string(support_radius(spec.widths[2])) + " plus run distance " +
                          std::to_string(run_distance) + " exceeds L3/2 = " + std::to_string(0.5 * d.L[2]));
  }
  SpectralVectorField out(grid);
  if (spec.amplitude == 0.0) return out;

  // Exact Fourier coefficients of the periodised Gaussian along each axis.
  std::array<std::vector<Complex>, 3> line;
  for (int a = 0; a < 3; ++a) {
    const int count = a == 2 ? G.nh() : G.n(a);
    line[a].resize(count);
    const double s = spec.widths[a];
    const double offset = spec.center[a] - d.coord(a, 0);
    for (int i = 0; i < count; ++i) {
      const double k = two_pi * G.mode(a, i) / d.L[a];
      const double mag = s * std::sqrt(two_pi) / d.L[a] * std::exp(-0.5 * k * k * s * s);
      line[a][i] = std::polar(mag, -k * offset);
    }
  }
  SpectralScalarField psi(grid);
  for (int i1 = 0; i1 < G.n(0); ++i1)
    for (int i2 = 0; i2 < G.n(1); ++i2)
      for (int i3 = 0; i3 < G.nh(); ++i3)
        psi.c[G.spectral_index(i1, i2, i3)] = line[0][i1] * line[1][i2] * line[2][i3];
  psi = dealias(psi);

  const Vec3 pol = spec.polarization ? spec.polarization->normalized() : seeded_polarization(spec.polarization_seed);
  SpectralVectorField potential(grid);
  for (int a = 0; a < 3; ++a) potential.c[a] = psi.c * pol[a];
  out = curl(potential);
  const double peak = max_abs(out);
  if (peak > 0.0) out *= spec.amplitude / peak;
  return out;
}

namespace {

// Enforce c(-k) = conj c(k) on the self-conjugate planes.
void symmetrize(SpectralVectorField& f) {
  const auto& G = *f.grid;
  for (int i3 : {0, G.n(2) / 2}) {
    for (int i1 = 0; i1 < G.n(0); ++i1) {
      const int j1 = (G.n(0) - i1) % G.n(0);
      for (int i2 = 0; i2 < G.n(1); ++i2) {
        const int j2 = (G.n(1) - i2) % G.n(1);
        const std::size_t a = G.spectral_index(i1, i2, i3);
        const std::size_t b = G.spectral_index(j1, j2, i3);
        if (a == b) {
          for (auto& comp : f.c) comp[a] = comp[a].real();
        } else if (a < b) {
          for (auto& comp : f.c) comp[b] = std::conj(comp[a]);
        }
      }
    }
  }
}

} // namespace

SpectralVectorField make_random_solenoidal(const GridPtr& grid, double spectrum_slope, std::uint64_t seed,
                                           Species species, double amplitude) {
  const auto& G = *grid;
  std::mt19937_64 rng(seed * 2 + (species == Species::plus ? 0 : 1));
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, two_pi);
  SpectralVectorField f(grid);
  const auto& mask = G.dealias_mask();
  for (std::size_t idx = 0; idx < G.spectral_size(); ++idx) {
    // Draw unconditionally so the stream does not depend on the mask.
    Vec3 dir(uniform(rng), uniform(rng), uniform(rng));
    const double phase = angle(rng);
    const double k2 = G.k2()[idx];
    if (mask[idx] == 0.0 || k2 == 0.0) continue;
    const Vec3 k(G.k(0)[idx], G.k(1)[idx], G.k(2)[idx]);
    dir -= k * (k.dot(dir) / k2);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    dir /= norm;
    const double mag = std::pow(k2, 0.25 * (spectrum_slope - 2.0));
    const Complex ph = std::polar(mag, phase);
    for (int a = 0; a < 3; ++a) f.c[a][idx] = ph * dir[a];
  }
  symmetrize(f);
  const double peak = max_abs(f);
  if (peak > 0.0) f *= amplitude / peak;
  return f;
}

void add_packet(ElsasserState& s, const PacketSpec& spec, double run_distance) {
  s.z(spec.species) += make_wave_packet(s.grid(), spec, run_distance);
  auto& tr = s.guard.track(spec.species);
  // Register at the guard's reference time.
  const double center = spec.center[2] - propagation_sign(spec.species) * (s.t - s.guard.t_ref);
  if (tr.packets.empty()) tr.anchor = center;
  tr.packets.push_back({center, spec.widths[2]});
}

// ---------------------------------------------------------------------------
// Physical variables

PhysicalReconstruction reconstruct_physical(const ElsasserState& s) {
  PhysicalReconstruction r;
  const RealVectorField zp = inverse(s.z_plus);
  const RealVectorField zm = inverse(s.z_minus);
  r.v = RealVectorField(s.grid());
  r.b = RealVectorField(s.grid());
  const Vec3 b0 = background_field();
  for (int a = 0; a < 3; ++a) {
    r.v.c[a] = 0.5 * (zp.c[a] + zm.c[a]);
    r.b.c[a] = 0.5 * (zp.c[a] - zm.c[a]) + b0[a];
  }
  r.p = inverse(solve_pressure(s.z_plus, s.z_minus));
  return r;
}

std::pair<SpectralVectorField, SpectralVectorField> elsasser_from_physical(const RealVectorField& v,
                                                                           const RealVectorField& b) {
  require_same_grid(v.grid, b.grid, "elsasser_from_physical");
  RealVectorField zp(v.grid), zm(v.grid);
  const Vec3 b0 = background_field();
  for (int a = 0; a < 3; ++a) {
    zp.c[a] = v.c[a] + (b.c[a] - b0[a]);
    zm.c[a] = v.c[a] - (b.c[a] - b0[a]);
  }
  return {transform(zp), transform(zm)};
}

StateReport inspect(const ElsasserState& s) {
  StateReport r;
  for (Species sp : {Species::plus, Species::minus}) {
    const auto& f = s.z(sp);
    for (const auto& comp : f.c) r.finite = r.finite && comp.isFinite().all();
    if (!r.finite) return r;
    r.max_divergence = std::max(r.max_divergence, max_divergence(f));
    r.hermitian_defect = std::max(r.hermitian_defect, hermitian_defect(f));
  }
  return r;
}

void validate(const ElsasserState& s, double div_tol, double herm_tol) {
  const StateReport r = inspect(s);
  if (!r.finite) throw InvalidData("state contains non-finite coefficients");
  if (r.max_divergence > div_tol) {
    throw InvalidData("state is not solenoidal: max|div| = " + std::to_string(r.max_divergence));
  }
  if (r.hermitian_defect > herm_tol) {
    throw InvalidData("state violates Hermitian symmetry: defect " + std::to_string(r.hermitian_defect));
  }
}

} // namespace alfven
