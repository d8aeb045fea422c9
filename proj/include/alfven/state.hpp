#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "alfven/grid.hpp"
#include "alfven/spectral.hpp"

namespace alfven {

/// Gaussian tail level used to define the numerical support of a packet.
inline constexpr double support_threshold = 1e-14;

/// Support half-width of a Gaussian envelope of width sigma at support_threshold.
double support_radius(double sigma);

/// One tracked packet: x3 centre at the guard's reference time and x3 width.
struct PacketTrack {
  double center = 0.0;
  double sigma = 0.0;
};

struct SpeciesTrack {
  /// Centre of the species' unwrapped x3 window at the reference time.
  double anchor = 0.0;
  std::vector<PacketTrack> packets;
};

/// Support tracking for the real-line interpretation of the periodic box.
///
/// Each species owns an x3 window of length L3 that travels with it; weights
/// are evaluated on the image of the grid inside that window. The guard
/// rejects states in which a packet of one species would meet a periodic image
/// of a packet of the other species.
struct WrapGuard {
  double t_ref = 0.0;
  std::array<SpeciesTrack, 2> tracks;
  /// Largest admissible Gaussian overlap exp(-D^2 / 2(s1^2 + s2^2)) between
  /// a packet and a periodic image of an opposite packet.
  double overlap_threshold = 1e-10;

  const SpeciesTrack& track(Species s) const { return tracks[s == Species::plus ? 0 : 1]; }
  SpeciesTrack& track(Species s) { return tracks[s == Species::plus ? 0 : 1]; }

  /// Window centre of species s at time t.
  double window_center(Species s, double t) const;
  /// Largest image overlap over all opposite packet pairs at time t.
  double image_overlap(const DomainSpec& d, double t) const;
  /// Throws DomainExhaustion if image_overlap(t) exceeds the threshold.
  void check(const DomainSpec& d, double t) const;
  /// Same tracks expressed with reference time t_new (centres advanced).
  WrapGuard rebased(double t_now, double t_new) const;
};

struct ElsasserState {
  double t = 0.0;
  WeightParams weights;
  SpectralVectorField z_plus;
  SpectralVectorField z_minus;
  WrapGuard guard;

  ElsasserState() = default;
  explicit ElsasserState(GridPtr grid, WeightParams w = {});

  const GridPtr& grid() const { return z_plus.grid; }
  const DomainSpec& domain() const { return z_plus.grid->domain(); }
  const SpectralVectorField& z(Species s) const { return s == Species::plus ? z_plus : z_minus; }
  SpectralVectorField& z(Species s) { return s == Species::plus ? z_plus : z_minus; }
};

/// Background magnetic field B0 = (0, 0, 1).
inline Vec3 background_field() { return Vec3(0.0, 0.0, 1.0); }

struct PhysicalReconstruction {
  RealVectorField v;
  RealVectorField b;
  RealScalarField p;
};

struct PacketSpec {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> widths{3.0, 3.0, 1.7};
  double amplitude = 0.05;
  Species species = Species::plus;
  std::uint64_t polarization_seed = 1;
  /// Overrides the seeded polarization when set.
  std::optional<Vec3> polarization;
};

/// Unit polarization vector drawn from the seed.
Vec3 seeded_polarization(std::uint64_t seed);

/// Divergence-free packet curl(psi p) with psi a periodised Gaussian, restricted
/// to the dealiased band and rescaled so that max|z| equals the amplitude.
/// Throws MarginViolation if the x3 support plus run_distance exceeds L3/2.
SpectralVectorField make_wave_packet(const GridPtr& grid, const PacketSpec& spec, double run_distance = 0.0);

/// Random solenoidal field in the dealiased band with shell spectrum ~ k^slope,
/// normalised to max|z| = amplitude.
SpectralVectorField make_random_solenoidal(const GridPtr& grid, double spectrum_slope, std::uint64_t seed,
                                           Species species, double amplitude = 1.0);

/// Adds a packet to the state and registers it with the wrap guard.
void add_packet(ElsasserState& s, const PacketSpec& spec, double run_distance = 0.0);

/// v = (z+ + z-)/2, b = (z+ - z-)/2 + B0 and the pressure.
PhysicalReconstruction reconstruct_physical(const ElsasserState& s);

/// Inverse of reconstruct_physical for the velocity/magnetic pair.
std::pair<SpectralVectorField, SpectralVectorField> elsasser_from_physical(const RealVectorField& v,
                                                                           const RealVectorField& b);

struct StateReport {
  double max_divergence = 0.0;
  double hermitian_defect = 0.0;
  bool finite = true;
};

StateReport inspect(const ElsasserState& s);

/// Throws InvalidData unless the state is finite, solenoidal to div_tol and
/// Hermitian to herm_tol.
void validate(const ElsasserState& s, double div_tol = 1e-10, double herm_tol = 1e-12);

} // namespace alfven
