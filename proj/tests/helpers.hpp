#pragma once

#include <functional>
#include <random>

#include "alfven/spectral.hpp"
#include "alfven/state.hpp"

namespace testing {

using namespace alfven;

inline GridPtr box(int n1, int n2, int n3, double L1, double L2, double L3) {
  DomainSpec d;
  d.n = {n1, n2, n3};
  d.L = {L1, L2, L3};
  return SpectralGrid::make(d);
}

/// Samples f(x1, x2, x3) on the grid.
inline RealVectorField sample(const GridPtr& g, const std::function<Vec3(double, double, double)>& f) {
  const DomainSpec& d = g->domain();
  RealVectorField out(g);
  for (int i = 0; i < d.n[0]; ++i)
    for (int j = 0; j < d.n[1]; ++j)
      for (int k = 0; k < d.n[2]; ++k) {
        const Vec3 v = f(d.coord(0, i), d.coord(1, j), d.coord(2, k));
        for (int a = 0; a < 3; ++a) out.c[a][d.index(i, j, k)] = v[a];
      }
  return out;
}

inline RealScalarField sample_scalar(const GridPtr& g, const std::function<double(double, double, double)>& f) {
  const DomainSpec& d = g->domain();
  RealScalarField out(g);
  for (int i = 0; i < d.n[0]; ++i)
    for (int j = 0; j < d.n[1]; ++j)
      for (int k = 0; k < d.n[2]; ++k) out.v[d.index(i, j, k)] = f(d.coord(0, i), d.coord(1, j), d.coord(2, k));
  return out;
}

inline RealVectorField white_noise(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  RealVectorField out(g);
  for (auto& c : out.c)
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = n(rng);
  return out;
}

inline double max_diff(const RealVectorField& a, const RealVectorField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c) m = std::max(m, (a.c[c] - b.c[c]).abs().maxCoeff());
  return m;
}

inline double max_abs_scalar(const SpectralScalarField& f) { return inverse(f).v.abs().maxCoeff(); }

/// Small collision box: 16 x 16 x 64 points on 16 x 16 x 32.
inline ElsasserState small_collision(double amp_plus = 0.05, double amp_minus = 0.05, double c = 8.0) {
  ElsasserState s(box(16, 16, 64, 16.0, 16.0, 32.0));
  PacketSpec p;
  p.center = {0.0, 0.0, c};
  p.widths = {2.5, 2.5, 1.6};
  p.amplitude = amp_plus;
  p.polarization_seed = 1;
  add_packet(s, p);
  p.species = Species::minus;
  p.center = {0.0, 0.0, -c};
  p.amplitude = amp_minus;
  p.polarization_seed = 2;
  add_packet(s, p);
  return s;
}

} // namespace testing
