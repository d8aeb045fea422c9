#pragma once

// Discrete periodic domain, characteristic coordinates and the polynomial
// weights <u+>, <u-> with position parameter a.

#include <array>
#include <cstddef>
#include <utility>

namespace alfven {

/// The two Elsasser species z+ and z-.
enum class Species { plus, minus };

/// The two characteristic families u+ = x3 - t and u- = x3 + t.
enum class Family { plus, minus };

constexpr Species other(Species s) { return s == Species::plus ? Species::minus : Species::plus; }

/// z+ is transported along u- = const and weighted by <u->; z- the other way round.
constexpr Family transport_family(Species s) {
  return s == Species::plus ? Family::minus : Family::plus;
}

/// Direction of propagation along x3: z+ moves towards -x3, z- towards +x3.
constexpr double propagation_sign(Species s) { return s == Species::plus ? -1.0 : 1.0; }

const char* to_string(Species s);

struct DomainSpec {
  std::array<int, 3> n{64, 64, 64};
  std::array<double, 3> L{32.0, 32.0, 32.0};

  /// Throws RangeError unless every n_i >= 8 is even and every L_i > 0.
  void validate() const;

  double spacing(int axis) const { return L[axis] / n[axis]; }
  double min_spacing() const;
  std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
  double volume() const { return L[0] * L[1] * L[2]; }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }

  /// Physical coordinate of grid index i along an axis, in [-L/2, L/2).
  double coord(int axis, int i) const { return -0.5 * L[axis] + i * spacing(axis); }

  std::size_t index(int i1, int i2, int i3) const {
    return (std::size_t(i1) * n[1] + i2) * n[2] + i3;
  }

  bool operator==(const DomainSpec&) const = default;
};

struct WeightParams {
  double a = 0.0;
  double delta = 0.1;
  double omega = 1.1;

  WeightParams() = default;
  /// Throws RangeError unless 0 < delta < 2/3.
  WeightParams(double a, double delta);

  WeightParams with_a(double new_a) const { return WeightParams(new_a, delta); }
};

/// (u+, u-) = (x3 - t, x3 + t).
constexpr std::pair<double, double> characteristic_coords(double t, double x3) {
  return {x3 - t, x3 + t};
}

/// <u>^power where <u+> = (1+|u+ - a|^2)^(1/2) and <u-> = (1+|u- + a|^2)^(1/2).
double weight_value(double u, Family family, const WeightParams& w, double power);

/// Characteristic coordinate of family `f` at (t, x3).
constexpr double characteristic_coord(Family f, double t, double x3) {
  return f == Family::plus ? x3 - t : x3 + t;
}

/// Largest |wrap_count| accepted by unwrap_x3.
inline constexpr int max_wrap_count = 64;

/// x3 coordinate of grid index i shifted by wrap_count periods.
double unwrap_x3(const DomainSpec& d, int i3, int wrap_count);

/// Wrap count placing grid index i3 inside [center - L3/2, center + L3/2).
int wrap_count_near(const DomainSpec& d, int i3, double center);

/// Image of an arbitrary x3 inside [center - L3/2, center + L3/2).
double unwrap_near(const DomainSpec& d, double x3, double center);

} // namespace alfven
