#include "alfven/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alfven/errors.hpp"

namespace alfven {

const char* to_string(Species s) { return s == Species::plus ? "plus" : "minus"; }

void DomainSpec::validate() const {
  for (int axis = 0; axis < 3; ++axis) {
    if (n[axis] < 8 || n[axis] % 2 != 0) {
      throw RangeError("domain: n" + std::to_string(axis + 1) + " = " + std::to_string(n[axis]) +
                       " must be even and >= 8");
    }
    if (!(L[axis] > 0.0) || !std::isfinite(L[axis])) {
      throw RangeError("domain: L" + std::to_string(axis + 1) + " must be positive");
    }
  }
}

double DomainSpec::min_spacing() const {
  return std::min({spacing(0), spacing(1), spacing(2)});
}

WeightParams::WeightParams(double a_, double delta_) : a(a_), delta(delta_), omega(1.0 + delta_) {
  if (!(delta_ > 0.0 && delta_ < 2.0 / 3.0)) {
    throw RangeError("weights: delta = " + std::to_string(delta_) + " outside (0, 2/3)");
  }
  if (!std::isfinite(a_)) throw RangeError("weights: position parameter a must be finite");
}

double weight_value(double u, Family family, const WeightParams& w, double power) {
  const double shifted = family == Family::plus ? u - w.a : u + w.a;
  return std::pow(1.0 + shifted * shifted, 0.5 * power);
}

double unwrap_x3(const DomainSpec& d, int i3, int wrap_count) {
  if (std::abs(wrap_count) > max_wrap_count) {
    throw RangeError("unwrap_x3: wrap count " + std::to_string(wrap_count) + " exceeds limit");
  }
  return d.coord(2, i3) + wrap_count * d.L[2];
}

int wrap_count_near(const DomainSpec& d, int i3, double center) {
  const double x3 = d.coord(2, i3);
  return static_cast<int>(std::ceil((center - 0.5 * d.L[2] - x3) / d.L[2]));
}

double unwrap_near(const DomainSpec& d, double x3, double center) {
  const double L3 = d.L[2];
  return x3 + std::ceil((center - 0.5 * L3 - x3) / L3) * L3;
}

} // namespace alfven
