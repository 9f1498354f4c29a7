#pragma once

#include <cmath>

namespace zpf {

namespace si {
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double c = 299792458.0;              // m / s
inline constexpr double epsilon0 = 8.8541878128e-12;  // F / m
}  // namespace si

enum class Quantity { time, length, angular_frequency, energy, intensity, field, rate };

/// Internal computations use natural units with hbar = c = epsilon0 = 1 and a
/// chosen time unit. A dimensionless system carries no SI anchor; an SI system
/// converts through `time_unit` seconds.
class UnitSystem {
 public:
  enum class Mode { dimensionless, si };

  static UnitSystem dimensionless() { return UnitSystem(Mode::dimensionless, 1.0); }
  static UnitSystem si_anchored(double time_unit_seconds) {
    return UnitSystem(Mode::si, time_unit_seconds);
  }

  Mode mode() const noexcept { return mode_; }
  double time_unit() const noexcept { return time_unit_; }

  /// Size of one internal unit of `q` expressed in SI.
  double scale(Quantity q) const {
    if (mode_ == Mode::dimensionless) return 1.0;
    const double t = time_unit_;
    const double l = si::c * t;
    const double e = si::hbar / t;
    switch (q) {
      case Quantity::time: return t;
      case Quantity::length: return l;
      case Quantity::angular_frequency: return 1.0 / t;
      case Quantity::rate: return 1.0 / t;
      case Quantity::energy: return e;
      case Quantity::intensity: return e / (t * l * l);
      case Quantity::field: return std::sqrt(e / (si::epsilon0 * l * l * l));
    }
    return 1.0;
  }

  double to_si(double internal, Quantity q) const { return internal * scale(q); }
  double to_internal(double si_value, Quantity q) const { return si_value / scale(q); }

 private:
  UnitSystem(Mode m, double t) : mode_(m), time_unit_(t) {}
  Mode mode_;
  double time_unit_;
};

}  // namespace zpf
