#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zpf/detection.hpp"
#include "zpf/experiment.hpp"

namespace zpf {

enum class Regime { dark, linear, intermediate, saturated };

std::string to_string(Regime regime);

struct ConstraintCheck {
  std::string name;
  bool satisfied = false;
  double margin_sigma = 0;  ///< signed distance in units of sigma0
};

struct RegimeReport {
  Regime regime = Regime::dark;
  std::vector<ConstraintCheck> checks;
  bool feasible = false;
  /// Closed interval of thresholds I_m meeting both constraints, when one exists.
  std::optional<std::pair<double, double>> threshold_interval;
};

/// Boundaries used to turn the qualitative inequalities into checks. "x >> sigma0"
/// means x >= k sigma0; gain * I_s <= linear_max is linear, >= saturated_min saturated.
struct RegimeThresholds {
  double k = 3.0;
  double linear_max = 0.1;
  double saturated_min = 10.0;
};

RegimeReport classify_regime(double signal_intensity, const DetectorSpec& detector, const RegimeThresholds& th = {});

/// Linearity (I0 + I_s - I_m >= k sigma0) against dark-count suppression
/// (I_m - I0 >= k sigma0). Both hold for some I_m iff I_s >= 2 k sigma0.
RegimeReport tradeoff_report(const DetectorSpec& detector, double signal_intensity, double k = 3.0);

/// SI inputs for the minimum usable single-count rate.
struct RateBoundInputs {
  double efficiency;       ///< eta
  double focal_length;     ///< f [m]
  double crystal_radius;   ///< R_C [m]
  double detector_length;  ///< L [m]
  double distance;         ///< d [m]
  double wavelength;       ///< lambda [m]
  double coherence_time;   ///< tau [s]
  double window;           ///< T [s]
};

/// eta f^2 R_C^2 / (2 L d^2 lambda sqrt(tau T)), counts per second.
double min_rate_bound(const RateBoundInputs& in);

struct ChshStation {
  ModePairs hv_pairs;  ///< (H, V) modes rotated by the analyzer angle
  std::size_t plus_detector = 0;
  std::size_t minus_detector = 0;
};

enum class ChshResponse {
  model,        ///< q_model on every output
  forced_plus,  ///< diagnostic: "+" outputs always fire, "-" outputs never do
};

struct ChshResult {
  std::array<std::pair<double, double>, 4> settings{};  ///< (a,b), (a,b'), (a',b), (a',b')
  /// E = <(Q_a+ - Q_a-)(Q_b+ - Q_b-)>: the correlation bounded by |S| <= 2 for
  /// any model with 0 <= Q <= 1.
  std::array<double, 4> correlation{};
  std::array<double, 4> correlation_se{};
  double s = 0;
  double s_se = 0;
  /// Coincidence-normalized E = (p++ + p-- - p+- - p-+) / (p++ + p-- + p+- + p-+).
  /// Bounded only under fair sampling; reported as a diagnostic.
  std::array<double, 4> normalized_correlation{};
  std::array<double, 4> normalized_correlation_se{};
  double s_normalized = 0;
  double s_normalized_se = 0;
};

/// Throws InvalidInput unless the four pairs read (a,b), (a,b'), (a',b), (a',b').
void validate_chsh_settings(const std::vector<std::pair<double, double>>& settings);

/// CHSH scan with one hidden-variable sample per trial shared by all four
/// settings. S = E(a,b) + E(a,b') + E(a',b) - E(a',b'); standard errors by
/// linearization.
ChshResult chsh_scan(const Experiment& experiment, const ChshStation& station_a, const ChshStation& station_b,
                     const std::vector<std::pair<double, double>>& settings, std::size_t trials, std::uint64_t seed,
                     ChshResponse response = ChshResponse::model, int workers = 0);

}  // namespace zpf
