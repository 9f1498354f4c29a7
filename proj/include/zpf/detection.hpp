#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "zpf/field.hpp"

namespace zpf {

/// One photodetector element: responds to frequency omega and wavevector k
/// (along the detector axis) in one polarization.
struct DetectorElement {
  double omega = 0;
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  int polarization = 0;
};

/// Cylindrical threshold detector in natural units (hbar = c = epsilon0 = 1).
/// The cylinder starts at `position` and extends `length` along `axis`.
struct DetectorSpec {
  double radius = 0;              ///< R
  double length = 0;              ///< L
  double window = 0;              ///< T, detection time window
  double coherence_time = 0;      ///< tau
  double center_frequency = 0;    ///< omega-bar
  double bandwidth = 0;           ///< delta-omega
  double efficiency = 0;          ///< eta
  double threshold = 0;           ///< I_m
  double gain = 0;                ///< zeta-tilde, per unit effective intensity
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  std::vector<DetectorElement> elements;

  /// Mean effective intensity of the zeropoint field, omega-bar delta-omega / (8 pi c L).
  double vacuum_mean() const;
  /// Deviation of the effective intensity, vacuum_mean * sqrt(tau / T).
  double vacuum_sigma() const;
};

/// Parameters for building a detector whose elements tile the band on the
/// grid omega_l = omega-bar + (l - (N-1)/2) 2 pi / T with N = round(T / tau).
struct DetectorBuild {
  double radius = 1e-4;
  double length = 1e-3;
  double window = 1;
  double coherence_time = 1.0 / 64;
  double center_frequency = 0;
  double efficiency = 0.1;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  int polarization = 0;
};

/// Element frequencies of the standard band grid.
std::vector<double> band_grid(double window, double coherence_time, double center_frequency);

/// Builds the spec with its element grid. Threshold and gain are left at zero
/// for the caller to set (they are usually chosen relative to vacuum_mean()).
DetectorSpec make_detector(const DetectorBuild& build);

/// Dimensionless-count gain eta pi R^2 T / (hbar omega-bar).
double efficiency_gain(double efficiency, double radius, double window, double center_frequency);

/// Throws InvalidInput naming the first violated invariant.
void validate(const DetectorSpec& detector);

/// (1/T) integral_0^T exp(i detuning t) dt; exactly zero when the detuning is a
/// nonzero multiple of 2 pi / T.
std::complex<double> time_factor(double detuning, double window);
/// As above; `reference_frequency` sizes the rounding slack of the zero test.
std::complex<double> time_factor(double detuning, double window, double reference_frequency);

/// (1/V) integral over the detector cylinder of exp(-i q.r) dV.
std::complex<double> volume_factor(const Eigen::Vector3d& q, const DetectorSpec& detector);

/// Filtered field of element `element` for a plane-wave superposition,
/// evaluated analytically mode by mode.
std::complex<double> filtered_field(const FieldStated& state, std::size_t element, const DetectorSpec& detector);

/// Effective intensity c epsilon0 sum_l |E_l|^2 by direct evaluation of every element.
double effective_intensity(const FieldStated& state, const DetectorSpec& detector);

/// Sparse element-by-mode response: E_l = sum_m R(l, m) alpha_m.
using DetectorResponse = Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>;

DetectorResponse build_response(const DetectorSpec& detector, const ModeSetd& modes);

inline double effective_intensity(const DetectorResponse& response, const AmplitudeVector<double>& alpha) {
  return (response * alpha).squaredNorm();
}

/// Bounded response (1 - exp(-gain (I - I0))) Theta(I - I_m), Theta(0) = 0.
double q_model(double intensity, const DetectorSpec& detector);

/// Standard expression gain (I - I0); unbounded.
double q_standard(double intensity, const DetectorSpec& detector);
double q_standard(const FieldStated& state, const DetectorSpec& detector);

enum class IntensityKind { vacuum, signal };

/// Gaussian law of the effective intensity.
struct EffectiveIntensityDist {
  double mean = 0;
  double sigma = 0;
  IntensityKind kind = IntensityKind::vacuum;

  double density(double intensity) const;
};

struct BivariateIntensityDist {
  EffectiveIntensityDist first;
  EffectiveIntensityDist second;
  double corr = 0;
};

EffectiveIntensityDist rho_vacuum(const DetectorSpec& detector);
EffectiveIntensityDist rho_signal(const DetectorSpec& detector, double signal_intensity);

inline constexpr double kSingleTolerance = 1e-12;
inline constexpr double kJointTolerance = 1e-10;
inline constexpr double kTailSigmas = 12.0;

/// p = integral rho(I) Q(I) dI by adaptive quadrature over
/// [max(I_m, mean - 12 sigma), mean + 12 sigma].
double p_single(const EffectiveIntensityDist& dist, const DetectorSpec& detector);

/// p12 = integral rho12 Q1 Q2, as an outer integral over I1 of an inner
/// integral over the gaussian conditional law of I2 given I1.
double p_joint(const BivariateIntensityDist& dist, const DetectorSpec& first, const DetectorSpec& second);

/// Centered sample correlation coefficient.
double empirical_corr(std::span<const double> x, std::span<const double> y);

}  // namespace zpf
