#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zpf/detection.hpp"
#include "zpf/field.hpp"
#include "zpf/linear_map.hpp"
#include "zpf/optics.hpp"
#include "zpf/pdc.hpp"

namespace zpf {

struct SourceStage {
  PumpSpecd pump;
  PhaseMatchedPairs pairs;
};

/// One linear optical element acting pairwise on mode amplitudes.
struct OpticalStep {
  ModePairs pairs;
  Eigen::Matrix2cd matrix;

  static OpticalStep beam_splitter(ModePairs pairs, double transmittance, double phase) {
    return {std::move(pairs), beam_splitter_matrix(transmittance, phase)};
  }
  static OpticalStep rotator(ModePairs hv_pairs, double angle) {
    return {std::move(hv_pairs), rotator_matrix(angle)};
  }
};

/// A complete scenario: vacuum modes, optional PDC crystal, an optics chain
/// and a set of detectors with precomputed element responses. Immutable once
/// built; safe to share across Monte Carlo workers.
class Experiment {
 public:
  Experiment(ModeSetPtr<double> modes, std::optional<SourceStage> source, std::vector<OpticalStep> optics,
             std::vector<DetectorSpec> detectors);

  const ModeSetd& modes() const noexcept { return *modes_; }
  const ModeSetPtr<double>& mode_set() const noexcept { return modes_; }
  const std::optional<SourceStage>& source() const noexcept { return source_; }
  const std::vector<OpticalStep>& optics() const noexcept { return optics_; }
  std::size_t detector_count() const noexcept { return detectors_.size(); }
  const DetectorSpec& detector(std::size_t i) const { return detectors_.at(i); }
  const DetectorResponse& response(std::size_t i) const { return responses_.at(i); }

  /// Source then optics, in place on a vacuum sample.
  void propagate(AmplitudeVector<double>& alpha) const;

  /// Effective intensity of detector `i` for propagated amplitudes.
  double intensity(std::size_t i, const AmplitudeVector<double>& alpha) const;

  /// Whole source+optics chain as alpha' = A alpha + B conj(alpha).
  const LinearAntilinearMapd& chain() const noexcept { return chain_; }

  /// Ensemble mean of the effective intensity of detector `i` (exact second moments).
  double mean_intensity(std::size_t i) const;
  /// The same mean with the source switched off.
  double vacuum_intensity(std::size_t i) const;
  /// Above-vacuum mean, mean_intensity - vacuum_intensity.
  double signal_intensity(std::size_t i) const { return mean_intensity(i) - vacuum_intensity(i); }

 private:
  ModeSetPtr<double> modes_;
  std::optional<SourceStage> source_;
  std::vector<OpticalStep> optics_;
  std::vector<DetectorSpec> detectors_;
  std::vector<DetectorResponse> responses_;
  LinearAntilinearMapd chain_;
};

/// Box volume L0^3 for which the vacuum ensemble mean of the detector's
/// effective intensity equals its vacuum_mean(): hbar c sum_l omega_l / (2 I0).
double calibrated_box_volume(const DetectorSpec& detector);

struct Estimate {
  double value = 0;
  double standard_error = 0;
};

struct CoincidenceEstimate {
  std::size_t first = 0;
  std::size_t second = 0;
  Estimate probability;
};

struct DetectionResult {
  std::size_t trials = 0;
  std::vector<Estimate> singles;
  std::vector<CoincidenceEstimate> coincidences;  ///< every pair i < j
  std::vector<Estimate> intensity_mean;
  std::vector<double> intensity_sd;
  std::vector<std::vector<double>> intensities;  ///< per detector, when kept
  double q_min = 0;
  double q_max = 0;
};

struct McOptions {
  bool keep_intensities = false;
  int workers = 0;  ///< 0: take ZPFSIM_WORKERS from the environment, default 1
};

/// Monte Carlo over the vacuum Wigner distribution: singles are means of
/// q_model per detector, coincidences means of products. Results depend only
/// on (experiment, trials, seed), not on the worker count.
DetectionResult mc_detect(const Experiment& experiment, std::size_t trials, std::uint64_t seed,
                          const McOptions& options = {});

/// Worker count from ZPFSIM_WORKERS (>= 1).
int env_worker_count();

/// Runs body(begin, end) over contiguous trial blocks on `workers` threads.
void parallel_trials(std::size_t trials, int workers, const std::function<void(std::size_t, std::size_t)>& body);

/// Mean and standard error of a sample, with compensated summation in index order.
Estimate mean_estimate(std::span<const double> values);

}  // namespace zpf
