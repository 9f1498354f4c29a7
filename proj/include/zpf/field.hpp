#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

#include "zpf/error.hpp"
#include "zpf/rng.hpp"

namespace zpf {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using AmplitudeVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Plane-wave mode in natural units (c = 1, so omega == |k|).
template <typename Scalar>
struct Mode {
  Vector3<Scalar> k = Vector3<Scalar>::Zero();
  Scalar omega = 0;
  int polarization = 0;

  static Mode along(const Vector3<Scalar>& direction, Scalar omega, int polarization = 0) {
    return Mode{direction.normalized() * omega, omega, polarization};
  }
};

/// Validated, immutable set of modes sharing one quantization volume L0^3.
/// Shared between all FieldStates of a run.
template <typename Scalar>
class ModeSet {
 public:
  ModeSet(std::vector<Mode<Scalar>> modes, Scalar box_volume = 1)
      : modes_(std::move(modes)), box_volume_(box_volume) {
    if (modes_.empty()) throw InvalidInput("mode set is empty");
    if (!(box_volume_ > 0)) throw InvalidInput("box volume must be positive");
    scale_.resize(static_cast<Eigen::Index>(modes_.size()));
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const auto& mode = modes_[m];
      if (!(mode.omega > 0)) throw InvalidInput("mode " + std::to_string(m) + ": omega must be positive");
      if (mode.polarization != 0 && mode.polarization != 1)
        throw InvalidInput("mode " + std::to_string(m) + ": polarization must be 0 or 1");
      using std::abs;
      if (abs(mode.k.norm() - mode.omega) > Scalar(1e-9) * mode.omega)
        throw InvalidInput("mode " + std::to_string(m) + ": violates omega = c|k|");
      using std::sqrt;
      // sqrt(hbar omega / (epsilon0 L0^3)) with hbar = epsilon0 = 1
      scale_(static_cast<Eigen::Index>(m)) = sqrt(mode.omega / box_volume_);
    }
    std::vector<std::size_t> order(modes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto key = [this](std::size_t i) {
      const auto& m = modes_[i];
      return std::make_tuple(m.omega, m.k.x(), m.k.y(), m.k.z(), m.polarization);
    };
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (key(order[i]) == key(order[i - 1]))
        throw InvalidInput("duplicate mode at indices " + std::to_string(order[i - 1]) + " and " +
                           std::to_string(order[i]));
    }
  }

  std::size_t size() const noexcept { return modes_.size(); }
  const Mode<Scalar>& operator[](std::size_t i) const { return modes_[i]; }
  const std::vector<Mode<Scalar>>& modes() const noexcept { return modes_; }
  Scalar box_volume() const noexcept { return box_volume_; }
  /// Per-mode field normalization sqrt(hbar omega / (epsilon0 L0^3)).
  const RealVector<Scalar>& mode_scale() const noexcept { return scale_; }

 private:
  std::vector<Mode<Scalar>> modes_;
  Scalar box_volume_;
  RealVector<Scalar> scale_;
};

template <typename Scalar>
using ModeSetPtr = std::shared_ptr<const ModeSet<Scalar>>;

/// Hidden-variable configuration: one complex amplitude per mode.
template <typename Scalar>
class FieldState {
 public:
  FieldState(ModeSetPtr<Scalar> modes, AmplitudeVector<Scalar> amplitudes)
      : modes_(std::move(modes)), amplitudes_(std::move(amplitudes)) {
    if (!modes_) throw InvalidInput("field state without modes");
    if (static_cast<std::size_t>(amplitudes_.size()) != modes_->size())
      throw InvalidInput("amplitude count does not match mode count");
  }

  static FieldState zero(ModeSetPtr<Scalar> modes) {
    const auto n = static_cast<Eigen::Index>(modes->size());
    return FieldState(std::move(modes), AmplitudeVector<Scalar>::Zero(n));
  }

  const ModeSetPtr<Scalar>& mode_set() const noexcept { return modes_; }
  const ModeSet<Scalar>& modes() const noexcept { return *modes_; }
  const AmplitudeVector<Scalar>& amplitudes() const noexcept { return amplitudes_; }
  std::size_t size() const noexcept { return modes_->size(); }

  FieldState with_amplitudes(AmplitudeVector<Scalar> amplitudes) const {
    return FieldState(modes_, std::move(amplitudes));
  }

 private:
  ModeSetPtr<Scalar> modes_;
  AmplitudeVector<Scalar> amplitudes_;
};

using Moded = Mode<double>;
using ModeSetd = ModeSet<double>;
using FieldStated = FieldState<double>;

/// Draw one circular complex gaussian with density (2/pi) exp(-2|alpha|^2):
/// real and imaginary parts are independent normals of variance 1/4.
template <typename Scalar>
std::complex<Scalar> draw_vacuum_amplitude(TrialStream& stream) {
  boost::random::normal_distribution<double> normal(0.0, 0.5);
  const double re = normal(stream);
  const double im = normal(stream);
  return {static_cast<Scalar>(re), static_cast<Scalar>(im)};
}

/// Fill `out` with vacuum amplitudes for trial `trial_index`.
template <typename Scalar>
void sample_vacuum_into(std::uint64_t seed, std::uint64_t trial_index, AmplitudeVector<Scalar>& out) {
  TrialStream stream(seed, trial_index);
  boost::random::normal_distribution<double> normal(0.0, 0.5);
  for (Eigen::Index m = 0; m < out.size(); ++m) {
    const double re = normal(stream);
    const double im = normal(stream);
    out(m) = {static_cast<Scalar>(re), static_cast<Scalar>(im)};
  }
}

/// Sample the zeropoint field from the vacuum Wigner distribution.
/// Deterministic in (seed, trial_index).
template <typename Scalar>
FieldState<Scalar> sample_vacuum(ModeSetPtr<Scalar> modes, std::uint64_t seed, std::uint64_t trial_index) {
  if (!modes) throw InvalidInput("mode set is empty");
  AmplitudeVector<Scalar> amplitudes(static_cast<Eigen::Index>(modes->size()));
  sample_vacuum_into(seed, trial_index, amplitudes);
  return FieldState<Scalar>(std::move(modes), std::move(amplitudes));
}

template <typename Scalar>
FieldState<Scalar> sample_vacuum(std::vector<Mode<Scalar>> modes, std::uint64_t seed, std::uint64_t trial_index,
                                 Scalar box_volume = 1) {
  return sample_vacuum(std::make_shared<const ModeSet<Scalar>>(std::move(modes), box_volume), seed, trial_index);
}

/// Analytic-signal field E+(r, t) = sum_k scale_k alpha_k exp(-i k.r + i omega t).
template <typename Scalar>
std::complex<Scalar> evaluate_field(const FieldState<Scalar>& state, const Vector3<Scalar>& r, Scalar t) {
  const auto& modes = state.modes();
  const auto& scale = modes.mode_scale();
  std::complex<Scalar> sum{0, 0};
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    const Scalar phase = -modes[m].k.dot(r) + modes[m].omega * t;
    sum += scale(i) * state.amplitudes()(i) * std::polar(Scalar(1), phase);
  }
  return sum;
}

}  // namespace zpf
