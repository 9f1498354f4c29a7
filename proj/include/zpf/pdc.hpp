#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "zpf/error.hpp"
#include "zpf/field.hpp"
#include "zpf/linear_map.hpp"

namespace zpf {

template <typename Scalar>
struct PumpSpec {
  Vector3<Scalar> k0 = Vector3<Scalar>::Zero();
  Scalar omega0 = 0;
  Scalar g = 0;  ///< coupling; the amplitude map is second order in g
};

using PumpSpecd = PumpSpec<double>;

inline constexpr double kPerturbativeCouplingLimit = 0.3;

template <typename Scalar>
void validate(const PumpSpec<Scalar>& pump) {
  if (!(pump.g >= 0)) throw InvalidInput("pump coupling g must be non-negative");
  if (!(pump.omega0 > 0)) throw InvalidInput("pump frequency must be positive");
}

template <typename Scalar>
std::optional<std::string> validity_warning(const PumpSpec<Scalar>& pump) {
  if (pump.g >= Scalar(kPerturbativeCouplingLimit))
    return "coupling g = " + std::to_string(static_cast<double>(pump.g)) +
           " is outside the second-order regime (g < 0.3)";
  return std::nullopt;
}

/// Signal/idler index pairs into a ModeSet; each mode appears at most once.
struct PhaseMatchedPairs {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double tolerance = 1e-9;  ///< relative, on both conservation laws
};

/// Throws unless every pair references existing, unshared modes and satisfies
/// k_s + k_i = k0, omega_s + omega_i = omega0 within the relative tolerance.
template <typename Scalar>
void validate(const PhaseMatchedPairs& pairs, const ModeSet<Scalar>& modes, const PumpSpec<Scalar>& pump) {
  std::vector<bool> used(modes.size(), false);
  for (std::size_t p = 0; p < pairs.pairs.size(); ++p) {
    const auto [s, i] = pairs.pairs[p];
    const std::string where = "pair " + std::to_string(p);
    if (s >= modes.size() || i >= modes.size()) throw InvalidInput(where + " references an unknown mode");
    if (s == i || used[s] || used[i]) throw InvalidInput(where + " overlaps another pair");
    used[s] = used[i] = true;
    using std::abs;
    const Scalar k_mismatch = (modes[s].k + modes[i].k - pump.k0).norm();
    const Scalar w_mismatch = abs(modes[s].omega + modes[i].omega - pump.omega0);
    if (k_mismatch > Scalar(pairs.tolerance) * pump.k0.norm() ||
        w_mismatch > Scalar(pairs.tolerance) * pump.omega0)
      throw InvalidInput(where + " is not phase matched");
  }
}

/// Crystal output for each matched pair (s, i):
///   alpha'_s = (1 + g^2/2) alpha_s + g conj(alpha_i), and symmetrically for i.
/// Unpaired modes pass through unchanged.
template <typename Scalar>
FieldState<Scalar> apply_pdc(const FieldState<Scalar>& state, const PumpSpec<Scalar>& pump,
                             const PhaseMatchedPairs& pairs) {
  validate(pump);
  validate(pairs, state.modes(), pump);
  AmplitudeVector<Scalar> out = state.amplitudes();
  const Scalar direct = 1 + pump.g * pump.g / 2;
  const auto& in = state.amplitudes();
  for (const auto& [s, i] : pairs.pairs) {
    const auto si = static_cast<Eigen::Index>(s);
    const auto ii = static_cast<Eigen::Index>(i);
    out(si) = direct * in(si) + pump.g * std::conj(in(ii));
    out(ii) = direct * in(ii) + pump.g * std::conj(in(si));
  }
  return state.with_amplitudes(std::move(out));
}

/// apply_pdc without revalidating; for inner Monte Carlo loops on a chain
/// whose pairs were validated once.
template <typename Scalar>
void apply_pdc_inplace(AmplitudeVector<Scalar>& alpha, Scalar g, const PhaseMatchedPairs& pairs) {
  const Scalar direct = 1 + g * g / 2;
  for (const auto& [s, i] : pairs.pairs) {
    const auto si = static_cast<Eigen::Index>(s);
    const auto ii = static_cast<Eigen::Index>(i);
    const auto as = alpha(si);
    const auto ai = alpha(ii);
    alpha(si) = direct * as + g * std::conj(ai);
    alpha(ii) = direct * ai + g * std::conj(as);
  }
}

template <typename Scalar>
LinearAntilinearMap<Scalar> as_map(const PumpSpec<Scalar>& pump, const PhaseMatchedPairs& pairs, Eigen::Index n) {
  using C = std::complex<Scalar>;
  std::vector<Eigen::Triplet<C>> lin, anti;
  std::vector<bool> paired(static_cast<std::size_t>(n), false);
  const C direct(1 + pump.g * pump.g / 2, 0);
  for (const auto& [s, i] : pairs.pairs) {
    paired[s] = paired[i] = true;
    const auto si = static_cast<Eigen::Index>(s);
    const auto ii = static_cast<Eigen::Index>(i);
    lin.emplace_back(si, si, direct);
    lin.emplace_back(ii, ii, direct);
    if (pump.g != 0) {
      anti.emplace_back(si, ii, C(pump.g, 0));
      anti.emplace_back(ii, si, C(pump.g, 0));
    }
  }
  for (Eigen::Index m = 0; m < n; ++m)
    if (!paired[static_cast<std::size_t>(m)]) lin.emplace_back(m, m, C(1, 0));
  LinearAntilinearMap<Scalar> map{ComplexSparse<Scalar>(n, n), ComplexSparse<Scalar>(n, n)};
  map.linear.setFromTriplets(lin.begin(), lin.end());
  map.antilinear.setFromTriplets(anti.begin(), anti.end());
  return map;
}

/// Ensemble-mean above-vacuum intensity carried by the signal modes of the
/// given pairs: sum over pairs of scale^2 (g^2 + g^4/8), i.e. E|alpha'_s|^2 - 1/2
/// weighted by the per-mode field scale.
template <typename Scalar>
Scalar mean_signal_intensity(const PumpSpec<Scalar>& pump, std::span<const Scalar> signal_mode_scales) {
  const Scalar g2 = pump.g * pump.g;
  const Scalar per_mode = g2 + g2 * g2 / 8;
  Scalar sum = 0;
  for (Scalar s : signal_mode_scales) sum += s * s * per_mode;
  return sum;
}

/// Signal wavevector of frequency `omega_signal` on the phase-matching cone of
/// `pump`, lying in the half-plane spanned by k0 and `toward`. The conjugate
/// idler is k0 - k_s with |k0 - k_s| = omega0 - omega_signal.
template <typename Scalar>
Vector3<Scalar> cone_wavevector(const PumpSpec<Scalar>& pump, Scalar omega_signal, const Vector3<Scalar>& toward) {
  const Scalar k0n = pump.k0.norm();
  const Scalar omega_idler = pump.omega0 - omega_signal;
  if (!(k0n > 0) || !(omega_signal > 0) || !(omega_idler > 0))
    throw InvalidInput("signal frequency outside the pump band");
  const Scalar cos_theta = (k0n * k0n + omega_signal * omega_signal - omega_idler * omega_idler) /
                           (2 * k0n * omega_signal);
  if (cos_theta > 1 + Scalar(1e-12) || cos_theta < -1 - Scalar(1e-12))
    throw InvalidInput("no phase-matched direction for signal frequency");
  const Vector3<Scalar> axis = pump.k0 / k0n;
  Vector3<Scalar> perp = toward - toward.dot(axis) * axis;
  if (perp.norm() < Scalar(1e-14)) {
    perp = axis.unitOrthogonal();
  } else {
    perp.normalize();
  }
  using std::clamp;
  using std::sqrt;
  const Scalar c = clamp(cos_theta, Scalar(-1), Scalar(1));
  const Scalar s = sqrt(std::max(Scalar(0), 1 - c * c));
  return omega_signal * (c * axis + s * perp);
}

}  // namespace zpf
