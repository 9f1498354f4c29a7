#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "zpf/error.hpp"
#include "zpf/field.hpp"
#include "zpf/linear_map.hpp"

namespace zpf {

using ModePairs = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {
inline void check_disjoint(const ModePairs& pairs, std::size_t n) {
  std::vector<bool> used(n, false);
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n) throw InvalidInput("mode pair references an unknown mode");
    if (a == b || used[a] || used[b]) throw InvalidInput("mode pairs are not disjoint");
    used[a] = used[b] = true;
  }
}

/// Applies the 2x2 matrix u to every pair and the identity elsewhere.
template <typename Scalar>
LinearAntilinearMap<Scalar> pairwise_map(const ModePairs& pairs, const Eigen::Matrix<std::complex<Scalar>, 2, 2>& u,
                                         Eigen::Index n) {
  using C = std::complex<Scalar>;
  std::vector<Eigen::Triplet<C>> t;
  std::vector<bool> touched(static_cast<std::size_t>(n), false);
  for (const auto& [a, b] : pairs) {
    touched[a] = touched[b] = true;
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    t.emplace_back(ia, ia, u(0, 0));
    t.emplace_back(ia, ib, u(0, 1));
    t.emplace_back(ib, ia, u(1, 0));
    t.emplace_back(ib, ib, u(1, 1));
  }
  for (Eigen::Index m = 0; m < n; ++m)
    if (!touched[static_cast<std::size_t>(m)]) t.emplace_back(m, m, C(1, 0));
  LinearAntilinearMap<Scalar> map{ComplexSparse<Scalar>(n, n), ComplexSparse<Scalar>(n, n)};
  map.linear.setFromTriplets(t.begin(), t.end());
  map.linear.prune(C(0));
  return map;
}

template <typename Scalar>
void apply_pairwise(AmplitudeVector<Scalar>& alpha, const ModePairs& pairs,
                    const Eigen::Matrix<std::complex<Scalar>, 2, 2>& u) {
  for (const auto& [a, b] : pairs) {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    const auto xa = alpha(ia);
    const auto xb = alpha(ib);
    alpha(ia) = u(0, 0) * xa + u(0, 1) * xb;
    alpha(ib) = u(1, 0) * xa + u(1, 1) * xb;
  }
}
}  // namespace detail

/// Lossless splitter with symmetric i-phase on reflection:
/// (a, b) -> (sqrt(t) a + i sqrt(1-t) e^{i phi} b, i sqrt(1-t) e^{-i phi} a + sqrt(t) b).
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, 2, 2> beam_splitter_matrix(Scalar transmittance, Scalar phase) {
  if (!(transmittance >= 0 && transmittance <= 1))
    throw InvalidInput("beam splitter transmittance must lie in [0, 1]");
  using std::sqrt;
  const std::complex<Scalar> i(0, 1);
  const Scalar tr = sqrt(transmittance);
  const Scalar re = sqrt(1 - transmittance);
  Eigen::Matrix<std::complex<Scalar>, 2, 2> u;
  u << tr, i * re * std::polar(Scalar(1), phase), i * re * std::polar(Scalar(1), -phase), tr;
  return u;
}

/// Real rotation of the (H, V) amplitudes of one spatial mode.
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, 2, 2> rotator_matrix(Scalar angle) {
  using std::cos;
  using std::fmod;
  using std::sin;
  const Scalar reduced = fmod(angle, Scalar(2 * std::numbers::pi));
  const Scalar c = cos(reduced);
  const Scalar s = sin(reduced);
  Eigen::Matrix<std::complex<Scalar>, 2, 2> u;
  u << c, s, -s, c;
  return u;
}

template <typename Scalar>
FieldState<Scalar> beam_splitter(const FieldState<Scalar>& state, const ModePairs& pairs, Scalar transmittance,
                                 Scalar phase) {
  const auto u = beam_splitter_matrix(transmittance, phase);
  detail::check_disjoint(pairs, state.size());
  AmplitudeVector<Scalar> out = state.amplitudes();
  detail::apply_pairwise(out, pairs, u);
  return state.with_amplitudes(std::move(out));
}

template <typename Scalar>
FieldState<Scalar> polarization_rotator(const FieldState<Scalar>& state, const ModePairs& hv_pairs, Scalar angle) {
  detail::check_disjoint(hv_pairs, state.size());
  for (const auto& [h, v] : hv_pairs) {
    if (state.modes()[h].polarization == state.modes()[v].polarization)
      throw InvalidInput("rotator pair does not hold two polarizations");
  }
  AmplitudeVector<Scalar> out = state.amplitudes();
  detail::apply_pairwise(out, hv_pairs, rotator_matrix(angle));
  return state.with_amplitudes(std::move(out));
}

// Lens and source geometry. All lengths share one unit.

enum class DiffractionRing { first, second };

template <typename Scalar>
struct LensSpec {
  Scalar radius;       ///< R_l
  Scalar focal_length; ///< f
  Scalar wavelength;   ///< lambda
  DiffractionRing ring = DiffractionRing::first;
};

template <typename Scalar>
struct GeometrySpec {
  Scalar distance;        ///< d, crystal to detector
  Scalar crystal_radius;  ///< R_C
};

using LensSpecd = LensSpec<double>;
using GeometrySpecd = GeometrySpec<double>;

template <typename Scalar>
void validate(const LensSpec<Scalar>& lens) {
  if (!(lens.radius > 0 && lens.focal_length > 0 && lens.wavelength > 0))
    throw InvalidInput("lens radius, focal length and wavelength must be positive");
}

template <typename Scalar>
void validate(const GeometrySpec<Scalar>& geom) {
  if (!(geom.distance > 0 && geom.crystal_radius > 0))
    throw InvalidInput("source distance and crystal radius must be positive");
}

/// Fraction-of-aperture constant a for the chosen Airy ring (84 % / 91 % of the power).
template <typename Scalar>
constexpr Scalar ring_constant(DiffractionRing ring) {
  return ring == DiffractionRing::first ? Scalar(1.22) : Scalar(2.23);
}

/// Intensity gain b^2 = pi^2 R_l^4 / (lambda^2 f^2). Acts on the signal only;
/// the zeropoint field is not concentrated by the lens.
template <typename Scalar>
Scalar lens_gain(const LensSpec<Scalar>& lens) {
  validate(lens);
  const Scalar r2 = lens.radius * lens.radius;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  return pi * pi * r2 * r2 / (lens.wavelength * lens.wavelength * lens.focal_length * lens.focal_length);
}

/// Detector radius R = a lambda / A_r with relative aperture A_r = 2 R_l / f.
template <typename Scalar>
Scalar ring_radius(const LensSpec<Scalar>& lens) {
  validate(lens);
  return ring_constant<Scalar>(lens.ring) * lens.wavelength * lens.focal_length / (2 * lens.radius);
}

/// Spatial coherence of the signal over the lens: d lambda >= R_l R_C.
template <typename Scalar>
bool coherence_ok(const LensSpec<Scalar>& lens, const GeometrySpec<Scalar>& geom) {
  validate(lens);
  validate(geom);
  return geom.distance * lens.wavelength >= lens.radius * geom.crystal_radius;
}

}  // namespace zpf
