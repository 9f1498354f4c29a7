#include "zpf/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "zpf/error.hpp"
#include "zpf/quadrature.hpp"

namespace zpf {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One starting interval per standard deviation of the gaussian weight.
int sigma_pieces(double lo, double hi, double sigma) {
  return static_cast<int>(std::clamp(std::ceil((hi - lo) / sigma), 1.0, 2.0 * kTailSigmas));
}
}  // namespace

double DetectorSpec::vacuum_mean() const {
  return center_frequency * bandwidth / (8.0 * std::numbers::pi * length);
}

double DetectorSpec::vacuum_sigma() const { return vacuum_mean() * std::sqrt(coherence_time / window); }

std::vector<double> band_grid(double window, double coherence_time, double center_frequency) {
  if (!(window > 0) || !(coherence_time > 0) || coherence_time > window)
    throw InvalidInput("band requires 0 < tau <= T");
  const auto n = static_cast<std::size_t>(std::llround(window / coherence_time));
  const double spacing = kTwoPi / window;
  std::vector<double> grid(n);
  for (std::size_t l = 0; l < n; ++l)
    grid[l] = center_frequency + (static_cast<double>(l) - 0.5 * static_cast<double>(n - 1)) * spacing;
  if (grid.front() <= 0) throw InvalidInput("band extends to non-positive frequencies");
  return grid;
}

DetectorSpec make_detector(const DetectorBuild& build) {
  DetectorSpec d;
  d.radius = build.radius;
  d.length = build.length;
  d.window = build.window;
  d.coherence_time = build.coherence_time;
  d.center_frequency = build.center_frequency;
  d.efficiency = build.efficiency;
  d.axis = build.axis.normalized();
  const auto grid = band_grid(build.window, build.coherence_time, build.center_frequency);
  d.bandwidth = static_cast<double>(grid.size()) * kTwoPi / build.window;
  d.elements.reserve(grid.size());
  for (double w : grid) d.elements.push_back({w, d.axis * w, build.polarization});
  return d;
}

double efficiency_gain(double efficiency, double radius, double window, double center_frequency) {
  return efficiency * std::numbers::pi * radius * radius * window / center_frequency;
}

void validate(const DetectorSpec& d) {
  if (!(d.radius > 0) || !(d.length > 0)) throw InvalidInput("detector radius and length must be positive");
  if (!(d.coherence_time > 0) || !(d.coherence_time <= d.window))
    throw InvalidInput("detector timing requires 0 < tau <= T");
  if (!(d.center_frequency > 0) || !(d.bandwidth > 0))
    throw InvalidInput("detector band requires positive center frequency and bandwidth");
  if (!(d.efficiency > 0 && d.efficiency <= 1)) throw InvalidInput("quantum efficiency must lie in (0, 1]");
  if (!(d.gain >= 0) || !std::isfinite(d.gain)) throw InvalidInput("detector gain must be finite and non-negative");
  if (d.elements.empty()) throw InvalidInput("detector has no elements");
  if (static_cast<double>(d.elements.size()) + 0.5 < d.bandwidth * d.window / kTwoPi)
    throw InvalidInput("detector needs at least delta-omega / delta-omega_element = T / tau elements");
  if (!(d.threshold > d.vacuum_mean()))
    throw InvalidInput("threshold I_m = " + std::to_string(d.threshold) +
                       " must exceed the vacuum mean effective intensity I0 = " + std::to_string(d.vacuum_mean()) +
                       " to keep the response Q non-negative");
}

std::complex<double> time_factor(double detuning, double window, double reference_frequency) {
  const double x = detuning * window;
  const double cycles = x / kTwoPi;
  const double nearest = std::round(cycles);
  const double slack = 1e-9 + 64.0 * std::numeric_limits<double>::epsilon() * reference_frequency * window / kTwoPi;
  if (nearest != 0.0 && std::abs(cycles - nearest) <= slack) return {0.0, 0.0};
  if (std::abs(x) < 1e-6) return {1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0};
  // (e^{ix} - 1) / (ix)
  return {std::sin(x) / x, (1.0 - std::cos(x)) / x};
}

std::complex<double> time_factor(double detuning, double window) { return time_factor(detuning, window, 0.0); }

std::complex<double> volume_factor(const Eigen::Vector3d& q, const DetectorSpec& d) {
  const Eigen::Vector3d n = d.axis.normalized();
  const double q_par = q.dot(n);
  const double q_perp = (q - q_par * n).norm();

  const double x = q_par * d.length;
  std::complex<double> longitudinal;
  if (std::abs(x) < 1e-6) {
    longitudinal = {1.0 - x * x / 6.0, -x / 2.0 + x * x * x / 24.0};
  } else {
    // (1 - e^{-ix}) / (ix)
    longitudinal = {std::sin(x) / x, (std::cos(x) - 1.0) / x};
  }

  const double u = q_perp * d.radius;
  double transverse;
  if (u < 1e-4) {
    const double u2 = u * u;
    transverse = 1.0 - u2 / 8.0 + u2 * u2 / 192.0;
  } else {
    transverse = 2.0 * std::cyl_bessel_j(1.0, u) / u;
  }
  return std::polar(1.0, -q.dot(d.position)) * longitudinal * transverse;
}

namespace {
std::complex<double> mode_response(const Moded& mode, double scale, const DetectorElement& el, const DetectorSpec& d) {
  if (mode.polarization != el.polarization) return {0.0, 0.0};
  const auto s = time_factor(mode.omega - el.omega, d.window, std::max(mode.omega, el.omega));
  if (s == std::complex<double>(0.0, 0.0)) return s;
  return scale * s * volume_factor(mode.k - el.k, d);
}
}  // namespace

std::complex<double> filtered_field(const FieldStated& state, std::size_t element, const DetectorSpec& d) {
  if (element >= d.elements.size()) throw InvalidInput("element does not belong to the detector");
  const auto& el = d.elements[element];
  const auto& modes = state.modes();
  const auto& scale = modes.mode_scale();
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    const auto alpha = state.amplitudes()(i);
    if (alpha == std::complex<double>(0.0, 0.0)) continue;
    sum += alpha * mode_response(modes[m], scale(i), el, d);
  }
  return sum;
}

double effective_intensity(const FieldStated& state, const DetectorSpec& d) {
  double sum = 0;
  for (std::size_t l = 0; l < d.elements.size(); ++l) sum += std::norm(filtered_field(state, l, d));
  return sum;
}

DetectorResponse build_response(const DetectorSpec& d, const ModeSetd& modes) {
  std::vector<Eigen::Triplet<std::complex<double>>> triplets;
  const auto& scale = modes.mode_scale();
  const auto n_el = d.elements.size();
  const double spacing = kTwoPi / d.window;
  bool uniform = n_el > 0;
  for (std::size_t l = 1; l < n_el && uniform; ++l)
    uniform = std::abs(d.elements[l].omega - d.elements[0].omega - static_cast<double>(l) * spacing) <=
              1e-12 * d.elements[l].omega;
  auto add = [&](std::size_t l, std::size_t m) {
    const auto r = mode_response(modes[m], scale(static_cast<Eigen::Index>(m)), d.elements[l], d);
    if (r != std::complex<double>(0.0, 0.0))
      triplets.emplace_back(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m), r);
  };
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double cycles = uniform ? (modes[m].omega - d.elements[0].omega) / spacing : 0.5;
    const double nearest = std::round(cycles);
    if (uniform && std::abs(cycles - nearest) < 1e-6) {
      // on the grid: every element but the nearest one is an integer number of cycles away
      const auto j = static_cast<long long>(nearest);
      for (long long l = std::max(0LL, j - 1); l <= std::min<long long>(j + 1, static_cast<long long>(n_el) - 1); ++l)
        add(static_cast<std::size_t>(l), m);
    } else {
      for (std::size_t l = 0; l < n_el; ++l) add(l, m);
    }
  }
  DetectorResponse response(static_cast<Eigen::Index>(n_el), static_cast<Eigen::Index>(modes.size()));
  response.setFromTriplets(triplets.begin(), triplets.end());
  return response;
}

double q_model(double intensity, const DetectorSpec& d) {
  if (!(intensity > d.threshold)) return 0.0;
  return -std::expm1(-d.gain * (intensity - d.vacuum_mean()));
}

double q_standard(double intensity, const DetectorSpec& d) { return d.gain * (intensity - d.vacuum_mean()); }

double q_standard(const FieldStated& state, const DetectorSpec& d) {
  return q_standard(effective_intensity(state, d), d);
}

double EffectiveIntensityDist::density(double x) const {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

EffectiveIntensityDist rho_vacuum(const DetectorSpec& d) {
  return {d.vacuum_mean(), d.vacuum_sigma(), IntensityKind::vacuum};
}

EffectiveIntensityDist rho_signal(const DetectorSpec& d, double signal_intensity) {
  if (!(signal_intensity >= 0)) throw InvalidInput("signal intensity must be non-negative");
  if (signal_intensity == 0) return rho_vacuum(d);
  return {d.vacuum_mean() + signal_intensity, d.vacuum_sigma(), IntensityKind::signal};
}

double p_single(const EffectiveIntensityDist& dist, const DetectorSpec& d) {
  const double lo = std::max(d.threshold, dist.mean - kTailSigmas * dist.sigma);
  const double hi = std::max(dist.mean, lo) + kTailSigmas * dist.sigma;
  const auto r = integrate_adaptive([&](double x) { return dist.density(x) * q_model(x, d); }, lo, hi,
                                    kSingleTolerance, 2000, sigma_pieces(lo, hi, dist.sigma));
  return std::clamp(r.value, 0.0, 1.0);
}

double p_joint(const BivariateIntensityDist& dist, const DetectorSpec& first, const DetectorSpec& second) {
  if (!(std::abs(dist.corr) <= 1.0)) throw InvalidInput("correlation coefficient must lie in [-1, 1]");
  const auto& m1 = dist.first;
  const auto& m2 = dist.second;
  const double cond_sigma = m2.sigma * std::sqrt(std::max(0.0, 1.0 - dist.corr * dist.corr));
  const double slope = dist.corr * m2.sigma / m1.sigma;

  auto inner = [&](double x1) {
    const double cond_mean = m2.mean + slope * (x1 - m1.mean);
    if (cond_sigma <= 1e-14 * m2.sigma) return q_model(cond_mean, second);
    const EffectiveIntensityDist cond{cond_mean, cond_sigma, m2.kind};
    const double lo = std::max(second.threshold, cond_mean - kTailSigmas * cond_sigma);
    const double hi = std::max(cond_mean, lo) + kTailSigmas * cond_sigma;
    return integrate_adaptive([&](double x2) { return cond.density(x2) * q_model(x2, second); }, lo, hi,
                              kSingleTolerance, 2000, sigma_pieces(lo, hi, cond_sigma))
        .value;
  };

  const double lo = std::max(first.threshold, m1.mean - kTailSigmas * m1.sigma);
  const double hi = std::max(m1.mean, lo) + kTailSigmas * m1.sigma;
  const auto r = integrate_adaptive([&](double x1) { return m1.density(x1) * q_model(x1, first) * inner(x1); }, lo,
                                    hi, kJointTolerance, 2000, sigma_pieces(lo, hi, m1.sigma));
  return std::clamp(r.value, 0.0, 1.0);
}

double empirical_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("sample streams differ in length");
  if (x.size() < 2) throw InvalidInput("correlation needs at least two samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw InvalidInput("correlation undefined for a constant sample stream");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace zpf
