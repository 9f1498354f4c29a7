#include "zpf/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "zpf/error.hpp"

namespace zpf {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::dark: return "dark";
    case Regime::linear: return "linear";
    case Regime::intermediate: return "intermediate";
    case Regime::saturated: return "saturated";
  }
  return "unknown";
}

namespace {
std::vector<ConstraintCheck> margin_checks(const DetectorSpec& d, double signal, double k) {
  const double i0 = d.vacuum_mean();
  const double sigma = d.vacuum_sigma();
  const double dark = (d.threshold - i0) / sigma;
  const double linear = (i0 + signal - d.threshold) / sigma;
  return {{"dark_suppression", dark >= k, dark}, {"linear_response", linear >= k, linear}};
}
}  // namespace

RegimeReport classify_regime(double signal, const DetectorSpec& d, const RegimeThresholds& th) {
  if (!(signal >= 0)) throw InvalidInput("signal intensity must be non-negative");
  RegimeReport report = tradeoff_report(d, signal, th.k);
  const double response = d.gain * signal;
  if (signal == 0) {
    report.regime = Regime::dark;
  } else if (response <= th.linear_max) {
    report.regime = Regime::linear;
  } else if (response >= th.saturated_min) {
    report.regime = Regime::saturated;
  } else {
    report.regime = Regime::intermediate;
  }
  return report;
}

RegimeReport tradeoff_report(const DetectorSpec& d, double signal, double k) {
  if (!(signal >= 0)) throw InvalidInput("signal intensity must be non-negative");
  if (!(k > 0)) throw InvalidInput("constraint multiple k must be positive");
  RegimeReport report;
  report.regime = signal == 0 ? Regime::dark : Regime::linear;
  report.checks = margin_checks(d, signal, k);
  const double sigma = d.vacuum_sigma();
  const double ratio = signal / sigma;
  const bool separable = ratio >= 2.0 * k * (1.0 - 1e-12);
  report.checks.push_back({"signal_over_sigma", separable, ratio - 2.0 * k});
  report.feasible = separable;
  if (separable) {
    const double lo = d.vacuum_mean() + k * sigma;
    const double hi = std::max(lo, d.vacuum_mean() + signal - k * sigma);
    report.threshold_interval = std::make_pair(lo, hi);
  }
  return report;
}

double min_rate_bound(const RateBoundInputs& in) {
  const double values[] = {in.efficiency, in.focal_length,  in.crystal_radius, in.detector_length,
                           in.distance,   in.wavelength,    in.coherence_time, in.window};
  for (double v : values)
    if (!(v > 0) || !std::isfinite(v)) throw InvalidInput("rate bound inputs must be positive and finite");
  const double f2 = in.focal_length * in.focal_length;
  const double rc2 = in.crystal_radius * in.crystal_radius;
  const double d2 = in.distance * in.distance;
  return in.efficiency * f2 * rc2 /
         (2.0 * in.detector_length * d2 * in.wavelength * std::sqrt(in.coherence_time * in.window));
}

void validate_chsh_settings(const std::vector<std::pair<double, double>>& settings) {
  if (settings.size() != 4) throw InvalidInput("CHSH needs exactly four setting pairs");
  for (const auto& [a, b] : settings)
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("CHSH angles must be finite");
  if (settings[0].first != settings[1].first || settings[2].first != settings[3].first ||
      settings[0].second != settings[2].second || settings[1].second != settings[3].second)
    throw InvalidInput("CHSH settings must read (a,b), (a,b'), (a',b), (a',b')");
}

ChshResult chsh_scan(const Experiment& ex, const ChshStation& sa, const ChshStation& sb,
                     const std::vector<std::pair<double, double>>& settings, std::size_t trials, std::uint64_t seed,
                     ChshResponse response, int workers) {
  validate_chsh_settings(settings);
  if (trials < 2) throw InvalidInput("CHSH needs at least two trials");
  for (const auto* st : {&sa, &sb}) {
    if (st->plus_detector >= ex.detector_count() || st->minus_detector >= ex.detector_count())
      throw InvalidInput("CHSH station references an unknown detector");
    detail::check_disjoint(st->hv_pairs, ex.modes().size());
  }

  const auto nm = static_cast<Eigen::Index>(ex.modes().size());
  // Per trial and setting: numerator and denominator of the correlation ratio.
  std::vector<double> num(trials * 4), den(trials * 4);
  std::array<Eigen::Matrix2cd, 4> rot_a, rot_b;
  for (std::size_t s = 0; s < 4; ++s) {
    rot_a[s] = rotator_matrix(settings[s].first);
    rot_b[s] = rotator_matrix(settings[s].second);
  }

  auto outputs = [&](std::size_t plus, std::size_t minus, const AmplitudeVector<double>& alpha) {
    if (response == ChshResponse::forced_plus) return std::pair{1.0, 0.0};
    return std::pair{q_model(ex.intensity(plus, alpha), ex.detector(plus)),
                     q_model(ex.intensity(minus, alpha), ex.detector(minus))};
  };

  parallel_trials(trials, workers > 0 ? workers : env_worker_count(), [&](std::size_t begin, std::size_t end) {
    AmplitudeVector<double> hidden(nm), analyzed(nm);
    for (std::size_t t = begin; t < end; ++t) {
      sample_vacuum_into<double>(seed, t, hidden);
      ex.propagate(hidden);
      for (std::size_t s = 0; s < 4; ++s) {
        analyzed = hidden;
        detail::apply_pairwise<double>(analyzed, sa.hv_pairs, rot_a[s]);
        detail::apply_pairwise<double>(analyzed, sb.hv_pairs, rot_b[s]);
        const auto [ap, am] = outputs(sa.plus_detector, sa.minus_detector, analyzed);
        const auto [bp, bm] = outputs(sb.plus_detector, sb.minus_detector, analyzed);
        num[t * 4 + s] = (ap - am) * (bp - bm);
        den[t * 4 + s] = (ap + am) * (bp + bm);
      }
    }
  });

  ChshResult out;
  std::copy(settings.begin(), settings.end(), out.settings.begin());
  const double sign[4] = {1.0, 1.0, 1.0, -1.0};
  std::vector<double> column(trials), s_direct(trials, 0.0), s_residual(trials, 0.0);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t t = 0; t < trials; ++t) {
      column[t] = num[t * 4 + s];
      s_direct[t] += sign[s] * column[t];
    }
    const auto direct = mean_estimate(column);
    out.correlation[s] = direct.value;
    out.correlation_se[s] = direct.standard_error;
    out.s += sign[s] * direct.value;

    for (std::size_t t = 0; t < trials; ++t) column[t] = den[t * 4 + s];
    const double mean_den = mean_estimate(column).value;
    if (mean_den <= 0) continue;
    const double e = direct.value / mean_den;
    for (std::size_t t = 0; t < trials; ++t) {
      column[t] = (num[t * 4 + s] - e * den[t * 4 + s]) / mean_den;
      s_residual[t] += sign[s] * column[t];
    }
    out.normalized_correlation[s] = e;
    out.normalized_correlation_se[s] = mean_estimate(column).standard_error;
    out.s_normalized += sign[s] * e;
  }
  out.s_se = mean_estimate(s_direct).standard_error;
  out.s_normalized_se = mean_estimate(s_residual).standard_error;
  return out;
}

}  // namespace zpf
