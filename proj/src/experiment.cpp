#include "zpf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "zpf/error.hpp"

namespace zpf {

Experiment::Experiment(ModeSetPtr<double> modes, std::optional<SourceStage> source, std::vector<OpticalStep> optics,
                       std::vector<DetectorSpec> detectors)
    : modes_(std::move(modes)),
      source_(std::move(source)),
      optics_(std::move(optics)),
      detectors_(std::move(detectors)) {
  if (!modes_) throw InvalidInput("experiment has no modes");
  const auto n = static_cast<Eigen::Index>(modes_->size());
  chain_ = LinearAntilinearMapd::identity(n);
  if (source_) {
    validate(source_->pump);
    validate(source_->pairs, *modes_, source_->pump);
    chain_ = chain_.then(as_map(source_->pump, source_->pairs, n));
  }
  for (const auto& step : optics_) {
    detail::check_disjoint(step.pairs, modes_->size());
    chain_ = chain_.then(detail::pairwise_map<double>(step.pairs, step.matrix, n));
  }
  responses_.reserve(detectors_.size());
  for (const auto& d : detectors_) {
    validate(d);
    responses_.push_back(build_response(d, *modes_));
  }
}

void Experiment::propagate(AmplitudeVector<double>& alpha) const {
  if (source_) apply_pdc_inplace(alpha, source_->pump.g, source_->pairs);
  for (const auto& step : optics_) detail::apply_pairwise<double>(alpha, step.pairs, step.matrix);
}

double Experiment::intensity(std::size_t i, const AmplitudeVector<double>& alpha) const {
  const auto& r = responses_[i];
  double sum = 0;
  for (Eigen::Index row = 0; row < r.outerSize(); ++row) {
    std::complex<double> e{0.0, 0.0};
    for (DetectorResponse::InnerIterator it(r, row); it; ++it) e += it.value() * alpha(it.col());
    sum += std::norm(e);
  }
  return sum;
}

double Experiment::mean_intensity(std::size_t i) const {
  const auto& r = responses_.at(i);
  const ComplexSparse<double> ra = r * chain_.linear;
  const ComplexSparse<double> rb = r * chain_.antilinear;
  // E[alpha alpha^H] = I/2 and E[alpha alpha^T] = 0 for the vacuum.
  return 0.5 * (ra.squaredNorm() + rb.squaredNorm());
}

double Experiment::vacuum_intensity(std::size_t i) const { return 0.5 * responses_.at(i).squaredNorm(); }

double calibrated_box_volume(const DetectorSpec& d) {
  double sum = 0;
  for (const auto& el : d.elements) sum += el.omega;
  return sum / (2.0 * d.vacuum_mean());
}

Estimate mean_estimate(std::span<const double> values) {
  if (values.empty()) return {};
  auto neumaier = [&](auto&& term) {
    double sum = 0, comp = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = term(values[i]);
      const double t = sum + x;
      comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
      sum = t;
    }
    return sum + comp;
  };
  const auto n = static_cast<double>(values.size());
  const double mean = neumaier([](double x) { return x; }) / n;
  if (values.size() < 2) return {mean, 0.0};
  const double ss = neumaier([mean](double x) { return (x - mean) * (x - mean); });
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

int env_worker_count() {
  if (const char* env = std::getenv("ZPFSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 256));
  }
  return 1;
}

void parallel_trials(std::size_t trials, int workers, const std::function<void(std::size_t, std::size_t)>& body) {
  workers = std::max(1, workers);
  if (workers == 1 || trials < 2) {
    body(0, trials);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  const std::size_t block = (trials + w - 1) / w;
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_lock;
  for (std::size_t begin = 0; begin < trials; begin += block) {
    const std::size_t end = std::min(trials, begin + block);
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

DetectionResult mc_detect(const Experiment& ex, std::size_t trials, std::uint64_t seed, const McOptions& options) {
  if (trials < 1) throw InvalidInput("Monte Carlo needs at least one trial");
  const std::size_t nd = ex.detector_count();
  const auto nm = static_cast<Eigen::Index>(ex.modes().size());
  std::vector<double> intensity(trials * nd);

  parallel_trials(trials, options.workers > 0 ? options.workers : env_worker_count(),
                  [&](std::size_t begin, std::size_t end) {
                    AmplitudeVector<double> alpha(nm);
                    for (std::size_t t = begin; t < end; ++t) {
                      sample_vacuum_into<double>(seed, t, alpha);
                      ex.propagate(alpha);
                      for (std::size_t d = 0; d < nd; ++d) intensity[t * nd + d] = ex.intensity(d, alpha);
                    }
                  });

  DetectionResult out;
  out.trials = trials;
  out.q_min = std::numeric_limits<double>::infinity();
  out.q_max = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> q(nd, std::vector<double>(trials));
  std::vector<double> column(trials);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t t = 0; t < trials; ++t) {
      column[t] = intensity[t * nd + d];
      q[d][t] = q_model(column[t], ex.detector(d));
      out.q_min = std::min(out.q_min, q[d][t]);
      out.q_max = std::max(out.q_max, q[d][t]);
    }
    const auto m = mean_estimate(column);
    out.intensity_mean.push_back(m);
    out.intensity_sd.push_back(m.standard_error * std::sqrt(static_cast<double>(trials)));
    out.singles.push_back(mean_estimate(q[d]));
    if (options.keep_intensities) out.intensities.push_back(column);
  }
  for (std::size_t a = 0; a < nd; ++a) {
    for (std::size_t b = a + 1; b < nd; ++b) {
      for (std::size_t t = 0; t < trials; ++t) column[t] = q[a][t] * q[b][t];
      out.coincidences.push_back({a, b, mean_estimate(column)});
    }
  }
  return out;
}

}  // namespace zpf
