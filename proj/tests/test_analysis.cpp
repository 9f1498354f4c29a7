#include <cmath>
#include <numbers>

#include "doctest.h"
#include "zpf/analysis.hpp"
#include "zpf/harness.hpp"

using namespace zpf;

namespace {

DetectorSpec fine_detector() {
  DetectorBuild b;
  b.window = 1.0;
  b.coherence_time = 1e-4;
  b.center_frequency = 2e6;
  auto d = make_detector(b);
  d.threshold = d.vacuum_mean() + 3 * d.vacuum_sigma();
  return d;
}

// eta=0.1, f=5 mm, R_C=1 mm, L=5 mm, d=1 m, lambda=800 nm, tau=1 ps, T=10 ns
RateBoundInputs reference_rate() { return {0.1, 5e-3, 1e-3, 5e-3, 1.0, 8e-7, 1e-12, 1e-8}; }

nlohmann::json chsh_document(double g, double threshold_sigma, double gain_sigma, const std::string& response) {
  nlohmann::json doc = {
      {"band", {{"T", 1.0}, {"tau", 1.0 / 16}}},
      {"beams",
       {{{"name", "a"}, {"axis", {0.1, 0.0, 1.0}}, {"polarizations", {0, 1}}},
        {{"name", "b"}, {"axis", {-0.1, 0.0, 1.0}}, {"polarizations", {0, 1}}}}},
      {"detectors",
       {{{"name", "a+"}, {"beam", "a"}, {"polarization", 0}, {"threshold_sigma", threshold_sigma}, {"gain_sigma", gain_sigma}},
        {{"name", "a-"}, {"beam", "a"}, {"polarization", 1}, {"threshold_sigma", threshold_sigma}, {"gain_sigma", gain_sigma}},
        {{"name", "b+"}, {"beam", "b"}, {"polarization", 0}, {"threshold_sigma", threshold_sigma}, {"gain_sigma", gain_sigma}},
        {{"name", "b-"}, {"beam", "b"}, {"polarization", 1}, {"threshold_sigma", threshold_sigma}, {"gain_sigma", gain_sigma}}}},
      {"chsh",
       {{"station_a", {{"beam", "a"}, {"plus", "a+"}, {"minus", "a-"}}},
        {"station_b", {{"beam", "b"}, {"plus", "b+"}, {"minus", "b-"}}},
        {"settings", {{0.0, 0.3927}, {0.0, 1.1781}, {0.7854, 0.3927}, {0.7854, 1.1781}}},
        {"response", response}}},
  };
  if (g > 0)
    doc["source"] = {{"g", g},
                     {"pairs",
                      {{{"signal", "a"}, {"signal_polarization", 0}, {"idler", "b"}, {"idler_polarization", 0}},
                       {{"signal", "a"}, {"signal_polarization", 1}, {"idler", "b"}, {"idler_polarization", 1}}}}};
  return doc;
}

}  // namespace

TEST_CASE("regime classification") {
  auto d = fine_detector();
  const double s0 = d.vacuum_sigma();
  const double is = 10 * s0;
  CHECK(classify_regime(0.0, d).regime == Regime::dark);
  d.gain = 1e-2 / is;
  CHECK(classify_regime(is, d).regime == Regime::linear);
  d.gain = 1e2 / is;
  CHECK(classify_regime(is, d).regime == Regime::saturated);
  d.gain = 1.0 / is;
  CHECK(classify_regime(is, d).regime == Regime::intermediate);
  CHECK_THROWS_AS(classify_regime(-1.0, d), InvalidInput);
  CHECK(to_string(Regime::saturated) == "saturated");

  const auto report = classify_regime(is, d);
  REQUIRE(report.checks.size() == 3);
  CHECK(report.checks[0].name == "dark_suppression");
  CHECK(report.checks[0].margin_sigma == doctest::Approx(3.0));
  CHECK(report.checks[1].name == "linear_response");
  CHECK(report.checks[1].margin_sigma == doctest::Approx(7.0));
}

TEST_CASE("trade-off between dark suppression and linearity") {
  auto d = fine_detector();
  const double i0 = d.vacuum_mean(), s0 = d.vacuum_sigma();

  const auto wide = tradeoff_report(d, 10 * s0);
  REQUIRE(wide.feasible);
  CHECK(wide.threshold_interval->first == doctest::Approx(i0 + 3 * s0).epsilon(1e-14));
  CHECK(wide.threshold_interval->second == doctest::Approx(i0 + 7 * s0).epsilon(1e-14));

  const auto narrow = tradeoff_report(d, 2 * s0);
  CHECK_FALSE(narrow.feasible);
  CHECK_FALSE(narrow.threshold_interval.has_value());

  const auto edge = tradeoff_report(d, 6 * s0);
  REQUIRE(edge.feasible);
  CHECK(edge.threshold_interval->first == doctest::Approx(i0 + 3 * s0));
  CHECK(edge.threshold_interval->second == doctest::Approx(i0 + 3 * s0));

  // feasible iff I_s >= 2 k sigma0, for several k
  for (double k : {1.0, 2.0, 3.0, 5.0}) {
    for (double ratio = 0.0; ratio < 20; ratio += 0.37) {
      const auto r = tradeoff_report(d, ratio * s0, k);
      CHECK(r.feasible == (ratio >= 2 * k));
      if (r.feasible) CHECK(r.threshold_interval->first <= r.threshold_interval->second);
    }
  }
  CHECK_THROWS_AS(tradeoff_report(d, 1.0, 0.0), InvalidInput);
}

TEST_CASE("rate bound arithmetic") {
  // 0.1 * 25e-6 * 1e-6 / (2 * 5e-3 * 1 * 8e-7 * 1e-10) = 2.5e-12 / 8e-19
  CHECK(min_rate_bound(reference_rate()) == doctest::Approx(3.125e6).epsilon(1e-12));

  RateBoundInputs documented = reference_rate();
  documented.focal_length = 1e-2;
  documented.crystal_radius = 2e-4;
  CHECK(min_rate_bound(documented) == doctest::Approx(5e5).epsilon(1e-12));

  const double base = min_rate_bound(reference_rate());
  auto ratio = [&](auto mutate) {
    auto in = reference_rate();
    mutate(in);
    return min_rate_bound(in) / base;
  };
  CHECK(ratio([](auto& in) { in.distance *= 2; }) == doctest::Approx(0.25));
  CHECK(ratio([](auto& in) { in.efficiency *= 3; }) == doctest::Approx(3.0));
  CHECK(ratio([](auto& in) { in.focal_length *= 3; }) == doctest::Approx(9.0));
  CHECK(ratio([](auto& in) { in.crystal_radius *= 3; }) == doctest::Approx(9.0));
  CHECK(ratio([](auto& in) { in.detector_length *= 3; }) == doctest::Approx(1.0 / 3));
  CHECK(ratio([](auto& in) { in.wavelength *= 3; }) == doctest::Approx(1.0 / 3));
  CHECK(ratio([](auto& in) { in.coherence_time *= 4; }) == doctest::Approx(0.5));
  CHECK(ratio([](auto& in) { in.window *= 4; }) == doctest::Approx(0.5));

  auto bad = reference_rate();
  bad.distance = 0;
  CHECK_THROWS_AS(min_rate_bound(bad), InvalidInput);
  bad = reference_rate();
  bad.wavelength = -1;
  CHECK_THROWS_AS(min_rate_bound(bad), InvalidInput);
}

TEST_CASE("CHSH with forced responses gives the deterministic bound") {
  const auto built = build_experiment(config_from_json(chsh_document(0.1, 1.0, 1.0, "forced_plus")));
  REQUIRE(built.chsh.has_value());
  const std::vector<std::pair<double, double>> settings{{0.0, 0.4}, {0.0, 1.2}, {0.8, 0.4}, {0.8, 1.2}};
  const auto r =
      chsh_scan(built.experiment, built.chsh->first, built.chsh->second, settings, 100, 1, ChshResponse::forced_plus, 1);
  for (double e : r.correlation) CHECK(e == 1.0);
  for (double e : r.normalized_correlation) CHECK(e == 1.0);
  CHECK(r.s == 2.0);
  CHECK(r.s_normalized == 2.0);
}

TEST_CASE("CHSH with independent stations") {
  const auto built = build_experiment(config_from_json(chsh_document(0.0, 0.5, 1.0, "model")));
  const std::vector<std::pair<double, double>> settings{{0.0, 0.4}, {0.0, 1.2}, {0.8, 0.4}, {0.8, 1.2}};
  const auto r = chsh_scan(built.experiment, built.chsh->first, built.chsh->second, settings, 20000, 9,
                           ChshResponse::model, 1);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(std::abs(r.correlation[s]) <= 3 * r.correlation_se[s]);
    CHECK(std::abs(r.correlation[s]) <= 1.0);
  }
  CHECK(std::abs(r.s) <= 3 * r.s_se);
  CHECK_THROWS_AS(chsh_scan(built.experiment, built.chsh->first, built.chsh->second,
                            {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}, 100, 1),
                  InvalidInput);
  CHECK_THROWS_AS(chsh_scan(built.experiment, built.chsh->first, built.chsh->second,
                            {{0.0, 0.0}, {0.1, 1.0}, {1.0, 0.0}, {1.0, 1.0}}, 100, 1),
                  InvalidInput);
}

TEST_CASE("CHSH with a correlated source stays within the local bound") {
  const auto built = build_experiment(config_from_json(chsh_document(0.25, 1.0, 2.0, "model")));
  const std::vector<std::pair<double, double>> settings{
      {0.0, std::numbers::pi / 8}, {0.0, 3 * std::numbers::pi / 8}, {std::numbers::pi / 4, std::numbers::pi / 8},
      {std::numbers::pi / 4, 3 * std::numbers::pi / 8}};
  const auto r = chsh_scan(built.experiment, built.chsh->first, built.chsh->second, settings, 20000, 4,
                           ChshResponse::model, 1);
  CHECK(std::abs(r.s) <= 2 + 3 * r.s_se);
  // the pair correlation shows up at the aligned setting
  CHECK(r.correlation[0] > 0);
}

TEST_CASE("per-trial CHSH sums never leave [-2, 2]") {
  // high thresholds post-select coincidences; the normalized ratio is then
  // not bounded, the direct correlation still is
  const auto built = build_experiment(config_from_json(chsh_document(0.3, 5.0, 1.0, "model")));
  const double pi = std::numbers::pi;
  const std::vector<std::pair<double, double>> settings{{0.0, pi / 8}, {0.0, -pi / 8}, {pi / 4, pi / 8}, {pi / 4, -pi / 8}};
  const auto r = chsh_scan(built.experiment, built.chsh->first, built.chsh->second, settings, 20000, 2,
                           ChshResponse::model, 1);
  CHECK(std::abs(r.s) <= 2.0);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(std::abs(r.correlation[s]) <= 1.0);
    CHECK(std::abs(r.normalized_correlation[s]) <= 1.0);
  }
}
