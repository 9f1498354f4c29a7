#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "zpf/field.hpp"
#include "zpf/units.hpp"

using namespace zpf;
using cd = std::complex<double>;

namespace {

ModeSetPtr<double> single_mode() {
  return std::make_shared<const ModeSetd>(std::vector<Moded>{Moded::along({0, 0, 1}, 2.0)}, 1.0);
}

// Radial quadrature of the vacuum density (2/pi) exp(-2 r^2) over the plane:
// integral of r^(2p) * density * 2 pi r dr on a fine midpoint grid.
double vacuum_moment(int power) {
  const int steps = 200000;
  const double r_max = 8.0;
  const double h = r_max / steps;
  double sum = 0;
  for (int i = 0; i < steps; ++i) {
    const double r = (i + 0.5) * h;
    sum += std::pow(r * r, power) * (2.0 / std::numbers::pi) * std::exp(-2.0 * r * r) * 2.0 * std::numbers::pi * r;
  }
  return sum * h;
}

}  // namespace

TEST_CASE("vacuum density oracle gives the moments the sampler must reproduce") {
  CHECK(vacuum_moment(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(vacuum_moment(1) == doctest::Approx(0.5).epsilon(1e-9));
  // Var(|alpha|^2) = E|alpha|^4 - (E|alpha|^2)^2 = 1/4
  CHECK(vacuum_moment(2) - 0.25 == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("sample_vacuum rejects empty and duplicate mode lists") {
  CHECK_THROWS_AS(sample_vacuum<double>(std::vector<Moded>{}, 1, 0), InvalidInput);
  const auto m = Moded::along({1, 0, 0}, 3.0);
  CHECK_THROWS_AS(sample_vacuum<double>(std::vector<Moded>{m, m}, 1, 0), InvalidInput);
  // same k, other polarization is a different mode
  auto v = m;
  v.polarization = 1;
  CHECK_NOTHROW(sample_vacuum<double>(std::vector<Moded>{m, v}, 1, 0));
}

TEST_CASE("mode invariants") {
  CHECK_THROWS_AS(ModeSetd({Moded{{0, 0, 1}, 2.0, 0}}), InvalidInput);  // omega != |k|
  CHECK_THROWS_AS(ModeSetd({Moded{{0, 0, 0}, 0.0, 0}}), InvalidInput);
  CHECK_THROWS_AS(ModeSetd({Moded::along({0, 0, 1}, 1.0, 2)}), InvalidInput);
  const ModeSetd set({Moded::along({0, 0, 1}, 4.0)}, 2.0);
  CHECK(set.mode_scale()(0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("single-mode vacuum moments at 1e6 trials") {
  const auto modes = single_mode();
  const int trials = 1000000;
  double sum_abs2 = 0, sum_abs4 = 0;
  cd sum_alpha{0, 0}, sum_alpha2{0, 0};
  for (int t = 0; t < trials; ++t) {
    const cd a = sample_vacuum(modes, 42, static_cast<std::uint64_t>(t)).amplitudes()(0);
    sum_abs2 += std::norm(a);
    sum_abs4 += std::norm(a) * std::norm(a);
    sum_alpha += a;
    sum_alpha2 += a * a;
  }
  const double n = trials;
  const double mean_abs2 = sum_abs2 / n;
  CHECK(std::abs(mean_abs2 - 0.5) < 0.002);
  CHECK(std::abs(sum_alpha2 / n) < 3e-3);
  // E[alpha] = 0: Re and Im each have variance 1/4
  const double se_component = std::sqrt(0.25 / n);
  CHECK(std::abs((sum_alpha / n).real()) < 3 * se_component);
  CHECK(std::abs((sum_alpha / n).imag()) < 3 * se_component);
  CHECK(sum_abs4 / n - mean_abs2 * mean_abs2 == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("distinct modes are sampled independently") {
  auto modes = std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({0, 1, 0}, 2.0)}, 1.0);
  const int trials = 200000;
  cd cov{0, 0}, pseudo{0, 0};
  for (int t = 0; t < trials; ++t) {
    const auto s = sample_vacuum(modes, 7, static_cast<std::uint64_t>(t));
    cov += s.amplitudes()(0) * std::conj(s.amplitudes()(1));
    pseudo += s.amplitudes()(0) * s.amplitudes()(1);
  }
  // each product has E|x|^2 = 1/4, split across two components
  const double se = std::sqrt(0.125 / trials);
  CHECK(std::abs((cov / double(trials)).real()) < 3 * se);
  CHECK(std::abs((cov / double(trials)).imag()) < 3 * se);
  CHECK(std::abs((pseudo / double(trials)).real()) < 3 * se);
}

TEST_CASE("sampling is a pure function of (seed, trial)") {
  auto modes = std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({0, 1, 0}, 3.0)}, 1.0);
  const auto a = sample_vacuum(modes, 99, 12345);
  const auto b = sample_vacuum(modes, 99, 12345);
  CHECK(a.amplitudes() == b.amplitudes());
  CHECK(a.amplitudes() != sample_vacuum(modes, 99, 12346).amplitudes());
  CHECK(a.amplitudes() != sample_vacuum(modes, 98, 12345).amplitudes());
}

TEST_CASE("evaluate_field") {
  const auto modes = single_mode();
  CHECK(std::abs(evaluate_field(FieldStated::zero(modes), Eigen::Vector3d(0.3, 0.1, 2.0), 0.7)) == 0.0);

  const FieldStated one(modes, (AmplitudeVector<double>(1) << cd(1, 0)).finished());
  const auto e = evaluate_field(one, Eigen::Vector3d(Eigen::Vector3d::Zero()), 0.0);
  CHECK(e.real() == doctest::Approx(modes->mode_scale()(0)));
  CHECK(e.imag() == doctest::Approx(0.0));

  SUBCASE("two modes, hand summed") {
    // k1 = (0,0,2), omega 2; k2 = (3,0,0), omega 3; box volume 1.
    auto two = std::make_shared<const ModeSetd>(
        std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({1, 0, 0}, 3.0)}, 1.0);
    const FieldStated s(two, (AmplitudeVector<double>(2) << cd(1, 0), cd(0, 1)).finished());
    const Eigen::Vector3d r(0.25, 0.0, 0.5);
    const double t = 0.1;
    // phase1 = -2*0.5 + 2*0.1 = -0.8; phase2 = -3*0.25 + 3*0.1 = -0.45
    const cd expected = std::sqrt(2.0) * cd(std::cos(-0.8), std::sin(-0.8)) +
                        std::sqrt(3.0) * cd(0, 1) * cd(std::cos(-0.45), std::sin(-0.45));
    const auto got = evaluate_field(s, r, t);
    CHECK(got.real() == doctest::Approx(expected.real()).epsilon(1e-14));
    CHECK(got.imag() == doctest::Approx(expected.imag()).epsilon(1e-14));
  }
}

TEST_CASE("evaluate_field is linear in the amplitudes") {
  auto modes = std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({0, 1, 1}, 2.5), Moded::along({1, 0, 0}, 1.5)},
      0.7);
  const Eigen::Vector3d r(0.2, -0.4, 1.1);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto x = sample_vacuum(modes, 5, t);
    const auto y = sample_vacuum(modes, 6, t);
    const cd a(0.3, -1.2), b(2.0, 0.5);
    const FieldStated combo(modes, a * x.amplitudes() + b * y.amplitudes());
    const cd lhs = evaluate_field(combo, r, 0.9);
    const cd rhs = a * evaluate_field(x, r, 0.9) + b * evaluate_field(y, r, 0.9);
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1 + std::abs(rhs)));
  }
}

TEST_CASE("unit conversions are mutually inverse") {
  const auto si = UnitSystem::si_anchored(1e-8);
  for (auto q : {Quantity::time, Quantity::length, Quantity::angular_frequency, Quantity::energy,
                 Quantity::intensity, Quantity::field, Quantity::rate}) {
    for (double x : {1e-30, 3.7, 2.5e12}) {
      CHECK(si.to_si(si.to_internal(x, q), q) == doctest::Approx(x).epsilon(1e-15));
      CHECK(si.to_internal(si.to_si(x, q), q) == doctest::Approx(x).epsilon(1e-15));
    }
  }
  CHECK(si.scale(Quantity::length) == doctest::Approx(si::c * 1e-8));
  CHECK(UnitSystem::dimensionless().to_si(5.0, Quantity::intensity) == 5.0);
}
