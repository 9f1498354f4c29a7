#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "zpf/optics.hpp"

using namespace zpf;
using cd = std::complex<double>;

namespace {

ModeSetPtr<double> two_modes() {
  return std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0, 0), Moded::along({0, 0, 1}, 2.0, 1)}, 1.0);
}

FieldStated basis(const ModeSetPtr<double>& m, cd a, cd b) {
  return FieldStated(m, (AmplitudeVector<double>(2) << a, b).finished());
}

}  // namespace

TEST_CASE("beam splitter") {
  auto dif = std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({1, 0, 0}, 2.0)}, 1.0);
  const ModePairs pairs{{0, 1}};

  SUBCASE("t = 1 is the identity") {
    const auto s = sample_vacuum(dif, 1, 1);
    CHECK((beam_splitter(s, pairs, 1.0, 0.3).amplitudes() - s.amplitudes()).norm() < 1e-15);
  }
  SUBCASE("balanced splitter on a single input") {
    const auto out = beam_splitter(basis(dif, 1, 0), pairs, 0.5, 0.0).amplitudes();
    CHECK(std::abs(out(0) - cd(1 / std::sqrt(2.0), 0)) < 1e-15);
    CHECK(std::abs(out(1) - cd(0, 1 / std::sqrt(2.0))) < 1e-15);
  }
  SUBCASE("norm preserved") {
    for (double t : {0.0, 0.1, 0.5, 0.77, 1.0}) {
      for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const auto s = sample_vacuum(dif, 3, trial);
        const auto out = beam_splitter(s, pairs, t, 1.1);
        CHECK(std::abs(out.amplitudes().squaredNorm() - s.amplitudes().squaredNorm()) < 1e-12);
      }
    }
  }
  SUBCASE("out-of-range transmittance") {
    const auto s = basis(dif, 1, 0);
    CHECK_THROWS_AS(beam_splitter(s, pairs, -0.01, 0.0), InvalidInput);
    CHECK_THROWS_AS(beam_splitter(s, pairs, 1.01, 0.0), InvalidInput);
  }
  SUBCASE("pairs must be disjoint and in range") {
    const auto s = basis(dif, 1, 0);
    CHECK_THROWS_AS(beam_splitter(s, ModePairs{{0, 0}}, 0.5, 0.0), InvalidInput);
    CHECK_THROWS_AS(beam_splitter(s, ModePairs{{0, 2}}, 0.5, 0.0), InvalidInput);
  }
}

TEST_CASE("polarization rotator") {
  const auto m = two_modes();
  const ModePairs hv{{0, 1}};
  const auto h = basis(m, 1, 0);

  CHECK((polarization_rotator(h, hv, 0.0).amplitudes() - h.amplitudes()).norm() < 1e-15);
  const auto quarter = polarization_rotator(h, hv, std::numbers::pi / 2).amplitudes();
  CHECK(std::abs(quarter(0)) < 1e-15);
  CHECK(std::abs(quarter(1) - cd(-1, 0)) < 1e-15);

  for (std::uint64_t t = 0; t < 30; ++t) {
    const auto s = sample_vacuum(m, 8, t);
    const double a = 0.3 + 0.1 * t, b = -1.7 + 0.05 * t;
    const auto twice = polarization_rotator(polarization_rotator(s, hv, a), hv, b).amplitudes();
    const auto once = polarization_rotator(s, hv, a + b).amplitudes();
    CHECK((twice - once).norm() < 1e-12);
    CHECK(std::abs(polarization_rotator(s, hv, a).amplitudes().squaredNorm() - s.amplitudes().squaredNorm()) < 1e-12);
  }
  auto same_pol = std::make_shared<const ModeSetd>(
      std::vector<Moded>{Moded::along({0, 0, 1}, 2.0), Moded::along({1, 0, 0}, 2.0)}, 1.0);
  CHECK_THROWS_AS(polarization_rotator(basis(same_pol, 1, 0), hv, 0.1), InvalidInput);
}

TEST_CASE("optical maps compose like the direct operations") {
  const auto m = two_modes();
  const auto bs = detail::pairwise_map<double>({{0, 1}}, beam_splitter_matrix(0.3, 0.4), 2);
  const auto rot = detail::pairwise_map<double>({{0, 1}}, rotator_matrix(0.9), 2);
  const auto chain = bs.then(rot);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto s = sample_vacuum(m, 4, t);
    const auto direct = polarization_rotator(beam_splitter(s, {{0, 1}}, 0.3, 0.4), {{0, 1}}, 0.9).amplitudes();
    CHECK((chain.apply(s.amplitudes()) - direct).norm() < 1e-14);
  }
}

TEST_CASE("lens gain") {
  const LensSpecd lens{5e-3, 5e-2, 5e-7};
  CHECK(lens_gain(lens) == doctest::Approx(std::numbers::pi * std::numbers::pi * 1e6).epsilon(1e-12));

  // unit gain exactly when pi R_l^2 = lambda f
  const double lambda = 8e-7, f = 0.1;
  CHECK(lens_gain(LensSpecd{std::sqrt(lambda * f / std::numbers::pi), f, lambda}) == doctest::Approx(1.0));

  // doubling the lens radius quadruples the area and multiplies the gain by 16
  const LensSpecd doubled{1e-2, 5e-2, 5e-7};
  CHECK(lens_gain(doubled) / lens_gain(lens) == doctest::Approx(16.0).epsilon(1e-12));

  CHECK_THROWS_AS(lens_gain(LensSpecd{0.0, 1.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(lens_gain(LensSpecd{1.0, -1.0, 1.0}), InvalidInput);
}

TEST_CASE("diffraction ring radius") {
  LensSpecd lens{5e-3, 5e-2, 5e-7};
  CHECK(ring_radius(lens) == doctest::Approx(3.05e-6).epsilon(1e-12));
  lens.ring = DiffractionRing::second;
  CHECK(ring_radius(lens) == doctest::Approx(5.575e-6).epsilon(1e-12));
}

TEST_CASE("coherence condition") {
  const LensSpecd lens{5e-3, 5e-2, 8e-7};
  CHECK(coherence_ok(lens, GeometrySpecd{1.0, 1e-4}));
  CHECK_FALSE(coherence_ok(lens, GeometrySpecd{1.0, 1e-3}));
  // boundary d lambda = R_l R_C is accepted
  const LensSpecd exact{0.5, 1.0, 0.25};
  CHECK(coherence_ok(exact, GeometrySpecd{1.0, 0.5}));
  CHECK_FALSE(coherence_ok(exact, GeometrySpecd{1.0, 0.5000001}));
  CHECK_THROWS_AS(coherence_ok(lens, GeometrySpecd{0.0, 1e-4}), InvalidInput);
}
