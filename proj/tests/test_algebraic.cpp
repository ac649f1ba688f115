#include "doctest.h"

#include <map>
#include <random>

#include "mixlab/algebraic.hpp"
#include "oracles.hpp"

using namespace mixlab;
using mixlab::testing::BoxEnumeration;
using mixlab::testing::translate_span_relations;

namespace {

const AlgebraicSystem kLedrappier{};

std::vector<Site> five_point(std::int64_t scale) {
  return {{0, 0}, {scale, 0}, {-scale, 0}, {0, scale}, {0, -scale}};
}

}  // namespace

TEST_CASE("cylinder_measure examples") {
  auto single = cylinder_measure(kLedrappier, CylinderConstraint::coordinate({0, 0}, 0));
  CHECK(single.value == Dyadic::pow2_inv(1));

  const CylinderConstraint zeros(five_point(1), {0, 0, 0, 0, 0});
  const CylinderConstraint odd(five_point(1), {1, 0, 0, 0, 0});

  // Brute force over the locally valid configurations of the 3x3 box.
  const BoxEnumeration box(kLedrappier.pattern, {-1, -1}, 3, 3);
  CHECK(box.measure(zeros) == Rational(1, 16));
  CHECK(box.measure(odd) == 0);

  CHECK(cylinder_measure(kLedrappier, zeros).value == Dyadic::pow2_inv(4));
  CHECK(cylinder_measure(kLedrappier, odd).value.is_zero());

  const CylinderConstraint dyadic8(five_point(256), {0, 0, 0, 0, 0});
  const auto m8 = cylinder_measure(kLedrappier, dyadic8);
  CHECK(m8.value == Dyadic::pow2_inv(4));
  CHECK(m8.method == MeasureMethod::Dyadic);
  CHECK(m8.dyadic_shift == 8);
  CHECK(m8.assumes_squarefree);
}

TEST_CASE("dyadic reduction agrees with the window method up to scale 128") {
  for (std::int64_t scale = 2; scale <= 128; scale *= 2) {
    for (std::uint8_t b : {0, 1}) {
      const CylinderConstraint c(five_point(scale), {b, 0, 0, 0, 0});
      const auto w = cylinder_measure(kLedrappier, c, MeasureMethod::Window);
      const auto d = cylinder_measure(kLedrappier, c, MeasureMethod::Dyadic);
      CHECK(w.value == d.value);
      CHECK(w.rank == d.rank);
      CHECK(w.relations == d.relations);
    }
  }
  // Mixed constellation: dyadic offsets around a non-origin anchor.
  const std::vector<Site> sites{{3, 5}, {3 + 64, 5}, {3, 5 + 128}, {3 - 64, 5 + 64}};
  const CylinderConstraint c(sites, {1, 0, 1, 1});
  CHECK(cylinder_measure(kLedrappier, c, MeasureMethod::Window).value ==
        cylinder_measure(kLedrappier, c, MeasureMethod::Dyadic).value);
}

TEST_CASE("oversized constellation without dyadic structure needs Monte Carlo") {
  const CylinderConstraint c({{0, 0}, {1001, 3}, {5, 999}}, {0, 0, 0});
  CHECK_THROWS_AS(cylinder_measure(kLedrappier, c), CapabilityError);
  CHECK_THROWS_AS(cylinder_measure(kLedrappier, CylinderConstraint(five_point(512), {0, 0, 0, 0, 0}),
                                   MeasureMethod::Window),
                  CapabilityError);
}

TEST_CASE("relation_space examples") {
  const auto pattern_sites = five_point(1);
  const auto rel = relation_space(kLedrappier, pattern_sites);
  REQUIRE(rel.size() == 1);
  CHECK(rel[0].to_string() == "11111");
  CHECK(translate_span_relations(kLedrappier.pattern, pattern_sites).size() == 1);

  const std::vector<Site> far{{0, 0}, {5, 7}};
  CHECK(relation_space(kLedrappier, far).empty());
  CHECK(translate_span_relations(kLedrappier.pattern, far).empty());

  const std::vector<Site> one{{0, 0}};
  CHECK(relation_space(kLedrappier, one).empty());
}

TEST_CASE("window method matches the explicit translate-span oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 1 + rng() % 7;
    std::map<Site, int> uniq;
    while (uniq.size() < n) uniq[{static_cast<std::int64_t>(rng() % 7), static_cast<std::int64_t>(rng() % 7)}] = 0;
    std::vector<Site> sites;
    for (auto& [s, _] : uniq) sites.push_back(s);
    const auto ours = relation_space(kLedrappier, sites);
    const auto oracle = translate_span_relations(kLedrappier.pattern, sites);
    CHECK(ours.size() == oracle.size());
    // Same span: each of our relations reduces to zero against the oracle.
    gf2::Echelon e(sites.size());
    for (const auto& v : oracle) e.insert(v);
    for (const auto& v : ours) CHECK(e.in_span(v));
  }
}

TEST_CASE("window method matches exhaustive enumeration on 3x3 and 4x4 boxes") {
  std::mt19937_64 rng(23);
  for (std::size_t side : {3, 4}) {
    const BoxEnumeration box(kLedrappier.pattern, {0, 0}, side, side);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<Site> sites;
      std::vector<std::uint8_t> bits;
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x)
          if (rng() % 2) {
            sites.push_back({static_cast<std::int64_t>(x), static_cast<std::int64_t>(y)});
            bits.push_back(rng() % 2);
          }
      const CylinderConstraint c(sites, bits);
      CHECK(cylinder_measure(kLedrappier, c).value.to_rational() == box.measure(c));
    }
  }
}

TEST_CASE("torus_kernel matches exhaustive enumeration for w*h <= 16") {
  for (auto [w, h] : std::vector<std::pair<std::size_t, std::size_t>>{{3, 3}, {3, 4}, {4, 3}, {3, 5}, {5, 3}, {4, 4}}) {
    const auto k = torus_kernel(kLedrappier, w, h);
    std::size_t count = 0;
    for (std::uint64_t mask = 0; mask < (1ULL << (w * h)); ++mask) {
      Grid g(w, h);
      for (std::size_t i = 0; i < w * h; ++i) g.cells[i] = (mask >> i) & 1U;
      count += satisfies_relations(kLedrappier.pattern, g);
    }
    CAPTURE(w);
    CAPTURE(h);
    CHECK((std::size_t{1} << k.dimension()) == count);
    CHECK(torus_kernel_direct(kLedrappier, w, h).dimension() == k.dimension());
  }
  CHECK_THROWS_AS(torus_kernel(kLedrappier, 2, 5), std::invalid_argument);
}

TEST_CASE("transfer and direct kernels agree on larger tori") {
  for (std::size_t side : {5, 6, 7, 8, 15, 16, 31}) {
    const auto a = torus_kernel(kLedrappier, side, side);
    const auto b = torus_kernel_direct(kLedrappier, side, side);
    CHECK(a.dimension() == b.dimension());
    // Same subgroup: every transfer basis element lies in the direct span.
    gf2::Echelon e(side * side);
    for (const auto& v : b.basis) e.insert(v);
    for (const auto& v : a.basis) CHECK(e.in_span(v));
  }
  const auto rect = torus_kernel(kLedrappier, 9, 12);
  CHECK(rect.dimension() == torus_kernel_direct(kLedrappier, 9, 12).dimension());
}

TEST_CASE("sample_configuration") {
  const AlgebraicSystem trivial{RelationPattern({{0, 0}})};
  const auto empty = torus_kernel(trivial, 8, 8);
  CHECK(empty.dimension() == 0);
  CHECK(sample_configuration(empty, 1) == Grid(8, 8));

  // On a 2^k torus the pattern polynomial is a unit, so the kernel is {0}.
  const auto k16 = torus_kernel(kLedrappier, 16, 16);
  CHECK(k16.dimension() == 0);
  const Grid z = sample_configuration(k16, 12345);
  CHECK(z == sample_configuration(k16, 12345));
  CHECK(satisfies_relations(kLedrappier.pattern, z));

  const auto k = torus_kernel(kLedrappier, 15, 15);
  CHECK(k.dimension() > 0);
  const Grid a = sample_configuration(k, 12345);
  CHECK(a == sample_configuration(k, 12345));
  CHECK(satisfies_relations(kLedrappier.pattern, a));
  CHECK_FALSE(a == sample_configuration(k, 12346));
}

TEST_CASE("mc_cylinder_measure examples") {
  const auto k = torus_kernel(kLedrappier, 31, 31);
  const auto single = mc_cylinder_measure(k, CylinderConstraint::coordinate({0, 0}, 0), 100'000, 1);
  CHECK(std::abs(single.value() - 0.5) <= 4 * single.std_error());

  const CylinderConstraint zeros(five_point(1), {0, 0, 0, 0, 0});
  const auto five = mc_cylinder_measure(k, zeros, 100'000, 2);
  CHECK(std::abs(five.value() - 1.0 / 16) <= 4 * five.std_error());

  const CylinderConstraint odd(five_point(1), {1, 0, 0, 0, 0});
  const auto contra = mc_cylinder_measure(k, odd, 100'000, 3);
  CHECK(contra.value() == 0.0);
  CHECK(contra.std_error() == 0.0);

  // Worker count does not change the result.
  const auto w1 = mc_cylinder_measure(k, zeros, 50'000, 9, 1);
  const auto w4 = mc_cylinder_measure(k, zeros, 50'000, 9, 4);
  CHECK(w1.value() == w4.value());
}

TEST_CASE("default torus sides are 2^k - 1 and reproduce exact measures") {
  CHECK(default_torus_side(0) == 15);
  CHECK(default_torus_side(4) == 31);
  CHECK(default_torus_side(32) == 255);
  std::mt19937_64 rng(41);
  const auto k = torus_kernel(kLedrappier, 63, 63);  // side for diameter <= 15
  for (int trial = 0; trial < 200; ++trial) {
    std::map<Site, std::uint8_t> pts;
    const std::size_t n = 1 + rng() % 6;
    while (pts.size() < n)
      pts[{static_cast<std::int64_t>(rng() % 16), static_cast<std::int64_t>(rng() % 16)}] = rng() % 2;
    std::vector<Site> sites;
    std::vector<std::uint8_t> bits;
    for (auto& [s, b] : pts) {
      sites.push_back(s);
      bits.push_back(b);
    }
    const CylinderConstraint c(sites, bits);
    CHECK(torus_cylinder_measure(k, c) == cylinder_measure(kLedrappier, c).value);
  }
}

TEST_CASE("bernoulli_cylinder_measure examples") {
  const SiteBit one[] = {{{0, 0}, 0}};
  CHECK(*bernoulli_cylinder_measure(one).exact_value() == Rational(1, 2));
  const SiteBit three[] = {{{0, 0}, 0}, {{5, 0}, 1}, {{12, 0}, 0}};
  CHECK(*bernoulli_cylinder_measure(three).exact_value() == Rational(1, 8));
  const SiteBit clash[] = {{{4, 0}, 0}, {{4, 0}, 1}};
  CHECK(*bernoulli_cylinder_measure(clash).exact_value() == 0);
  const SiteBit repeat[] = {{{4, 0}, 1}, {{4, 0}, 1}};
  CHECK(*bernoulli_cylinder_measure(repeat).exact_value() == Rational(1, 2));
}

TEST_CASE("homoclinic_decay examples") {
  const auto b0 = CylinderConstraint::coordinate({0, 0}, 0);
  CHECK(*homoclinic_decay(b0, 0, 0).exact_value() == 1);
  for (std::int64_t n : {1, 2, 3, 10, 1000}) CHECK(*homoclinic_decay(b0, 0, n).exact_value() == 0);

  const CylinderConstraint b012({{0, 0}, {1, 0}, {2, 0}}, {0, 1, 1});
  CHECK(*homoclinic_decay(b012, 0, 5).exact_value() == 0);
  // While the conjugated flip still hits the window the flip moves all mass.
  CHECK(*homoclinic_decay(b012, 0, 1).exact_value() == Rational(1, 4));
}

TEST_CASE("property: shift invariance") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<Site, std::uint8_t> pts;
    const std::size_t n = 1 + rng() % 8;
    while (pts.size() < n)
      pts[{static_cast<std::int64_t>(rng() % 20), static_cast<std::int64_t>(rng() % 20)}] = rng() % 2;
    std::vector<Site> sites;
    std::vector<std::uint8_t> bits;
    for (auto& [s, b] : pts) {
      sites.push_back(s);
      bits.push_back(b);
    }
    const CylinderConstraint c(sites, bits);
    const Site by{static_cast<std::int64_t>(rng() % 1000) - 500, static_cast<std::int64_t>(rng() % 1000) - 500};
    CHECK(cylinder_measure(kLedrappier, c).value == cylinder_measure(kLedrappier, c.translated(by)).value);
  }
}

TEST_CASE("property: adding a requirement never increases the measure") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SiteBit> reqs;
    Dyadic prev = Dyadic::one();
    for (int step = 0; step < 8; ++step) {
      reqs.push_back({{static_cast<std::int64_t>(rng() % 9), static_cast<std::int64_t>(rng() % 9)},
                      static_cast<std::uint8_t>(rng() % 2)});
      const auto merged = CylinderConstraint::merge(reqs);
      const Dyadic cur = merged ? cylinder_measure(kLedrappier, *merged).value : Dyadic::zero();
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("property: Frobenius relation at every dyadic scale") {
  for (unsigned k = 0; k <= 20; ++k) {
    const auto sites = five_point(std::int64_t{1} << k);
    const auto rel = relation_space(kLedrappier, sites);
    CAPTURE(k);
    REQUIRE(rel.size() == 1);
    CHECK(rel[0].to_string() == "11111");
    if (k <= 7) CHECK(relation_space(kLedrappier, sites, MeasureMethod::Window) == rel);
  }
}
