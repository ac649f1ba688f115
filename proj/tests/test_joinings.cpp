#include "doctest.h"

#include <random>

#include "mixlab/joinings.hpp"

using namespace mixlab;

namespace {

std::vector<Site> five_point(std::int64_t s) { return {{0, 0}, {s, 0}, {-s, 0}, {0, s}, {0, -s}}; }

const std::vector<Event> kBitCells{CylinderConstraint::coordinate({0, 0}, 0), CylinderConstraint::coordinate({0, 0}, 1)};

Partition random_partition(std::mt19937_64& rng, std::size_t d) {
  std::vector<std::int64_t> raw(d);
  std::int64_t total = 0;
  for (auto& r : raw) total += (r = 1 + static_cast<std::int64_t>(rng() % 5));
  std::vector<Rational> w;
  for (auto r : raw) w.emplace_back(r, total);
  return Partition(w);
}

// A mean-zero function with small rational values.
std::vector<Rational> random_mean_zero(std::mt19937_64& rng, const Partition& p) {
  const std::size_t d = p.cells();
  std::vector<Rational> h(d);
  Rational mean = 0;
  for (std::size_t a = 0; a < d; ++a) {
    h[a] = Rational(static_cast<std::int64_t>(rng() % 7) - 3, 4);
    mean += p[a] * h[a];
  }
  for (auto& x : h) x -= mean;
  return h;
}

// mu x mu x mu times (1 + eps h1 h2 h3): pairwise independent by construction.
JoiningTensor pairwise_independent(std::mt19937_64& rng, const Partition& p) {
  const std::size_t d = p.cells();
  const auto h1 = random_mean_zero(rng, p), h2 = random_mean_zero(rng, p), h3 = random_mean_zero(rng, p);
  Rational peak = 0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = 0; c < d; ++c) peak = std::max(peak, Rational(abs(h1[a] * h2[b] * h3[c])));
  const Rational eps = peak == 0 ? Rational(0) : Rational(1, 2) / peak;
  std::vector<Rational> e;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = 0; c < d; ++c) e.push_back(p[a] * p[b] * p[c] * (1 + eps * h1[a] * h2[b] * h3[c]));
  return JoiningTensor(3, d, e);
}

std::vector<Rational> indicator(std::uint64_t set_mask, std::size_t d) {
  std::vector<Rational> f(d);
  for (std::size_t a = 0; a < d; ++a) f[a] = (set_mask >> a) & 1U;
  return f;
}

std::vector<Rational> kron(const std::vector<std::vector<Rational>>& fs) {
  std::vector<Rational> out{1};
  for (const auto& f : fs) {
    std::vector<Rational> next;
    for (const auto& x : out)
      for (const auto& y : f) next.push_back(x * y);
    out = std::move(next);
  }
  return out;
}

Rational pairing(const Partition& p, const std::vector<Rational>& f, const std::vector<Rational>& g) {
  Rational s = 0;
  for (std::size_t a = 0; a < p.cells(); ++a) s += p[a] * f[a] * g[a];
  return s;
}

}  // namespace

TEST_CASE("partition and tensor invariants") {
  CHECK_THROWS_AS(Partition({Rational(1, 2), Rational(1, 3)}), JoiningError);
  CHECK_THROWS_AS(Partition({Rational(1), Rational(0)}), JoiningError);
  CHECK_THROWS_AS(JoiningTensor(2, 2, {Rational(1, 2), 0, 0, Rational(1, 4)}), JoiningError);
  CHECK_THROWS_AS(JoiningTensor(2, 2, {Rational(1, 2), Rational(1, 2), 0, 0}), JoiningError);  // marginals differ
  CHECK_THROWS_AS(JoiningTensor(2, 2, {1, 1, -1, 0}), JoiningError);
  CHECK_THROWS_AS(JoiningTensor(2, 2, {1, 0, 0}), std::invalid_argument);
  const auto par = JoiningTensor::parity(5);
  CHECK(par.partition() == Partition::uniform(2));
  const std::size_t even[] = {1, 1, 0, 0, 0}, odd[] = {1, 0, 0, 0, 0};
  CHECK(par.at(even) == Rational(1, 16));
  CHECK(par.at(odd) == 0);
}

TEST_CASE("limit_joining examples") {
  const AlgebraicOracle alg;
  const auto family = generate_shifts(DyadicFamily{five_point(1), 1, 8}, 4, 8);
  const auto t = limit_joining(alg, kBitCells, family);
  CHECK(t.matches(JoiningTensor::parity(5)));
  CHECK_FALSE(t.estimated());

  const BernoulliOracle bern;
  const auto sep = generate_shifts(ArithmeticFamily{{1, 3}, 1, 1, {1, 0}}, 2, 5);
  CHECK(limit_joining(bern, kBitCells, sep).matches(JoiningTensor::product(Partition::uniform(2), 3)));

  const auto custom = JoiningTensor::parity(3);
  const SyntheticOracle constant([&](const Constellation& c) {
    std::vector<std::size_t> idx;
    for (const Event& e : c.events) idx.push_back(std::get<CylinderConstraint>(e).bits()[0]);
    if (idx.size() == 1) return MeasureValue::exact(Rational(1, 2));
    return MeasureValue::exact(custom.at(idx));
  });
  CHECK(limit_joining(constant, kBitCells, sep).matches(custom));

  // Drifting oracle: never stabilizes, the error carries the trace.
  try {
    const SyntheticOracle drift([](const Constellation& c) {
      const auto m = c.shifts[1].x;
      const Rational base = Dyadic::pow2_inv(static_cast<std::uint32_t>(c.size())).to_rational();
      const auto& first = std::get<CylinderConstraint>(c.events[0]);
      const auto& second = std::get<CylinderConstraint>(c.events[1]);
      const bool agree = first.bits()[0] == second.bits()[0];
      return MeasureValue::exact(base + (agree ? Rational(1, 8 * (m + 1)) : Rational(-1, 8 * (m + 1))));
    });
    (void)limit_joining(drift, kBitCells, sep);
    FAIL("expected JoiningLimitError");
  } catch (const JoiningLimitError& e) {
    CHECK(e.trace.size() == sep.size());
    CHECK(e.trace[0].size() == 8);
  }
}

TEST_CASE("marginal examples") {
  const auto par = JoiningTensor::parity(5);
  for (std::size_t drop = 0; drop < 5; ++drop) {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < 5; ++i)
      if (i != drop) axes.push_back(i);
    const auto m = marginal(par, axes);
    CHECK(m.order() == 4);
    for (const auto& e : m.entries()) CHECK(e == Rational(1, 16));
  }

  std::mt19937_64 rng(3);
  const auto p = random_partition(rng, 3);
  const auto prod = JoiningTensor::product(p, 4);
  CHECK(marginal(prod, {0, 2}).matches(JoiningTensor::product(p, 2)));
  const auto t2 = marginal(pairwise_independent(rng, p), {0, 1});
  const auto one = marginal(t2, {1});
  CHECK(one.entries() == p.weights());

  CHECK_THROWS_AS(marginal(prod, {}), std::invalid_argument);
  CHECK_THROWS_AS(marginal(prod, {0, 1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(marginal(prod, {0, 0}), std::invalid_argument);
}

TEST_CASE("classify examples") {
  const auto c5 = classify(JoiningTensor::parity(5));
  CHECK_FALSE(c5.is_product);
  CHECK(c5.max_product_marginal == 4);
  CHECK(c5.label() == "M(4,5)");

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_partition(rng, 2 + rng() % 3);
    const auto c = classify(JoiningTensor::product(p, 2 + rng() % 3));
    CHECK(c.is_product);
    CHECK(c.label() == "trivial");
  }

  // Perturb the uniform 3-tensor by +-delta with the sign of the parity: the
  // 2-marginals do not move, the tensor is no longer product.
  std::vector<Rational> e(8);
  for (std::size_t f = 0; f < 8; ++f) e[f] = Rational(1, 8) + (std::popcount(f) % 2 ? Rational(-1, 32) : Rational(1, 32));
  const auto c3 = classify(JoiningTensor(3, 2, e));
  CHECK_FALSE(c3.is_product);
  CHECK(c3.max_product_marginal == 2);

  // Identity joining: not even pairwise independent.
  const auto diag = classify(JoiningTensor(2, 2, {Rational(1, 2), 0, 0, Rational(1, 2)}));
  CHECK(diag.max_product_marginal == 1);
  CHECK(diag.label() == "M(1,2)");
}

TEST_CASE("markov_from_joining examples") {
  std::mt19937_64 rng(5);
  const auto p = random_partition(rng, 3);
  const auto avg = markov_from_joining(JoiningTensor::product(p, 3));
  CHECK(avg.positive());
  CHECK(avg.stochastic());
  for (std::uint64_t s1 = 0; s1 < 8; ++s1)
    for (std::uint64_t s2 = 0; s2 < 8; ++s2) {
      const auto f = indicator(s1, 3), g = indicator(s2, 3);
      const Rational expect = pairing(p, f, std::vector<Rational>(3, 1)) * pairing(p, g, std::vector<Rational>(3, 1));
      for (const auto& v : avg.apply(kron({f, g}))) CHECK(v == expect);
    }
  CHECK(mean_zero_norm(avg) == doctest::Approx(0.0).epsilon(1e-12));

  // Parity: P(chi x chi) = chi for the sign function chi.
  const auto par = markov_from_joining(JoiningTensor::parity(3));
  const std::vector<Rational> chi{1, -1};
  CHECK(par.apply(kron({chi, chi})) == chi);
  CHECK(mean_zero_norm(par) == doctest::Approx(1.0));

  // Identity joining: P(f x 1) = f.
  const auto id = markov_from_joining(JoiningTensor(2, 2, {Rational(1, 3), 0, 0, Rational(2, 3)}));
  const std::vector<Rational> f{Rational(5, 7), -2};
  CHECK(id.apply(f) == f);

  CHECK(mean_zero_adjoint_defect(par) == 0);
  CHECK(mean_zero_adjoint_defect(markov_from_joining(JoiningTensor(3, 2, {Rational(1, 2), 0, 0, 0, 0, 0, 0,
                                                                          Rational(1, 2)}))) > 0);
}

TEST_CASE("property: adjoint preserves the mean-zero subspace for pairwise-independent tensors") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_partition(rng, 2 + rng() % 4);
    CHECK(mean_zero_adjoint_defect(markov_from_joining(pairwise_independent(rng, p))) == 0);
  }
}

TEST_CASE("compose_P3 / compose_P5 examples") {
  std::mt19937_64 rng(9);
  const auto p = random_partition(rng, 3);
  const auto avg2 = markov_from_joining(JoiningTensor::product(p, 3));
  const auto avg3 = compose_P3(avg2);
  CHECK(avg3.matrix() == markov_from_joining(JoiningTensor::product(p, 4)).matrix());
  CHECK(compose_P5(avg3).matrix() == markov_from_joining(JoiningTensor::product(p, 6)).matrix());

  const auto par3 = compose_P3(markov_from_joining(JoiningTensor::parity(3)));
  CHECK(par3.matrix() == markov_from_joining(JoiningTensor::parity(4)).matrix());
  const std::vector<Rational> chi{1, -1};
  CHECK(par3.apply(kron({chi, chi, chi})) == chi);
  const auto par5 = compose_P5(par3);
  CHECK(par5.apply(kron({chi, chi, chi, chi, chi})) == chi);

  CHECK_THROWS_AS(compose_P3(par3), std::invalid_argument);
  CHECK_THROWS_AS(compose_P5(avg2), std::invalid_argument);
}

namespace {

struct Composed {
  Partition p;
  MarkovOperator p2, p3, p5;
  Composed(Partition part, MarkovOperator op)
      : p(std::move(part)), p2(std::move(op)), p3(compose_P3(p2)), p5(compose_P5(p3)) {}

  void check3(const std::vector<std::vector<Rational>>& a) const {
    const Rational lhs = pairing(p, p3.apply(kron({a[0], a[1], a[2]})), a[3]);
    const Rational rhs = pairing(p, p2.apply(kron({a[0], a[1]})), p2.apply(kron({a[2], a[3]})));
    CHECK(lhs == rhs);
  }
  void check5(const std::vector<std::vector<Rational>>& a) const {
    // (P5(1_A1 x ... x 1_A5), 1_A6) summed over the cells of the product set only.
    const std::size_t d = p.cells();
    std::vector<std::vector<std::size_t>> members(5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t c = 0; c < d; ++c)
        if (a[i][c] != 0) members[i].push_back(c);
    Rational lhs = 0;
    for (std::size_t out = 0; out < d; ++out) {
      if (a[5][out] == 0) continue;
      Rational row = 0;
      std::vector<std::size_t> pos(5, 0);
      bool empty = false;
      for (const auto& m : members) empty = empty || m.empty();
      while (!empty) {
        std::size_t col = 0;
        for (std::size_t i = 0; i < 5; ++i) col = col * d + members[i][pos[i]];
        row += p5.at(out, col);
        std::size_t i = 5;
        while (i > 0 && ++pos[i - 1] == members[i - 1].size()) pos[--i] = 0;
        if (i == 0) break;
      }
      lhs += p[out] * row;
    }
    const Rational rhs = pairing(p, p3.apply(kron({a[0], a[1], a[2]})), p3.apply(kron({a[3], a[4], a[5]})));
    CHECK(lhs == rhs);
  }
};

std::vector<std::vector<Rational>> indicators(std::uint64_t code, std::uint64_t base, std::size_t count,
                                              std::size_t d, bool singletons) {
  std::vector<std::vector<Rational>> a;
  for (std::size_t i = 0; i < count; ++i, code /= base)
    a.push_back(indicator(singletons ? 1ULL << (code % base) : code % base, d));
  return a;
}

}  // namespace

TEST_CASE("property: P3 and P5 satisfy their defining pairings") {
  std::mt19937_64 rng(31);
  for (std::size_t d : {2, 3}) {
    auto p = random_partition(rng, d);
    const Composed ops(p, markov_from_joining(pairwise_independent(rng, p)));
    const std::uint64_t subsets = 1ULL << d;
    // Every quadruple of unions of cells.
    for (std::uint64_t q = 0; q < ipow(subsets, 4); ++q) ops.check3(indicators(q, subsets, 4, d, false));
    // Sextuples: all unions for d = 2; for d = 3 all single cells, which span
    // every indicator tuple by multilinearity.
    if (d == 2)
      for (std::uint64_t q = 0; q < ipow(subsets, 6); ++q) ops.check5(indicators(q, subsets, 6, d, false));
    else
      for (std::uint64_t q = 0; q < ipow(d, 6); ++q) ops.check5(indicators(q, d, 6, d, true));
  }
  // 1000 random tuples for d up to 6.
  std::vector<Composed> ops;
  for (std::size_t d = 2; d <= 6; ++d) {
    auto p = random_partition(rng, d);
    ops.emplace_back(p, markov_from_joining(pairwise_independent(rng, p)));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const Composed& op = ops[static_cast<std::size_t>(trial) % ops.size()];
    const std::uint64_t subsets = 1ULL << op.p.cells();
    const auto a = indicators(rng() % ipow(subsets, 6), subsets, 6, op.p.cells(), false);
    op.check3(a);
    op.check5(a);
  }
}

TEST_CASE("chain_check examples") {
  const auto avg = chain_check(markov_from_joining(JoiningTensor::product(Partition::uniform(2), 3)));
  CHECK(avg.norm_p2 == doctest::Approx(0.0));
  CHECK(avg.norm_p3 == doctest::Approx(0.0));
  CHECK(avg.norm_p5 == doctest::Approx(0.0));
  CHECK(avg.holds());

  const auto par = chain_check(markov_from_joining(JoiningTensor::parity(3)));
  CHECK(par.norm_p2 > 0);
  CHECK(par.norm_p3 > 0);
  CHECK(par.norm_p5 > 0);
  CHECK(par.constant == 1.0);
  CHECK(par.holds());
  // d = 2: the mean-zero spaces are spanned by chi^{x k}; direct contraction.
  CHECK(par.norm_p2 == doctest::Approx(1.0));
  CHECK(par.norm_p5 == doctest::Approx(1.0));
}

TEST_CASE("property: chain inequalities on random pairwise-independent operators") {
  std::mt19937_64 rng(50);
  for (int seed = 0; seed < 50; ++seed) {
    const auto p = random_partition(rng, 2 + seed % 3);
    const auto r = chain_check(markov_from_joining(pairwise_independent(rng, p)));
    CHECK(r.holds());
    CHECK(r.constant == doctest::Approx(std::sqrt(static_cast<double>(p.cells() - 1))));
  }
}

TEST_CASE("mean_zero_norm matches the direct contraction for two cells") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_partition(rng, 2);
    const auto op = markov_from_joining(pairwise_independent(rng, p));
    // chi spans the mean-zero space; its norm squared is mu0 x0^2 + mu1 x1^2.
    const double m0 = to_double(p[0]), m1 = to_double(p[1]);
    const std::vector<double> chi{std::sqrt(m1 / m0), -std::sqrt(m0 / m1)};
    std::vector<Rational> chi2;
    for (double x : chi)
      for (double y : chi) chi2.push_back(from_double(x * y));
    const auto out = op.apply(chi2);
    const double out_norm = std::sqrt(m0 * std::pow(to_double(out[0]), 2) + m1 * std::pow(to_double(out[1]), 2));
    CHECK(mean_zero_norm(op) == doctest::Approx(out_norm).epsilon(1e-9));
  }
}

TEST_CASE("raise_order examples") {
  std::mt19937_64 rng(2);
  const auto p = random_partition(rng, 3);
  const auto avg = raise_order(markov_from_joining(JoiningTensor::product(p, 4)));
  CHECK(avg.tensor.matches(JoiningTensor::product(p, 6)));
  CHECK(avg.classification.is_product);

  const auto par = raise_order(markov_from_joining(JoiningTensor::parity(4)));
  CHECK(par.nonnegative);
  CHECK(par.normalized);
  CHECK(par.tensor.matches(JoiningTensor::parity(6)));
  CHECK(par.classification.label() == "M(5,6)");
  Rational total = 0;
  for (const auto& e : par.tensor.entries()) total += e;
  CHECK(total == 1);

  // A signed operator is not a joining operator: raise_order refuses it.
  std::vector<Rational> m(16, Rational(1, 8));
  m[0] = Rational(-1, 8);
  m[1] = Rational(3, 8);
  m[8] = Rational(3, 8);
  m[9] = Rational(-1, 8);
  CHECK_THROWS_AS(raise_order(MarkovOperator(Partition::uniform(2), 3, m)), JoiningError);
}

TEST_CASE("lower_order examples") {
  std::mt19937_64 rng(4);
  const auto p = random_partition(rng, 2);
  CHECK(lower_order(JoiningTensor::product(p, 5)).tensor.matches(JoiningTensor::product(p, 4)));

  const auto par = lower_order(JoiningTensor::parity(5));
  CHECK(par.tensor.matches(JoiningTensor::parity(4)));
  CHECK(par.classification.label() == "M(3,4)");

  // Pairing identity against the source on indicator tuples: with
  // P(A1 x A2)(b) = nu(A1, A2, b) / mu(b), nu2 equals the mu^p-weighted pairing.
  const auto t = JoiningTensor::parity(5);
  for (std::uint64_t q = 0; q < 256; ++q) {
    std::vector<std::vector<Rational>> a;
    for (int i = 0; i < 4; ++i) a.push_back(indicator((q >> (2 * i)) & 3U, 2));
    auto push = [&](const std::vector<Rational>& f, const std::vector<Rational>& g) {
      std::vector<Rational> out(8, 0);
      for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 2; ++y)
          for (std::size_t b = 0; b < 8; ++b) out[b] += f[x] * g[y] * t.entries()[(x * 2 + y) * 8 + b] * 8;
      return out;
    };
    const auto u = push(a[0], a[1]), v = push(a[2], a[3]);
    Rational expect = 0;
    for (std::size_t b = 0; b < 8; ++b) expect += Rational(1, 8) * u[b] * v[b];
    Rational got = 0;
    for (std::size_t f = 0; f < 16; ++f) {
      const auto idx = unflatten(f, 2, 4);
      got += par.tensor.entries()[f] * a[0][idx[0]] * a[1][idx[1]] * a[2][idx[2]] * a[3][idx[3]];
    }
    CHECK(got == expect);
  }

  CHECK_THROWS_AS(lower_order(JoiningTensor(3, 2, {Rational(1, 2), 0, 0, 0, 0, 0, 0, Rational(1, 2)})),
                  JoiningError);
}

TEST_CASE("intertwining_residual examples") {
  const PermutationSystem ident{{0, 1, 2, 3}, {0, 1, 2, 3}};
  std::mt19937_64 rng(6);
  const auto p = ident.partition();
  const auto any = markov_from_joining(pairwise_independent(rng, p));
  CHECK(intertwining_residual(ident, any) == doctest::Approx(0.0));

  // Cyclic rotation of 4 cells with the diagonal self-joining.
  const PermutationSystem cyc{{1, 2, 3, 0}, {0, 1, 2, 3}};
  std::vector<Rational> diag(64, 0);
  for (std::size_t a = 0; a < 4; ++a) diag[a * 16 + a * 4 + a] = Rational(1, 4);
  CHECK(intertwining_residual(cyc, markov_from_joining(JoiningTensor(3, 4, diag))) == doctest::Approx(0.0));

  // Shuffled: nu(a, a, s(a)) with a transposition s that does not commute with the rotation.
  const std::size_t s[] = {1, 0, 2, 3};
  std::vector<Rational> shuffled(64, 0);
  for (std::size_t a = 0; a < 4; ++a) shuffled[a * 16 + a * 4 + s[a]] = Rational(1, 4);
  CHECK(intertwining_residual(cyc, markov_from_joining(JoiningTensor(3, 4, shuffled))) > 0.1);

  // Cell {0,1} is split by T: 0 -> 1 stays, 1 -> 2 leaves.
  const PermutationSystem split{{1, 2, 3, 0}, {0, 0, 1, 1}};
  CHECK_THROWS_AS(split.cell_map(), JoiningError);
  CHECK_THROWS_AS(intertwining_residual(split, markov_from_joining(JoiningTensor::parity(3))), JoiningError);
}

TEST_CASE("tensor JSON round trip") {
  const auto t = JoiningTensor::parity(3);
  const auto j = tensor_to_json(t);
  CHECK(j["order"] == 3);
  CHECK(j["dims"] == nlohmann::json::array({2, 2, 2}));
  CHECK(j["entries"][0] == "1/4");
  CHECK(tensor_from_json(j).matches(t));
  CHECK(tensor_from_json(nlohmann::json::parse(R"({"order":2,"dims":[2,2],"entries":[0.25,0.25,"1/4",0.25]})"))
            .matches(JoiningTensor::product(Partition::uniform(2), 2)));
  CHECK_THROWS_AS(tensor_from_json(nlohmann::json::parse(R"({"order":2,"dims":[2,2]})")), std::invalid_argument);
  CHECK_THROWS_AS(tensor_from_json(nlohmann::json::parse(R"({"order":2,"dims":[2,3],"entries":[]})")),
                  std::invalid_argument);
  CHECK(classification_to_json(classify(JoiningTensor::parity(5)))["class"] == "M(4,5)");
}
