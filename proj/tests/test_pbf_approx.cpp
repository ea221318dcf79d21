#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "pbmrf/errors.hpp"
#include "pbmrf/pbf_approx.hpp"

using namespace pbmrf;

namespace {

std::vector<InteractionSet> complement_of_pair(const PseudoBooleanFunction& f, Index i, Index j) {
  std::vector<InteractionSet> out;
  for (const auto& t : f.extract(InteractionSet::from_unsorted({i, j}), SubsetFamily::complement)) {
    out.push_back(t.set);
  }
  return out;
}

std::pair<Index, Index> random_pair(std::mt19937_64& rng, std::size_t n) {
  const auto i = static_cast<Index>(rng() % n);
  auto j = static_cast<Index>(rng() % (n - 1));
  if (j >= i) ++j;
  return {i, j};
}

}  // namespace

TEST_CASE("projection onto S itself is the identity") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_pbf(rng, 5, 3, 0.5);
    const auto all = oracle::sets_of(f);
    CHECK(oracle::max_coef_diff(least_squares_project(f, all), f) < 1e-10);
  }
}

TEST_CASE("projection of a single pair interaction") {
  PseudoBooleanFunction f(2);
  f.add({0, 1}, 2.0);
  const std::vector<InteractionSet> target{{}, {0}, {1}};
  const auto g = least_squares_project(f, target);
  CHECK(g.constant() == doctest::Approx(-0.5));
  CHECK(g.coefficient({0}) == doctest::Approx(1.0));
  CHECK(g.coefficient({1}) == doctest::Approx(1.0));
  CHECK_FALSE(g.contains({0, 1}));
}

TEST_CASE("projection preconditions") {
  PseudoBooleanFunction f(3);
  f.add({0, 1}, 1.0);
  const std::vector<InteractionSet> not_dense{{}, {0, 1}};
  CHECK_THROWS_AS(least_squares_project(f, not_dense), InvalidArgument);
  const std::vector<InteractionSet> outside{{}, {2}};
  CHECK_THROWS_AS(least_squares_project(f, outside), InvalidArgument);
  const std::vector<InteractionSet> root{{}};
  CHECK_THROWS_AS(least_squares_project(PseudoBooleanFunction(16), root), ResourceLimitExceeded);
}

TEST_CASE("projection satisfies the normal equations") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = oracle::random_pbf(rng, 4, 4, 0.5);
    const auto target = oracle::random_dense_subset(rng, f, 0.5);
    const auto g = least_squares_project(f, target);
    const auto diff = add_scaled(f, g, 1.0, -1.0);
    for (const auto& lam : target) {
      double residual = 0.0;
      oracle::for_each_state(4, [&](const State& x, std::uint64_t) {
        if (lam.active_in(x)) residual += oracle::poly_value(diff, x);
      });
      CHECK(std::abs(residual) < 1e-10);
    }
    // Perturbing any retained coefficient cannot lower the error.
    const double base = sse(f, g);
    for (const auto& lam : target) {
      for (double step : {-1e-3, 1e-3}) {
        auto h = g;
        h.add(lam, step);
        CHECK(sse(f, h) >= base);
      }
    }
  }
}

TEST_CASE("single removal") {
  SUBCASE("zero coefficient leaves the rest unchanged") {
    PseudoBooleanFunction f(3);
    f.add({0}, 1.5);
    f.add({0, 1, 2}, 0.0);
    const auto [g, report] = remove_single_interaction(f, {0, 1, 2});
    CHECK(report.sse == 0.0);
    CHECK(g.coefficient({0}) == 1.5);
    CHECK_FALSE(g.contains({0, 1, 2}));
  }
  SUBCASE("third order term") {
    PseudoBooleanFunction f(3);
    f.add({0, 1, 2}, 4.0);
    const auto [g, report] = remove_single_interaction(f, {0, 1, 2});
    CHECK(g.coefficient({0, 1}) == 2.0);
    CHECK(g.coefficient({0, 2}) == 2.0);
    CHECK(g.coefficient({1, 2}) == 2.0);
    CHECK(g.coefficient({0}) == -1.0);
    CHECK(g.coefficient({2}) == -1.0);
    CHECK(g.constant() == 0.5);
    CHECK(*report.sse == doctest::Approx(sse(f, g)));
  }
  SUBCASE("preconditions") {
    PseudoBooleanFunction f(3);
    f.add({0, 1}, 1.0);
    CHECK_THROWS_AS(remove_single_interaction(f, {0}), InvalidArgument);
    CHECK_THROWS_AS(remove_single_interaction(f, {0, 2}), InvalidArgument);
  }
  SUBCASE("matches the projection oracle") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
      const auto f = oracle::random_pbf(rng, 4, 4, 0.5);
      std::vector<InteractionSet> maximal;
      for (const auto& t : f.terms()) {
        if (!t.set.empty() && f.children(t.set).empty()) maximal.push_back(t.set);
      }
      const auto lam = maximal[rng() % maximal.size()];
      auto target = oracle::sets_of(f);
      std::erase(target, lam);
      const auto [g, report] = remove_single_interaction(f, lam);
      CHECK(oracle::max_coef_diff(g, least_squares_project(f, target)) < 1e-10);
      CHECK(*report.sse == doctest::Approx(sse(f, g)).epsilon(1e-10));
    }
  }
}

TEST_CASE("soir") {
  SUBCASE("pair example") {
    PseudoBooleanFunction f(2);
    f.add({0, 1}, 2.0);
    const auto [g, report] = soir(f, 0, 1);
    CHECK(g.constant() == -0.5);
    CHECK(g.coefficient({0}) == 1.0);
    CHECK(g.coefficient({1}) == 1.0);
    oracle::for_each_state(2, [&](const State& x, std::uint64_t) {
      CHECK(std::abs(f.evaluate(x) - g.evaluate(x)) == 0.5);
    });
    CHECK(*report.sse == 1.0);
    CHECK(sse(f, g) == 1.0);
    CHECK(report.partner == Index{1});
  }
  SUBCASE("no interaction containing the pair") {
    PseudoBooleanFunction f(3);
    f.add({0, 2}, 1.0);
    f.add({1}, -2.0);
    const auto [g, report] = soir(f, 0, 1);
    CHECK(oracle::max_coef_diff(f, g) == 0.0);
    CHECK(report.sse == 0.0);
  }
  SUBCASE("random instances against projection and the error formula") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 40; ++trial) {
      auto f = oracle::random_pbf(rng, 5, 4, 0.5);
      const auto [i, j] = random_pair(rng, 5);
      f.add(InteractionSet::from_unsorted({i, j}), 0.25);
      const auto [g, report] = soir(f, i, j);
      const auto proj = least_squares_project(f, complement_of_pair(f, i, j));
      CHECK(oracle::max_coef_diff(g, proj) < 1e-10);
      const auto removed = f.extract(InteractionSet::from_unsorted({i, j}),
                                     SubsetFamily::containing);
      std::set<long long> magnitudes;
      oracle::for_each_state(5, [&](const State& x, std::uint64_t) {
        double h = 0.0;
        for (const auto& t : removed) {
          if (t.set.without(i).without(j).active_in(x)) h += t.beta;
        }
        const double factor = x[i] * x[j] + 0.25 - 0.5 * x[i] - 0.5 * x[j];
        CHECK(std::abs(factor) == 0.25);
        CHECK(std::abs(f.evaluate(x) - g.evaluate(x) - factor * h) < 1e-10);
        magnitudes.insert(std::llround(std::abs(f.evaluate(x) - g.evaluate(x)) * 1e8));
      });
      CHECK(*report.sse == doctest::Approx(sse(f, g)).epsilon(1e-10));
      CHECK(magnitudes.size() <= std::size_t{1} << (report.removed.size() > 1 ? 3 : 0));
    }
  }
}

TEST_CASE("sse") {
  std::mt19937_64 rng(8);
  const auto f = oracle::random_pbf(rng, 4, 3, 0.5);
  CHECK(sse(f, f) == 0.0);
  CHECK_THROWS_AS(sse(PseudoBooleanFunction(26), PseudoBooleanFunction(26)), ResourceLimitExceeded);
}

TEST_CASE("sequential removal equals one projection") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = oracle::random_pbf(rng, 5, 4, 0.5);
    const auto target = oracle::random_dense_subset(rng, f, 0.6);
    const auto [g, report] = remove_interactions(f, target);
    CHECK(oracle::max_coef_diff(g, least_squares_project(f, target)) < 1e-10);
    CHECK(*report.sse == doctest::Approx(sse(f, g)).epsilon(1e-9));
  }
}

TEST_CASE("bound_remove_pair") {
  SUBCASE("pair example") {
    PseudoBooleanFunction f(2);
    f.add({0, 1}, 2.0);
    const auto up = bound_remove_pair(f, 0, 1, BoundDirection::upper, 4);
    CHECK(up.coefficient({0}) == 2.0);
    CHECK(up.constant() == 0.0);
    CHECK(up.coefficient({1}) == 0.0);
    const auto lo = bound_remove_pair(f, 0, 1, BoundDirection::lower, 4);
    for (const auto& t : lo.terms()) CHECK(t.beta == 0.0);
  }
  SUBCASE("nonnegative pair coefficient and zero higher terms") {
    PseudoBooleanFunction f(4);
    f.add({0, 1, 2}, 0.0);
    f.add({0, 1, 3}, 0.0);
    f.add({0, 1}, 1.5);
    f.add({2, 3}, -0.7);
    const auto up = bound_remove_pair(f, 0, 1, BoundDirection::upper, 4);
    PseudoBooleanFunction expect(4);
    expect.add({0}, 1.5);
    expect.add({2, 3}, -0.7);
    CHECK(oracle::max_coef_diff(up, expect) < 1e-15);
  }
  SUBCASE("exhaustive sandwich with and without splitting") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 5 + trial % 4;
      auto f = oracle::random_pbf(rng, n, 4, 0.4);
      const auto [i, j] = random_pair(rng, n);
      const auto pair = InteractionSet::from_unsorted({i, j});
      f.add(pair, 0.3);
      for (std::size_t cap : {std::size_t{8}, std::size_t{1}, std::size_t{0}}) {
        const auto up = bound_remove_pair(f, i, j, BoundDirection::upper, cap);
        const auto lo = bound_remove_pair(f, i, j, BoundDirection::lower, cap);
        const auto up_full = bound_remove_pair(f, i, j, BoundDirection::upper, 8);
        const auto lo_full = bound_remove_pair(f, i, j, BoundDirection::lower, 8);
        CHECK(up.extract(pair, SubsetFamily::containing).empty());
        CHECK(lo.extract(pair, SubsetFamily::containing).empty());
        oracle::for_each_state(n, [&](const State& x, std::uint64_t) {
          const double v = oracle::poly_value(f, x);
          CHECK(oracle::poly_value(lo, x) <= v + 1e-12);
          CHECK(v <= oracle::poly_value(up, x) + 1e-12);
          CHECK(oracle::poly_value(up_full, x) <= oracle::poly_value(up, x) + 1e-12);
          CHECK(oracle::poly_value(lo, x) <= oracle::poly_value(lo_full, x) + 1e-12);
        });
      }
    }
  }
  SUBCASE("split chooser must name a variable of the term") {
    PseudoBooleanFunction f(4);
    f.add({0, 1, 2}, 1.0);
    f.add({0, 1, 3}, 1.0);
    CHECK_THROWS_AS(
        bound_remove_pair(f, 0, 1, BoundDirection::upper, 0, [](const MaxTerm&) { return 0U; }),
        InvalidArgument);
    std::vector<std::size_t> depths;
    bound_remove_pair(f, 0, 1, BoundDirection::upper, 0, [&](const MaxTerm& t) {
      depths.push_back(t.depth);
      return t.variables().back();
    });
    CHECK(depths.front() == 0);
  }
}
