#include <doctest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pbmrf/errors.hpp"
#include "pbmrf/mrf_models.hpp"

using namespace pbmrf;

namespace {

// Class of a 2x2 configuration read directly off the cells.
int square_class_by_hand(int tl, int tr, int bl, int br) {
  const int ones = tl + tr + bl + br;
  if (ones == 0 || ones == 4) return 0;
  if (ones == 1 || ones == 3) return 1;
  return tl == br ? 3 : 2;
}

int cross_class_by_hand(int c, int up, int right, int down, int left) {
  int cells[5] = {c, up, right, down, left};
  int ones = c + up + right + down + left;
  if (ones > 2) {
    for (int& v : cells) v = 1 - v;
    ones = 5 - ones;
  }
  if (ones == 0) return 0;
  if (ones == 1) return cells[0] ? 1 : 2;
  if (cells[0]) return 4;
  return (cells[1] && cells[3]) || (cells[2] && cells[4]) ? 5 : 3;
}

int rotation_class_by_hand(int tl, int tr, int bl, int br) {
  const int ones = tl + tr + bl + br;
  if (ones == 2) return tl == br ? 3 : 2;
  return ones == 0 ? 0 : ones == 1 ? 1 : ones == 3 ? 4 : 5;
}

double direct_energy(const MarkovRandomField& m, const State& x) {
  const auto& lat = m.lattice;
  const auto& p = m.params;
  double u = 0.0;
  auto at = [&](std::size_t r, std::size_t c) { return static_cast<int>(x[lat.node(r, c)]); };
  switch (m.family) {
    case ModelFamily::independence:
      for (auto v : x) u += p[0] * v;
      break;
    case ModelFamily::ising:
      for (auto [a, b] : lattice_edges(lat)) u += p[0] * (x[a] == x[b]);
      break;
    case ModelFamily::autologistic:
      for (auto [a, b] : lattice_edges(lat)) u += p[0] * (x[a] != x[b]) + p[1] * (x[a] && x[b]);
      break;
    case ModelFamily::higher_order:
      for (std::size_t r = 0; r + 1 < lat.rows; ++r) {
        for (std::size_t c = 0; c + 1 < lat.cols; ++c) {
          u += p[square_class_by_hand(at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1))];
        }
      }
      for (std::size_t r = 1; r + 1 < lat.rows; ++r) {
        for (std::size_t c = 1; c + 1 < lat.cols; ++c) {
          u += p[4 + cross_class_by_hand(at(r, c), at(r - 1, c), at(r, c + 1), at(r + 1, c),
                                         at(r, c - 1))];
        }
      }
      break;
    case ModelFamily::rotinv2x2:
      for (std::size_t r = 0; r + 1 < lat.rows; ++r) {
        for (std::size_t c = 0; c + 1 < lat.cols; ++c) {
          const int k = rotation_class_by_hand(at(r, c), at(r, c + 1), at(r + 1, c),
                                               at(r + 1, c + 1));
          if (k > 0) u += p[static_cast<std::size_t>(k - 1)];
        }
      }
      break;
  }
  return u;
}

std::vector<MarkovRandomField> sample_models(std::mt19937_64& rng, const LatticeSpec& lat) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<MarkovRandomField> out;
  out.push_back(build_ising(lat, u(rng)));
  out.push_back(build_independence(lat, u(rng)));
  out.push_back(build_autologistic(lat, u(rng), u(rng)));
  std::array<double, 10> pot{};
  for (double& v : pot) v = u(rng);
  out.push_back(build_higher_order(lat, pot));
  std::array<double, 5> th{};
  for (double& v : th) v = u(rng);
  out.push_back(build_2x2_rotinv(lat, th));
  return out;
}

}  // namespace

TEST_CASE("configuration classes") {
  CHECK(square_class_count() == 4);
  CHECK(cross_class_count() == 6);
  for (unsigned code = 0; code < 16; ++code) {
    const int b[4] = {int(code & 1), int(code >> 1 & 1), int(code >> 2 & 1), int(code >> 3 & 1)};
    CHECK(square_class(code) == square_class_by_hand(b[0], b[1], b[2], b[3]));
    CHECK(rotation_class(code) == rotation_class_by_hand(b[0], b[1], b[2], b[3]));
  }
  for (unsigned code = 0; code < 32; ++code) {
    int b[5];
    for (int k = 0; k < 5; ++k) b[k] = static_cast<int>(code >> k & 1U);
    CHECK(cross_class(code) == cross_class_by_hand(b[0], b[1], b[2], b[3], b[4]));
  }
  std::vector<int> mult(6, 0);
  for (unsigned code = 0; code < 16; ++code) ++mult[static_cast<std::size_t>(rotation_class(code))];
  CHECK(mult == std::vector<int>{1, 4, 4, 2, 4, 1});
}

TEST_CASE("ising small cases") {
  const double theta = 0.7;
  const auto m = build_ising({1, 2}, theta);
  CHECK(oracle::brute_log_partition(m.energy) ==
        doctest::Approx(std::log(2 * std::exp(theta) + 2)).epsilon(1e-14));
  const auto sq = build_ising({2, 2}, 0.4);
  CHECK(sq.energy.evaluate(State{1, 1, 1, 1}) == doctest::Approx(4 * 0.4));
  const auto flat = build_ising({3, 3}, 0.0);
  CHECK(flat.energy.size() == 1);
  CHECK(oracle::brute_log_partition(flat.energy) == doctest::Approx(9 * std::log(2.0)));
}

TEST_CASE("independence and autologistic small cases") {
  CHECK(oracle::brute_log_partition(build_independence({1, 3}, 1.0).energy) ==
        doctest::Approx(3 * std::log(1 + std::numbers::e)));
  CHECK(oracle::brute_log_partition(build_independence({2, 2}, 0.0).energy) ==
        doctest::Approx(4 * std::log(2.0)));
  const double t0 = 0.3;
  const double t1 = -0.8;
  CHECK(oracle::brute_log_partition(build_autologistic({1, 2}, t0, t1).energy) ==
        doctest::Approx(std::log(1 + 2 * std::exp(t0) + std::exp(t1))));
  CHECK(oracle::brute_log_partition(build_autologistic({2, 3}, 0, 0).energy) ==
        doctest::Approx(6 * std::log(2.0)));
}

TEST_CASE("zero potentials give zero energy") {
  const auto m = build_higher_order({4, 4}, {});
  CHECK(m.energy.size() == 1);
  CHECK(m.energy.constant() == 0.0);
  const auto r = build_2x2_rotinv({3, 3}, {});
  CHECK(r.energy.size() == 1);
}

TEST_CASE("single square reads the class potential") {
  std::array<double, 10> pot{0.5, -0.25, 1.5, -1.0, 7, 7, 7, 7, 7, 7};
  const auto m = build_higher_order({2, 2}, pot);
  oracle::for_each_state(4, [&](const State& x, std::uint64_t) {
    CHECK(m.energy.evaluate(x) ==
          doctest::Approx(pot[square_class_by_hand(x[0], x[1], x[2], x[3])]));
  });
}

TEST_CASE("polynomial energies equal direct clique sums") {
  std::mt19937_64 rng(31);
  for (const LatticeSpec lat : {LatticeSpec{4, 4}, LatticeSpec{3, 5}, LatticeSpec{1, 4}}) {
    for (const auto& m : sample_models(rng, lat)) {
      m.graph.validate();
      for (int trial = 0; trial < 100; ++trial) {
        State x(lat.size());
        for (auto& v : x) v = static_cast<std::uint8_t>(rng() & 1U);
        CHECK(m.energy.evaluate(x) == doctest::Approx(direct_energy(m, x)).epsilon(1e-12));
      }
      for (const auto& t : m.energy.terms()) {
        if (t.beta != 0.0) CHECK(m.graph.is_clique(t.set));
      }
    }
  }
}

TEST_CASE("colour inversion symmetry") {
  std::mt19937_64 rng(37);
  std::array<double, 10> pot{};
  for (double& v : pot) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (const auto& m : {build_ising({3, 4}, 0.9), build_higher_order({3, 4}, pot)}) {
    oracle::for_each_state(12, [&](const State& x, std::uint64_t) {
      State y(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = 1 - x[k];
      CHECK(m.energy.evaluate(x) == doctest::Approx(m.energy.evaluate(y)).epsilon(1e-12));
    });
  }
}

TEST_CASE("first-order pair counts") {
  for (std::size_t r = 1; r <= 5; ++r) {
    for (std::size_t c = 1; c <= 5; ++c) {
      CHECK(lattice_edges({r, c}).size() == r * (c - 1) + c * (r - 1));
    }
  }
  const auto m = build_higher_order({5, 5}, {});
  CHECK(m.graph.neighbours[m.lattice.node(2, 2)].size() == 12);
  CHECK(lattice_crosses({5, 5}).size() == 9);
  CHECK(lattice_squares({5, 5}).size() == 16);
}

TEST_CASE("model config parsing") {
  const auto cfg = model_config_from_json(
      R"({"family": "autologistic", "rows": 3, "cols": 2, "params": [0.1, -0.2]})");
  CHECK(cfg.family == ModelFamily::autologistic);
  CHECK(cfg.lattice.size() == 6);
  CHECK(build_model(cfg).params == std::vector<double>{0.1, -0.2});
  CHECK_THROWS_AS(model_config_from_json(R"({"family": "potts", "rows": 1, "cols": 1, "params": []})"),
                  InvalidArgument);
  CHECK_THROWS_AS(model_config_from_json(R"({"family": "ising", "rows": 0, "cols": 1, "params": [1]})"),
                  InvalidArgument);
  CHECK_THROWS_AS(model_config_from_json(R"({"family": "ising", "rows": 2, "cols": 2, "params": []})"),
                  InvalidArgument);
  CHECK_THROWS_AS(model_config_from_json("not json"), InvalidArgument);
}
