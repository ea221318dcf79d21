#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "pbmrf/elimination.hpp"
#include "pbmrf/errors.hpp"
#include "pbmrf/philox.hpp"
#include "pbmrf/pomm.hpp"

using namespace pbmrf;

namespace {

PartiallyOrderedMarkovModel pomm_of(const MarkovRandomField& m, std::size_t nu,
                                    EliminationMode mode = EliminationMode::exact) {
  EliminationConfig cfg;
  cfg.mode = mode;
  cfg.nu = nu;
  cfg.pomm_variant = PommVariant::post_approximation;
  return *eliminate(m.energy, cfg).pomm;
}

}  // namespace

TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) ==
        C{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U});
  CHECK(Philox4x32::block({0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU},
                          {0xffffffffU, 0xffffffffU}) ==
        C{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU});
  CHECK(Philox4x32::block({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U},
                          {0xa4093822U, 0x299f31d0U}) ==
        C{0xd16cfe09U, 0x94fdccebU, 0x5001e420U, 0x24126ea1U});
  PhiloxStream s(7, 3);
  for (int k = 0; k < 1000; ++k) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("independence POMM marginals") {
  const double theta = 0.6;
  const auto pomm = pomm_of(build_independence({2, 3}, theta), 1);
  const auto batch = sample(pomm, 12345, 100000);
  const double p = std::exp(theta) / (1 + std::exp(theta));
  const double sd = std::sqrt(p * (1 - p) / 100000.0);
  for (std::size_t v = 0; v < 6; ++v) {
    double freq = 0.0;
    for (const auto& x : batch.states) freq += x[v];
    freq /= 100000.0;
    CHECK(std::abs(freq - p) < 3 * sd + 1e-12);
  }
}

TEST_CASE("degenerate conditionals") {
  std::vector<ConditionalTable> tables{{0, {1}, {1.0, 1.0}}, {1, {}, {1.0}}};
  const PartiallyOrderedMarkovModel pomm(2, tables);
  const auto batch = sample(pomm, 1, 50);
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    CHECK(batch.states[k] == State{1, 1});
    CHECK(batch.log_densities[k] == 0.0);
  }
}

TEST_CASE("malformed POMMs are rejected") {
  CHECK_THROWS_AS(sample(PartiallyOrderedMarkovModel(1, {{0, {}, {1.5}}}), 1, 1), InvalidArgument);
  CHECK_THROWS_AS(sample(PartiallyOrderedMarkovModel(2, {{0, {}, {0.5}}, {1, {0}, {0.5, 0.5}}}), 1, 1),
                  InvalidArgument);
  CHECK_THROWS_AS(sample(PartiallyOrderedMarkovModel(2, {{0, {}, {0.5}}}), 1, 1), InvalidArgument);
}

TEST_CASE("log density") {
  const PartiallyOrderedMarkovModel single(1, {{0, {}, {0.5}}});
  CHECK(log_density(single, State{0}) == doctest::Approx(std::log(0.5)));
  CHECK(log_density(single, State{1}) == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(log_density(single, State{0, 1}), InvalidArgument);

  const auto pomm = pomm_of(build_ising({3, 4}, 0.5), 2, EliminationMode::approximate);
  const auto batch = sample(pomm, 9, 200);
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    CHECK(batch.log_densities[k] == log_density(pomm, batch.states[k]));
  }
  double total = 0.0;
  oracle::for_each_state(12, [&](const State& x, std::uint64_t) {
    total += std::exp(log_density(pomm, x));
  });
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("sampling is reproducible and stream-indexed") {
  const auto pomm = pomm_of(build_ising({3, 3}, 0.4), 9);
  const auto a = sample(pomm, 77, 500);
  const auto b = sample(pomm, 77, 500);
  CHECK(a.states == b.states);
  CHECK(a.log_densities == b.log_densities);
  const auto prefix = sample(pomm, 77, 10);
  for (std::size_t k = 0; k < 10; ++k) CHECK(prefix.states[k] == a.states[k]);
  const auto other = sample(pomm, 78, 500);
  CHECK(other.states != a.states);
}

TEST_CASE("exact POMM sampling matches the distribution") {
  const auto m = build_ising({3, 3}, 0.4);
  const auto p = oracle::brute_distribution(m.energy);
  const auto pomm = pomm_of(m, 9);
  const std::size_t count = 200000;
  const auto batch = sample(pomm, 2024, count);
  const double tv = oracle::total_variation(oracle::histogram(batch.states, 9), p);
  MESSAGE("TV " << tv << " expected about " << oracle::expected_tv(p, count));
  CHECK(tv < 2 * oracle::expected_tv(p, count));
}

TEST_CASE("sample export formats") {
  const auto pomm = pomm_of(build_ising({2, 5}, 0.4), 3, EliminationMode::approximate);
  const auto batch = sample(pomm, 5, 40);
  std::stringstream bin;
  write_samples_binary(bin, batch, 10);
  CHECK(bin.str().size() == 16 + 40 * (2 + 8));
  const auto back = read_samples_binary(bin);
  CHECK(back.states == batch.states);
  CHECK(back.log_densities == batch.log_densities);
  std::stringstream text;
  write_samples_text(text, batch);
  std::string first;
  std::getline(text, first);
  CHECK(first.substr(0, 11).find(' ') == 10);
}
