#pragma once

// Partially ordered Markov models: a product of per-variable conditionals
// P(x_i = 1 | x_{D_i}), sampled backwards through the elimination order.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pbmrf/pbf_core.hpp"

namespace pbmrf {

struct ConditionalTable {
  Index variable = 0;
  std::vector<Index> dependencies;
  // P(x_variable = 1 | dependencies), bit k of the index = k-th dependency.
  std::vector<double> prob_one;

  double probability_one(std::span<const std::uint8_t> x) const;
};

class PartiallyOrderedMarkovModel {
 public:
  PartiallyOrderedMarkovModel() = default;
  PartiallyOrderedMarkovModel(std::size_t num_variables, std::vector<ConditionalTable> tables);

  std::size_t num_variables() const noexcept { return n_; }
  /// Tables in elimination order; sampling runs through them backwards.
  const std::vector<ConditionalTable>& tables() const noexcept { return tables_; }

  /// Throws InvalidArgument unless every variable has exactly one table,
  /// every dependency is eliminated later, and every entry lies in [0, 1].
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<ConditionalTable> tables_;
};

struct SampleBatch {
  std::uint64_t seed = 0;
  std::vector<State> states;
  std::vector<double> log_densities;
};

/// Draws `count` states. Draw k uses the Philox stream first_stream + k under
/// key `seed`, so any draw can be reproduced on its own.
SampleBatch sample(const PartiallyOrderedMarkovModel& pomm, std::uint64_t seed,
                   std::size_t count, std::uint64_t first_stream = 0);

/// sum_i ln P(x_i | x_{D_i}).
double log_density(const PartiallyOrderedMarkovModel& pomm, std::span<const std::uint8_t> x);

/// One state per line as a 0/1 string, a space, and the log density.
void write_samples_text(std::ostream& out, const SampleBatch& batch);

/// 16-byte header ("PBMS", uint32 n, uint64 count, little endian) followed
/// per state by ceil(n/8) bytes of bits (LSB first) and a float64 log density.
void write_samples_binary(std::ostream& out, const SampleBatch& batch, std::size_t n);
SampleBatch read_samples_binary(std::istream& in);

}  // namespace pbmrf
