#pragma once

// Binary Markov random fields on rectangular lattices with free boundaries.
// Nodes are numbered row-major: node (r, c) has index r * cols + c.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pbmrf/pbf_core.hpp"

namespace pbmrf {

struct NeighbourhoodSystem {
  std::size_t n = 0;
  std::vector<std::vector<Index>> neighbours;

  explicit NeighbourhoodSystem(std::size_t nodes = 0) : n(nodes), neighbours(nodes) {}

  void connect(Index a, Index b);
  bool adjacent(Index a, Index b) const;
  /// True when every pair of members is adjacent.
  bool is_clique(const InteractionSet& s) const;
  /// Throws InvalidArgument on asymmetry, self loops or unsorted lists.
  void validate() const;
};

struct LatticeSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  Index node(std::size_t r, std::size_t c) const noexcept {
    return static_cast<Index>(r * cols + c);
  }
};

enum class ModelFamily { ising, higher_order, independence, autologistic, rotinv2x2 };

std::string_view family_name(ModelFamily family);
ModelFamily parse_family(std::string_view name);
/// Number of parameters each family takes.
std::size_t family_arity(ModelFamily family);

struct MarkovRandomField {
  LatticeSpec lattice;
  NeighbourhoodSystem graph;
  PseudoBooleanFunction energy;
  ModelFamily family = ModelFamily::ising;
  std::vector<double> params;
};

/// U(x) = theta * sum over horizontal and vertical pairs of I(x_i = x_j).
MarkovRandomField build_ising(const LatticeSpec& lat, double theta);

/// U(x) = theta * sum_i x_i.
MarkovRandomField build_independence(const LatticeSpec& lat, double theta);

/// U(x) = theta0 * sum_{i~j} I(x_i != x_j) + theta1 * sum_{i~j} x_i x_j.
MarkovRandomField build_autologistic(const LatticeSpec& lat, double theta0, double theta1);

/// Potentials on every 2x2 square and every five-node cross, by configuration
/// class; see square_class and cross_class for the class order.
MarkovRandomField build_higher_order(const LatticeSpec& lat, const std::array<double, 10>& pot);

/// Potentials on every 2x2 square by rotation class, all-zero class fixed at 0.
MarkovRandomField build_2x2_rotinv(const LatticeSpec& lat, const std::array<double, 5>& theta);

MarkovRandomField build_model(ModelFamily family, const LatticeSpec& lat,
                              const std::vector<double>& params);

/// 2x2 configuration code: bit 0 top-left, 1 top-right, 2 bottom-left,
/// 3 bottom-right.
///
/// Classes under rotation, reflection and colour inversion:
///   0 all equal, 1 one differs, 2 two adjacent, 3 two diagonal.
int square_class(unsigned code);
std::size_t square_class_count();

/// Cross configuration code: bit 0 centre, 1 up, 2 right, 3 down, 4 left.
///
/// Classes under rotation, reflection and colour inversion:
///   0 all equal, 1 centre differs from all arms, 2 one arm differs,
///   3 two adjacent arms differ, 4 centre and one arm differ,
///   5 two opposite arms differ.
int cross_class(unsigned code);
std::size_t cross_class_count();

/// 2x2 classes under rotation only: 0 all zero, 1 one on, 2 two adjacent on,
/// 3 two diagonal on, 4 three on, 5 all on.
int rotation_class(unsigned code);

/// First-order pairs (i, j), i < j, horizontal then vertical per node.
std::vector<std::pair<Index, Index>> lattice_edges(const LatticeSpec& lat);

/// Top-left corners of all 2x2 squares and centres of all full crosses.
std::vector<std::array<Index, 4>> lattice_squares(const LatticeSpec& lat);
std::vector<std::array<Index, 5>> lattice_crosses(const LatticeSpec& lat);

struct ModelConfig {
  ModelFamily family = ModelFamily::ising;
  LatticeSpec lattice;
  std::vector<double> params;
};

/// {"family": ..., "rows": int, "cols": int, "params": [reals]}.
ModelConfig model_config_from_json(std::string_view text);
MarkovRandomField build_model(const ModelConfig& cfg);

}  // namespace pbmrf
