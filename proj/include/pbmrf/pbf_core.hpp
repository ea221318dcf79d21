#pragma once

// Sparse pseudo-Boolean functions f(x) = sum_{L in S} beta^L prod_{k in L} x_k
// over binary vectors x in {0,1}^n, stored on a dense interaction set S.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pbmrf {

using Index = std::uint32_t;
using State = std::vector<std::uint8_t>;

/// Largest number of variables a dense value table may carry (2^25 reals).
inline constexpr std::size_t kMaxTableVariables = 25;

/// Coefficients below this magnitude are dropped when they have no superset.
inline constexpr double kPruneTolerance = 1e-12;

/// Throws ResourceLimitExceeded when a table over `arity` variables is too big.
void check_table_arity(std::size_t arity, std::string_view context);

/// A strictly increasing list of variable indices naming one interaction.
class InteractionSet {
 public:
  InteractionSet() = default;
  InteractionSet(std::initializer_list<Index> indices);
  explicit InteractionSet(std::vector<Index> indices);

  /// Sorts the indices; duplicates are rejected.
  static InteractionSet from_unsorted(std::vector<Index> indices);

  std::span<const Index> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  Index operator[](std::size_t k) const noexcept { return indices_[k]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  bool contains(Index i) const noexcept;
  bool is_subset_of(const InteractionSet& other) const noexcept;
  bool intersects(const InteractionSet& other) const noexcept;

  InteractionSet with(Index i) const;
  InteractionSet without(Index i) const;
  InteractionSet set_union(const InteractionSet& other) const;
  InteractionSet set_difference(const InteractionSet& other) const;

  /// True when every listed variable is on in x.
  bool active_in(std::span<const std::uint8_t> x) const noexcept;

  std::string to_string() const;

  friend bool operator==(const InteractionSet&, const InteractionSet&) = default;

 private:
  std::vector<Index> indices_;
};

/// Orders by cardinality, then lexicographically.
bool canonical_less(const InteractionSet& a, const InteractionSet& b) noexcept;

struct InteractionSetHash {
  std::size_t operator()(const InteractionSet& s) const noexcept;
};

struct Term {
  InteractionSet set;
  double beta = 0.0;
};

enum class SubsetFamily {
  containing,  // {L in S : lambda subset of L}
  complement,  // S minus the containing family
  disjoint,    // {L in S : L and lambda disjoint}
};

/// How a dropped coefficient is folded into the constant during pruning so
/// that an upper (lower) bound stays an upper (lower) bound.
enum class PruneCompensation { none, upper, lower };

/// Sparse binary polynomial on a dense interaction set, stored as a DAG whose
/// node L has child L + {k} for every k not in L that is present in S.
///
/// An exact-match hash index gives O(|L|) coefficient lookup; the child links
/// are used to clip out the family of sets containing a given set.
class PseudoBooleanFunction {
 public:
  explicit PseudoBooleanFunction(std::size_t num_variables = 0);

  static PseudoBooleanFunction from_terms(std::size_t num_variables,
                                          std::span<const Term> terms);

  std::size_t num_variables() const noexcept { return n_; }
  /// Number of stored interaction sets |S|, including zero-valued ones.
  std::size_t size() const noexcept { return index_.size(); }

  bool contains(const InteractionSet& set) const;
  double coefficient(const InteractionSet& set) const;
  double constant() const;

  /// Adds beta to the coefficient of `set`, inserting the set and all its
  /// subsets when missing.
  void add(const InteractionSet& set, double beta);
  void scale(double factor);

  double evaluate(std::span<const std::uint8_t> x) const;

  /// All stored terms in canonical order.
  std::vector<Term> terms() const;
  std::vector<Term> extract(const InteractionSet& lambda, SubsetFamily mode) const;

  /// Removes the family of sets containing lambda and returns it in canonical
  /// order. The remaining set stays dense.
  std::vector<Term> remove_containing(const InteractionSet& lambda);

  /// Variables sharing at least one stored interaction with i.
  std::vector<Index> neighbours(Index i) const;
  std::vector<InteractionSet> children(const InteractionSet& set) const;
  std::size_t degree() const noexcept;

  /// Drops nodes with |beta| < tol that have no surviving superset. Returns
  /// the amount added to the constant by `compensation`.
  double prune(double tol = kPruneTolerance,
               PruneCompensation compensation = PruneCompensation::none);

  /// Throws std::logic_error if density, DAG links or the index disagree.
  void check_invariants() const;

  template <class Fn>
  void for_each_term(Fn&& fn) const {
    for (const auto& node : nodes_) {
      if (node.live) fn(node.set, node.beta);
    }
  }

 private:
  using NodeId = std::uint32_t;

  struct Node {
    InteractionSet set;
    double beta = 0.0;
    std::vector<NodeId> children;
    bool live = false;
  };

  std::optional<NodeId> find(const InteractionSet& set) const;
  NodeId ensure(const InteractionSet& set);
  void collect_descendants(NodeId root, std::vector<NodeId>& out) const;
  void erase_nodes(const std::vector<NodeId>& ids);

  std::size_t n_ = 0;
  std::vector<Node> nodes_;
  std::vector<NodeId> free_;
  std::unordered_map<InteractionSet, NodeId, InteractionSetHash> index_;
};

/// a*f + b*g on the dense closure of S_f and S_g, pruned.
PseudoBooleanFunction add_scaled(const PseudoBooleanFunction& f,
                                 const PseudoBooleanFunction& g, double a, double b);

/// All 2^m values of a function of m listed variables. Bit k of a table
/// index holds the value of the k-th listed variable.
class DenseLocalFunction {
 public:
  DenseLocalFunction() = default;
  DenseLocalFunction(std::vector<Index> variables, std::vector<double> values);

  template <class Fn>
  static DenseLocalFunction tabulate(std::vector<Index> variables, Fn&& fn) {
    check_table_arity(variables.size(), "DenseLocalFunction::tabulate");
    std::vector<double> values(std::size_t{1} << variables.size());
    for (std::size_t mask = 0; mask < values.size(); ++mask) values[mask] = fn(mask);
    return DenseLocalFunction(std::move(variables), std::move(values));
  }

  std::span<const Index> variables() const noexcept { return variables_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t arity() const noexcept { return variables_.size(); }
  double operator[](std::size_t mask) const noexcept { return values_[mask]; }

  /// Table index of the listed variables' values in a full state.
  std::size_t mask_of(std::span<const std::uint8_t> x) const;
  double at(std::span<const std::uint8_t> x) const { return values_[mask_of(x)]; }

 private:
  std::vector<Index> variables_;
  std::vector<double> values_;
};

/// In place: table of values -> interaction coefficients (Moebius inversion).
void mobius_transform(std::span<double> table);
/// In place: interaction coefficients -> table of values (subset sums).
void zeta_transform(std::span<double> table);

/// Unique coefficients reproducing every entry of `table`, as a function of
/// `num_variables` variables (defaults to 1 + the largest listed index).
PseudoBooleanFunction interactions_from_values(const DenseLocalFunction& table,
                                               std::optional<std::size_t> num_variables = {});

/// Adds scale * sum_A coeffs[A] * prod_{k in A} x_{vars[k]} * prod_{k in monomial} x_k
/// to f, where A runs over table masks. Exact zeros are skipped.
void accumulate_interactions(PseudoBooleanFunction& f, std::span<const Index> vars,
                             std::span<const double> coeffs, const InteractionSet& monomial = {},
                             double scale = 1.0);

/// Value table of f over `variables`; f may mention no other variable.
DenseLocalFunction values_from_interactions(const PseudoBooleanFunction& f,
                                            std::vector<Index> variables);

/// {"n": int, "terms": [{"set": [...], "beta": real}, ...]} in canonical
/// order with 17 significant digits.
std::string to_json(const PseudoBooleanFunction& f);
PseudoBooleanFunction pbf_from_json(std::string_view text);

/// "%.17g" formatting used by every serialised real.
std::string format_real(double value);

}  // namespace pbmrf
