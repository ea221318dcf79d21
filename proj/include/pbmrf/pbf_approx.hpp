#pragma once

// Least-squares approximation and one-sided bounds for pseudo-Boolean
// functions.

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pbmrf/pbf_core.hpp"

namespace pbmrf {

struct ApproximationReport {
  std::vector<InteractionSet> removed;
  // Error sum of squares over all 2^n states; empty when it does not fit in a
  // double or would need a table above the cap.
  std::optional<double> sse;
  std::optional<Index> partner;
};

enum class BoundDirection { upper, lower };

/// Largest n accepted by least_squares_project.
inline constexpr std::size_t kMaxProjectionVariables = 15;

/// Minimiser of the error sum of squares over functions represented on
/// `target`, found by solving the normal equations directly. Meant as a
/// reference for the closed-form operators; cost is cubic in |target|.
PseudoBooleanFunction least_squares_project(const PseudoBooleanFunction& f,
                                            std::span<const InteractionSet> target);

/// Projects f onto S minus {lambda}, where lambda has no superset in S.
std::pair<PseudoBooleanFunction, ApproximationReport> remove_single_interaction(
    const PseudoBooleanFunction& f, const InteractionSet& lambda);

/// Removes every set of S outside `target` one at a time, highest degree
/// first, ties broken by the lexicographically smallest set.
std::pair<PseudoBooleanFunction, ApproximationReport> remove_interactions(
    const PseudoBooleanFunction& f, std::span<const InteractionSet> target);

/// Projection removing every interaction that contains both i and j.
std::pair<PseudoBooleanFunction, ApproximationReport> soir(const PseudoBooleanFunction& f,
                                                           Index i, Index j);

/// sum over all x in {0,1}^n of (f(x) - g(x))^2; n <= 25.
double sse(const PseudoBooleanFunction& f, const PseudoBooleanFunction& g);

/// factor(x) * max{0, sum_k beta_k prod_{rest_k} x} (min for lower bounds)
/// still waiting to be canonicalised. `depth` counts the splits made so far.
struct MaxTerm {
  InteractionSet factor;
  std::vector<Term> members;
  std::size_t depth = 0;

  /// Variables mentioned by the members, sorted.
  std::vector<Index> variables() const;
};

/// Picks the split variable for a max term that is too wide to tabulate. Must
/// return one of term.variables().
using SplitChooser = std::function<Index(const MaxTerm& term)>;

/// Returns a bound on f with no interaction containing both i and j. The
/// x_i x_j part is replaced by x_i * max{0, h} (min for lower bounds) and h is
/// split on chooser-selected variables until each piece mentions at most
/// table_cap variables. Without a chooser the smallest variable is split.
PseudoBooleanFunction bound_remove_pair(const PseudoBooleanFunction& f, Index i, Index j,
                                        BoundDirection dir, std::size_t table_cap,
                                        const SplitChooser& chooser = {});

}  // namespace pbmrf
