#pragma once

// Variable elimination over pseudo-Boolean energies: exact, capped
// least-squares approximation, and certified lower/upper bounds, with sum or
// max marginalisation.

#include <optional>
#include <string>
#include <vector>

#include "pbmrf/mrf_models.hpp"
#include "pbmrf/pbf_approx.hpp"
#include "pbmrf/pbf_core.hpp"
#include "pbmrf/pomm.hpp"

namespace pbmrf {

enum class EliminationMode { exact, approximate, lower_bound, upper_bound };
enum class Marginal { sum, max };
enum class PommVariant { none, pre_approximation, post_approximation };

std::string_view mode_name(EliminationMode mode);

struct EliminationConfig {
  // Empty means 0, 1, ..., n-1.
  std::vector<Index> order;
  // Neighbourhood cap; ignored in exact mode.
  std::size_t nu = 1;
  EliminationMode mode = EliminationMode::exact;
  Marginal marginal = Marginal::sum;
  PommVariant pomm_variant = PommVariant::none;
  // Widest max term tabulated directly when building bounds; defaults to nu.
  std::optional<std::size_t> table_cap;
};

struct StepDiagnostics {
  Index variable = 0;
  std::size_t eta_before = 0;
  std::size_t eta_after = 0;
  std::vector<Index> partners;
  // Number of partner choices where every candidate scored the same.
  std::size_t fallbacks = 0;
};

struct EliminationResult {
  EliminationMode mode = EliminationMode::exact;
  Marginal marginal = Marginal::sum;
  std::size_t nu = 0;
  double log_value = 0.0;
  std::optional<State> argmax;
  std::optional<PartiallyOrderedMarkovModel> pomm;
  std::vector<StepDiagnostics> per_step;

  std::size_t max_eta() const;
};

/// Eliminates every variable of `energy`. Sum mode returns ln sum_x exp U(x)
/// (or its approximation/bound); max mode returns max_x U(x) and an argmax.
EliminationResult eliminate(const PseudoBooleanFunction& energy, const EliminationConfig& cfg);

EliminationResult eliminate_exact_sum(const MarkovRandomField& mrf, EliminationConfig cfg = {});
EliminationResult eliminate_approx(const MarkovRandomField& mrf, EliminationConfig cfg);
EliminationResult eliminate_bound(const MarkovRandomField& mrf, EliminationConfig cfg);
EliminationResult eliminate_max(const PseudoBooleanFunction& energy, EliminationConfig cfg);

struct PartnerChoice {
  Index partner = 0;
  // True when all candidates had equal scores and the smallest index won.
  bool fallback = false;
};

/// Partner j for removing {i, j}: minimises (1/4) max_x |h(x)| where h keeps
/// the pair coefficient and third-order terms of x_i x_j h(x).
PartnerChoice choose_partner(const PseudoBooleanFunction& f, Index i,
                             const std::vector<Index>& candidates);

/// Split variable for a max term: the variable whose truncated cofactor has
/// the smallest range, keeping members up to order four plus the depth.
Index choose_split(const MaxTerm& term);

struct MomentResult {
  double estimate = 0.0;
  // Present in bound modes.
  std::optional<double> lower;
  std::optional<double> upper;
};

/// E[psi(x)] under exp(U)/c, with ln psi given as a pseudo-Boolean function.
/// Bound modes return [exp(ln S_L - ln c_U), exp(ln S_U - ln c_L)] with the
/// midpoint of the logs as estimate.
MomentResult moment(const PseudoBooleanFunction& energy, const PseudoBooleanFunction& log_psi,
                    EliminationConfig cfg);

/// {"mode", "nu", "log_value", "steps": [{"variable", "eta_before", ...}]}.
std::string result_to_json(const EliminationResult& result);

}  // namespace pbmrf
