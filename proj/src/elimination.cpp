#include "pbmrf/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pbmrf/errors.hpp"

namespace pbmrf {

namespace {

double log1p_exp(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

std::size_t position_mask(const InteractionSet& s, const std::vector<Index>& vars) {
  std::size_t mask = 0;
  for (Index v : s) {
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    mask |= std::size_t{1} << static_cast<std::size_t>(it - vars.begin());
  }
  return mask;
}

// phi(x_N) = sum_{L contains i} beta^L prod_{L \ {i}} x, tabulated over N.
std::vector<double> conditional_table(const std::vector<Term>& terms, Index i,
                                      const std::vector<Index>& vars) {
  std::vector<double> table(std::size_t{1} << vars.size(), 0.0);
  for (const auto& t : terms) table[position_mask(t.set.without(i), vars)] += t.beta;
  zeta_transform(table);
  return table;
}

std::vector<Index> resolve_order(const EliminationConfig& cfg, std::size_t n) {
  std::vector<Index> order = cfg.order;
  if (order.empty()) {
    order.resize(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = static_cast<Index>(k);
    return order;
  }
  std::vector<char> seen(n, 0);
  if (order.size() != n) throw InvalidArgument("elimination order is not a permutation");
  for (Index v : order) {
    if (v >= n || seen[v]) throw InvalidArgument("elimination order is not a permutation");
    seen[v] = 1;
  }
  return order;
}

struct MaxStep {
  Index variable;
  std::vector<Index> vars;
  std::vector<double> phi;
};

// Fill-in of exact elimination on the interaction graph, checked before any
// tables are built so an infeasible order fails at once.
void check_exact_width(const PseudoBooleanFunction& f, const std::vector<Index>& order) {
  std::vector<std::set<Index>> adj(f.num_variables());
  f.for_each_term([&](const InteractionSet& s, double) {
    for (Index a : s) {
      for (Index b : s) {
        if (a != b) adj[a].insert(b);
      }
    }
  });
  for (std::size_t step = 0; step < order.size(); ++step) {
    const Index i = order[step];
    const auto nbrs = std::move(adj[i]);
    if (nbrs.size() > kMaxTableVariables) {
      throw ResourceLimitExceeded("elimination step " + std::to_string(step) + " (variable " +
                                  std::to_string(i) + "): eta = " + std::to_string(nbrs.size()) +
                                  " exceeds the dense-table cap of " +
                                  std::to_string(kMaxTableVariables));
    }
    for (Index a : nbrs) {
      adj[a].erase(i);
      adj[a].insert(nbrs.begin(), nbrs.end());
      adj[a].erase(a);
    }
  }
}

}  // namespace

std::string_view mode_name(EliminationMode mode) {
  switch (mode) {
    case EliminationMode::exact: return "exact";
    case EliminationMode::approximate: return "approx";
    case EliminationMode::lower_bound: return "lower";
    case EliminationMode::upper_bound: return "upper";
  }
  return "unknown";
}

std::size_t EliminationResult::max_eta() const {
  std::size_t m = 0;
  for (const auto& s : per_step) m = std::max(m, s.eta_before);
  return m;
}

PartnerChoice choose_partner(const PseudoBooleanFunction& f, Index i,
                             const std::vector<Index>& candidates) {
  if (candidates.empty()) throw InvalidArgument("choose_partner: no candidates");
  PartnerChoice best{candidates.front(), false};
  double best_score = std::numeric_limits<double>::infinity();
  bool all_equal = true;
  double first_score = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Index j = candidates[c];
    const auto pair = InteractionSet::from_unsorted({i, j});
    double a0 = f.coefficient(pair);
    double pos = 0.0;
    double neg = 0.0;
    for (const auto& child : f.children(pair)) {
      const double b = f.coefficient(child);
      (b > 0.0 ? pos : neg) += b;
    }
    // max over x of |a0 + sum_k b_k x_k| is reached with all positive (or all
    // negative) terms switched on.
    const double score = 0.25 * std::max(std::abs(a0 + pos), std::abs(a0 + neg));
    if (c == 0) {
      first_score = score;
    } else if (score != first_score) {
      all_equal = false;
    }
    if (score < best_score || (score == best_score && j < best.partner)) {
      best_score = score;
      best.partner = j;
    }
  }
  best.fallback = candidates.size() > 1 && all_equal;
  return best;
}

Index choose_split(const MaxTerm& term) {
  const auto vars = term.variables();
  if (vars.empty()) throw InvalidArgument("choose_split: term mentions no variables");
  // Members of the original interaction order 4 + depth or less; the factor
  // and the removed partner account for |factor| + 1 of that order.
  const std::size_t limit = 4 + term.depth;
  const std::size_t fixed = term.factor.size() + 1;
  Index best = vars.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (Index s : vars) {
    double constant = 0.0;
    double pos = 0.0;
    double neg = 0.0;
    for (const auto& t : term.members) {
      if (fixed + t.set.size() > limit || !t.set.contains(s)) continue;
      if (t.set.size() == 1) {
        constant += t.beta;
      } else {
        (t.beta > 0.0 ? pos : neg) += t.beta;
      }
    }
    const double score = std::max(std::abs(constant + pos), std::abs(constant + neg));
    if (score < best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

EliminationResult eliminate(const PseudoBooleanFunction& energy, const EliminationConfig& cfg) {
  const std::size_t n = energy.num_variables();
  const auto order = resolve_order(cfg, n);
  const bool exact = cfg.mode == EliminationMode::exact;
  if (!exact && cfg.nu < 1) throw InvalidArgument("nu must be at least 1");
  const bool max_mode = cfg.marginal == Marginal::max;
  const std::size_t table_cap = cfg.table_cap.value_or(cfg.nu);
  PruneCompensation compensation = PruneCompensation::none;
  if (cfg.mode == EliminationMode::upper_bound) compensation = PruneCompensation::upper;
  if (cfg.mode == EliminationMode::lower_bound) compensation = PruneCompensation::lower;

  EliminationResult result;
  result.mode = cfg.mode;
  result.marginal = cfg.marginal;
  result.nu = cfg.nu;
  std::vector<ConditionalTable> tables;
  std::vector<MaxStep> max_steps;

  if (exact) check_exact_width(energy, order);

  PseudoBooleanFunction f = energy;
  for (std::size_t step = 0; step < order.size(); ++step) {
    const Index i = order[step];
    StepDiagnostics diag;
    diag.variable = i;
    auto nbrs = f.neighbours(i);
    diag.eta_before = nbrs.size();

    auto record = [&](const std::vector<Term>& terms) {
      check_table_arity(nbrs.size(), "POMM table");
      auto phi = conditional_table(terms, i, nbrs);
      for (double& v : phi) v = sigmoid(v);
      tables.push_back({i, nbrs, std::move(phi)});
    };

    if (cfg.pomm_variant == PommVariant::pre_approximation) {
      record(f.extract(InteractionSet{i}, SubsetFamily::containing));
    }

    if (!exact) {
      while (nbrs.size() > cfg.nu) {
        const auto choice = choose_partner(f, i, nbrs);
        diag.partners.push_back(choice.partner);
        if (choice.fallback) ++diag.fallbacks;
        if (cfg.mode == EliminationMode::approximate) {
          f = soir(f, i, choice.partner).first;
        } else {
          const auto dir = cfg.mode == EliminationMode::upper_bound ? BoundDirection::upper
                                                                     : BoundDirection::lower;
          f = bound_remove_pair(f, i, choice.partner, dir, table_cap, choose_split);
        }
        nbrs = f.neighbours(i);
      }
    }
    diag.eta_after = nbrs.size();

    if (nbrs.size() > kMaxTableVariables) {
      throw ResourceLimitExceeded("elimination step " + std::to_string(step) + " (variable " +
                                  std::to_string(i) + "): eta = " + std::to_string(nbrs.size()) +
                                  " exceeds the dense-table cap of " +
                                  std::to_string(kMaxTableVariables));
    }

    const auto removed = f.remove_containing(InteractionSet{i});
    if (cfg.pomm_variant == PommVariant::post_approximation) record(removed);

    auto phi = conditional_table(removed, i, nbrs);
    if (max_mode) max_steps.push_back({i, nbrs, phi});
    for (double& v : phi) v = max_mode ? std::max(0.0, v) : log1p_exp(v);
    mobius_transform(phi);
    accumulate_interactions(f, nbrs, phi);
    f.prune(kPruneTolerance, compensation);
    result.per_step.push_back(std::move(diag));
  }

  result.log_value = f.constant();
  if (cfg.pomm_variant != PommVariant::none) {
    result.pomm = PartiallyOrderedMarkovModel(n, std::move(tables));
  }
  if (max_mode) {
    State x(n, 0);
    for (auto it = max_steps.rbegin(); it != max_steps.rend(); ++it) {
      std::size_t mask = 0;
      for (std::size_t k = 0; k < it->vars.size(); ++k) {
        if (x[it->vars[k]]) mask |= std::size_t{1} << k;
      }
      x[it->variable] = it->phi[mask] > 0.0 ? 1 : 0;
    }
    result.argmax = std::move(x);
  }
  return result;
}

EliminationResult eliminate_exact_sum(const MarkovRandomField& mrf, EliminationConfig cfg) {
  cfg.mode = EliminationMode::exact;
  cfg.marginal = Marginal::sum;
  return eliminate(mrf.energy, cfg);
}

EliminationResult eliminate_approx(const MarkovRandomField& mrf, EliminationConfig cfg) {
  cfg.mode = EliminationMode::approximate;
  cfg.marginal = Marginal::sum;
  return eliminate(mrf.energy, cfg);
}

EliminationResult eliminate_bound(const MarkovRandomField& mrf, EliminationConfig cfg) {
  if (cfg.mode != EliminationMode::lower_bound && cfg.mode != EliminationMode::upper_bound) {
    throw InvalidArgument("eliminate_bound: mode must be lower_bound or upper_bound");
  }
  cfg.marginal = Marginal::sum;
  return eliminate(mrf.energy, cfg);
}

EliminationResult eliminate_max(const PseudoBooleanFunction& energy, EliminationConfig cfg) {
  cfg.marginal = Marginal::max;
  return eliminate(energy, cfg);
}

MomentResult moment(const PseudoBooleanFunction& energy, const PseudoBooleanFunction& log_psi,
                    EliminationConfig cfg) {
  cfg.marginal = Marginal::sum;
  cfg.pomm_variant = PommVariant::none;
  const auto tilted = add_scaled(energy, log_psi, 1.0, 1.0);
  MomentResult out;
  if (cfg.mode == EliminationMode::lower_bound || cfg.mode == EliminationMode::upper_bound) {
    auto lower = cfg;
    lower.mode = EliminationMode::lower_bound;
    auto upper = cfg;
    upper.mode = EliminationMode::upper_bound;
    const double num_lo = eliminate(tilted, lower).log_value;
    const double num_hi = eliminate(tilted, upper).log_value;
    const double c_lo = eliminate(energy, lower).log_value;
    const double c_hi = eliminate(energy, upper).log_value;
    out.lower = std::exp(num_lo - c_hi);
    out.upper = std::exp(num_hi - c_lo);
    out.estimate = std::exp(0.5 * ((num_lo - c_hi) + (num_hi - c_lo)));
    return out;
  }
  out.estimate = std::exp(eliminate(tilted, cfg).log_value - eliminate(energy, cfg).log_value);
  return out;
}

std::string result_to_json(const EliminationResult& result) {
  std::string out = "{\"mode\": \"" + std::string(mode_name(result.mode)) + "\", \"marginal\": \"" +
                    (result.marginal == Marginal::max ? "max" : "sum") +
                    "\", \"nu\": " + std::to_string(result.nu) +
                    ", \"log_value\": " + format_real(result.log_value);
  if (result.argmax) {
    out += ", \"argmax\": \"";
    for (auto b : *result.argmax) out += b ? '1' : '0';
    out += "\"";
  }
  out += ", \"steps\": [";
  for (std::size_t k = 0; k < result.per_step.size(); ++k) {
    const auto& s = result.per_step[k];
    if (k) out += ", ";
    out += "{\"variable\": " + std::to_string(s.variable) +
           ", \"eta_before\": " + std::to_string(s.eta_before) +
           ", \"eta_after\": " + std::to_string(s.eta_after) + ", \"partners\": [";
    for (std::size_t p = 0; p < s.partners.size(); ++p) {
      if (p) out += ", ";
      out += std::to_string(s.partners[p]);
    }
    out += "], \"fallbacks\": " + std::to_string(s.fallbacks) + "}";
  }
  out += "]}";
  return out;
}

}  // namespace pbmrf
