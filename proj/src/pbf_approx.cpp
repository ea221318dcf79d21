#include "pbmrf/pbf_approx.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

#include "pbmrf/errors.hpp"

namespace pbmrf {

namespace {

bool is_dense(std::span<const InteractionSet> sets) {
  std::unordered_set<InteractionSet, InteractionSetHash> lookup(sets.begin(), sets.end());
  if (!lookup.contains(InteractionSet{})) return false;
  for (const auto& s : sets) {
    for (Index k : s) {
      if (!lookup.contains(s.without(k))) return false;
    }
  }
  return true;
}

// Table positions of the variables in `vars` (sorted).
std::size_t mask_within(const InteractionSet& s, std::span<const Index> vars) {
  std::size_t mask = 0;
  for (Index v : s) {
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    mask |= std::size_t{1} << static_cast<std::size_t>(it - vars.begin());
  }
  return mask;
}

}  // namespace

PseudoBooleanFunction least_squares_project(const PseudoBooleanFunction& f,
                                            std::span<const InteractionSet> target) {
  const std::size_t n = f.num_variables();
  if (n > kMaxProjectionVariables) {
    throw ResourceLimitExceeded("least_squares_project: n = " + std::to_string(n) +
                                " exceeds " + std::to_string(kMaxProjectionVariables));
  }
  if (!is_dense(target)) throw InvalidArgument("least_squares_project: target set is not dense");
  for (const auto& s : target) {
    if (!f.contains(s)) {
      throw InvalidArgument("least_squares_project: " + s.to_string() + " is not in S");
    }
  }

  // Sum over x in Omega_lambda of prod_{Lambda} x_k is 2^{n - |lambda u Lambda|};
  // the common factor 2^n is dropped from both sides.
  const auto terms = f.terms();
  const auto m = static_cast<Eigen::Index>(target.size());
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& lam = target[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto& mu = target[static_cast<std::size_t>(c)];
      a(r, c) = std::ldexp(1.0, -static_cast<int>(lam.set_union(mu).size()));
    }
    for (const auto& t : terms) {
      rhs(r) += t.beta * std::ldexp(1.0, -static_cast<int>(lam.set_union(t.set).size()));
    }
  }
  Eigen::VectorXd beta = a.fullPivLu().solve(rhs);

  PseudoBooleanFunction out(n);
  for (Eigen::Index r = 0; r < m; ++r) out.add(target[static_cast<std::size_t>(r)], beta(r));
  return out;
}

std::pair<PseudoBooleanFunction, ApproximationReport> remove_single_interaction(
    const PseudoBooleanFunction& f, const InteractionSet& lambda) {
  if (!f.contains(lambda)) {
    throw InvalidArgument("remove_single_interaction: " + lambda.to_string() + " is not in S");
  }
  if (!f.children(lambda).empty()) {
    throw InvalidArgument("remove_single_interaction: " + lambda.to_string() +
                          " has a superset in S");
  }
  if (lambda.empty()) {
    throw InvalidArgument("remove_single_interaction: the constant term cannot be removed");
  }
  check_table_arity(lambda.size(), "remove_single_interaction");

  const double b = f.coefficient(lambda);
  PseudoBooleanFunction out = f;
  out.remove_containing(lambda);
  const std::size_t l = lambda.size();
  const std::size_t full = (std::size_t{1} << l) - 1;
  std::vector<Index> members;
  for (std::size_t mask = 0; mask < full; ++mask) {
    members.clear();
    for (std::size_t k = 0; k < l; ++k) {
      if (mask & (std::size_t{1} << k)) members.push_back(lambda[k]);
    }
    const int gap = static_cast<int>(l - members.size());
    const double sign = (gap - 1) % 2 == 0 ? 1.0 : -1.0;
    out.add(InteractionSet(members), sign * std::ldexp(b, -gap));
  }
  out.prune();

  ApproximationReport report;
  report.removed.push_back(lambda);
  // f - f~ = beta * prod_{k in lambda} (x_k - 1/2).
  const double value =
      b * b * std::ldexp(1.0, static_cast<int>(f.num_variables()) - 2 * static_cast<int>(l));
  if (std::isfinite(value)) report.sse = value;
  return {std::move(out), std::move(report)};
}

std::pair<PseudoBooleanFunction, ApproximationReport> remove_interactions(
    const PseudoBooleanFunction& f, std::span<const InteractionSet> target) {
  std::unordered_set<InteractionSet, InteractionSetHash> keep(target.begin(), target.end());
  PseudoBooleanFunction out = f;
  ApproximationReport report;
  double total = 0.0;
  bool have_total = true;
  for (;;) {
    std::optional<InteractionSet> next;
    out.for_each_term([&](const InteractionSet& s, double) {
      if (keep.contains(s)) return;
      if (!next || s.size() > next->size() ||
          (s.size() == next->size() && std::lexicographical_compare(
                                           s.begin(), s.end(), next->begin(), next->end()))) {
        next = s;
      }
    });
    if (!next) break;
    auto [g, step] = remove_single_interaction(out, *next);
    out = std::move(g);
    report.removed.push_back(*next);
    if (step.sse) {
      total += *step.sse;
    } else {
      have_total = false;
    }
  }
  // Successive projections are orthogonal, so the step errors add up.
  if (have_total) report.sse = total;
  return {std::move(out), std::move(report)};
}

std::pair<PseudoBooleanFunction, ApproximationReport> soir(const PseudoBooleanFunction& f,
                                                           Index i, Index j) {
  if (i == j) throw InvalidArgument("soir: i and j must differ");
  const auto pair = InteractionSet::from_unsorted({i, j});
  PseudoBooleanFunction out = f;
  const auto removed = out.remove_containing(pair);

  ApproximationReport report;
  report.partner = j;
  std::vector<Index> vars;
  for (const auto& t : removed) {
    report.removed.push_back(t.set);
    const auto rest = t.set.set_difference(pair);
    vars.insert(vars.end(), rest.begin(), rest.end());
    const double b = t.beta;
    out.add(rest, -0.25 * b);
    out.add(rest.with(i), 0.5 * b);
    out.add(rest.with(j), 0.5 * b);
  }
  out.prune();

  if (removed.empty()) {
    report.sse = 0.0;
    return {std::move(out), std::move(report)};
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  if (vars.size() <= kMaxTableVariables) {
    // (1/4) sum over Omega_{ij} of h^2, with h tabulated over its own variables.
    std::vector<double> h(std::size_t{1} << vars.size(), 0.0);
    for (const auto& t : removed) h[mask_within(t.set.set_difference(pair), vars)] += t.beta;
    zeta_transform(h);
    double squares = 0.0;
    for (double v : h) squares += v * v;
    const int free_vars = static_cast<int>(f.num_variables()) - 2 - static_cast<int>(vars.size());
    const double value = 0.25 * std::ldexp(squares, free_vars);
    if (std::isfinite(value)) report.sse = value;
  }
  return {std::move(out), std::move(report)};
}

double sse(const PseudoBooleanFunction& f, const PseudoBooleanFunction& g) {
  if (f.num_variables() != g.num_variables()) {
    throw InvalidArgument("sse: dimension mismatch");
  }
  const std::size_t n = f.num_variables();
  check_table_arity(n, "sse");
  std::vector<Index> vars(n);
  for (std::size_t k = 0; k < n; ++k) vars[k] = static_cast<Index>(k);
  const auto diff = add_scaled(f, g, 1.0, -1.0);
  const auto table = values_from_interactions(diff, vars);
  double total = 0.0;
  for (double v : table.values()) total += v * v;
  return total;
}

std::vector<Index> MaxTerm::variables() const {
  std::vector<Index> vars;
  for (const auto& t : members) vars.insert(vars.end(), t.set.begin(), t.set.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

PseudoBooleanFunction bound_remove_pair(const PseudoBooleanFunction& f, Index i, Index j,
                                        BoundDirection dir, std::size_t table_cap,
                                        const SplitChooser& chooser) {
  if (i == j) throw InvalidArgument("bound_remove_pair: i and j must differ");
  const auto pair = InteractionSet::from_unsorted({i, j});
  PseudoBooleanFunction out = f;
  const auto removed = out.remove_containing(pair);
  const bool upper = dir == BoundDirection::upper;
  const std::size_t cap = std::min(table_cap, kMaxTableVariables);

  std::vector<MaxTerm> pending;
  if (!removed.empty()) {
    MaxTerm root{InteractionSet{i}, {}, 0};
    for (const auto& t : removed) root.members.push_back({t.set.set_difference(pair), t.beta});
    pending.push_back(std::move(root));
  }

  while (!pending.empty()) {
    MaxTerm term = std::move(pending.back());
    pending.pop_back();
    const auto vars = term.variables();

    if (vars.size() <= cap) {
      std::vector<double> table(std::size_t{1} << vars.size(), 0.0);
      for (const auto& t : term.members) table[mask_within(t.set, vars)] += t.beta;
      zeta_transform(table);
      for (double& v : table) v = upper ? std::max(0.0, v) : std::min(0.0, v);
      mobius_transform(table);
      accumulate_interactions(out, vars, table, term.factor);
      continue;
    }

    // max{0, x_r A + B} <= x_r max{0, A} + max{0, B}; min likewise reversed.
    const Index r = chooser ? chooser(term) : vars.front();
    if (!std::binary_search(vars.begin(), vars.end(), r)) {
      throw InvalidArgument("bound_remove_pair: split variable " + std::to_string(r) +
                            " does not occur in the max term");
    }
    MaxTerm with_r{term.factor.with(r), {}, term.depth + 1};
    MaxTerm without_r{term.factor, {}, term.depth + 1};
    for (auto& t : term.members) {
      if (t.set.contains(r)) {
        with_r.members.push_back({t.set.without(r), t.beta});
      } else {
        without_r.members.push_back(std::move(t));
      }
    }
    if (!without_r.members.empty()) pending.push_back(std::move(without_r));
    pending.push_back(std::move(with_r));
  }

  out.prune(kPruneTolerance, upper ? PruneCompensation::upper : PruneCompensation::lower);
  return out;
}

}  // namespace pbmrf
