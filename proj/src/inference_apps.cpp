#include "pbmrf/inference_apps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pbmrf/errors.hpp"
#include "pbmrf/parallel.hpp"
#include "pbmrf/philox.hpp"

namespace pbmrf {

namespace {

double log_normal_pdf(double y, double mu, double sigma) {
  const double z = (y - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  for (std::size_t k = 0; k < points; ++k) {
    out[k] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return out;
}

// Terms containing each variable, with that variable dropped.
std::vector<std::vector<Term>> conditional_terms(const PseudoBooleanFunction& energy) {
  std::vector<std::vector<Term>> out(energy.num_variables());
  energy.for_each_term([&](const InteractionSet& s, double beta) {
    if (beta == 0.0) return;
    for (Index v : s) out[v].push_back({s.without(v), beta});
  });
  for (auto& list : out) {
    std::sort(list.begin(), list.end(),
              [](const Term& a, const Term& b) { return canonical_less(a.set, b.set); });
  }
  return out;
}

}  // namespace

MleBracket mle_bracket(const State& x, ModelFamily family, const LatticeSpec& lattice,
                       std::vector<double> grid, const std::vector<std::size_t>& nu_schedule,
                       const MleOptions& options) {
  if (family_arity(family) != 1) {
    throw InvalidArgument("mle_bracket: family must have a single parameter");
  }
  if (grid.size() < 3 || !std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidArgument("mle_bracket: grid must be sorted with at least 3 points");
  }
  if (nu_schedule.empty()) throw InvalidArgument("mle_bracket: empty nu schedule");
  if (x.size() != lattice.size()) throw InvalidArgument("mle_bracket: state length mismatch");
  if (options.grid_points < 3) throw InvalidArgument("mle_bracket: need at least 3 grid points");

  MleBracket out;
  out.nu_schedule = nu_schedule;
  for (std::size_t round = 0; round < nu_schedule.size(); ++round) {
    MleRound r;
    r.nu = nu_schedule[round];
    r.grid = grid;
    r.loglik_lower.resize(grid.size());
    r.loglik_upper.resize(grid.size());
    parallel_for(grid.size(), options.jobs, [&](std::size_t k) {
      const auto m = build_model(family, lattice, {grid[k]});
      EliminationConfig cfg;
      cfg.nu = r.nu;
      cfg.table_cap = options.table_cap;
      cfg.mode = EliminationMode::upper_bound;
      const double log_c_upper = eliminate(m.energy, cfg).log_value;
      cfg.mode = EliminationMode::lower_bound;
      const double log_c_lower = eliminate(m.energy, cfg).log_value;
      const double u = m.energy.evaluate(x);
      r.loglik_lower[k] = u - log_c_upper;
      r.loglik_upper[k] = u - log_c_lower;
    });

    r.cut = *std::max_element(r.loglik_lower.begin(), r.loglik_lower.end());
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (r.loglik_upper[k] >= r.cut) {
        if (!first) first = k;
        last = k;
      }
    }
    if (!first) {
      throw EmptyInterval("mle_bracket: no grid point reaches the cut " + format_real(r.cut) +
                          " in round " + std::to_string(round) + " (nu = " +
                          std::to_string(r.nu) + ")");
    }
    // The maximiser may sit anywhere between a kept point and its excluded
    // neighbour, so the interval reaches out to the neighbours.
    const std::size_t lo = *first > 0 ? *first - 1 : 0;
    const std::size_t hi = std::min(last + 1, grid.size() - 1);
    r.theta_lo = grid[lo];
    r.theta_hi = grid[hi];
    out.theta_lo = r.theta_lo;
    out.theta_hi = r.theta_hi;
    grid = linspace(r.theta_lo, r.theta_hi, options.grid_points);
    out.rounds.push_back(std::move(r));
  }
  return out;
}

PseudoBooleanFunction posterior_energy(const std::vector<double>& y,
                                       const MarkovRandomField& prior,
                                       const GaussianLikelihoodSpec& lik) {
  if (!(lik.sigma > 0.0)) throw InvalidArgument("posterior_energy: sigma must be positive");
  const std::size_t n = prior.energy.num_variables();
  if (y.size() != n) {
    throw InvalidArgument("posterior_energy: " + std::to_string(y.size()) +
                          " observations for " + std::to_string(n) + " nodes");
  }
  PseudoBooleanFunction f = prior.energy;
  for (Index i = 0; i < n; ++i) {
    const double l0 = log_normal_pdf(y[i], lik.mu0, lik.sigma);
    const double l1 = log_normal_pdf(y[i], lik.mu1, lik.sigma);
    f.add({}, l0);
    f.add({i}, l1 - l0);
  }
  return f;
}

EliminationResult map_estimate(const std::vector<double>& y, const MarkovRandomField& prior,
                               const GaussianLikelihoodSpec& lik, EliminationConfig cfg) {
  return eliminate_max(posterior_energy(y, prior, lik), std::move(cfg));
}

PseudoBooleanFunction pomm_log_density_function(const PartiallyOrderedMarkovModel& pomm) {
  pomm.validate();
  PseudoBooleanFunction f(pomm.num_variables());
  for (const auto& t : pomm.tables()) {
    std::vector<Index> vars = t.dependencies;
    vars.push_back(t.variable);
    check_table_arity(vars.size(), "POMM log density");
    const std::size_t half = t.prob_one.size();
    std::vector<double> values(2 * half);
    for (std::size_t mask = 0; mask < half; ++mask) {
      const double p = t.prob_one[mask];
      if (p <= 0.0 || p >= 1.0) {
        throw InvalidArgument("POMM log density: degenerate conditional for variable " +
                              std::to_string(t.variable));
      }
      values[mask] = std::log1p(-p);
      values[mask + half] = std::log(p);
    }
    mobius_transform(values);
    accumulate_interactions(f, vars, values);
  }
  return f;
}

RejectionResult rejection_sampler(const MarkovRandomField& target, std::size_t nu,
                                  std::uint64_t seed, std::size_t count,
                                  const RejectionOptions& options) {
  const auto& u = target.energy;
  EliminationConfig cfg;
  cfg.mode = EliminationMode::approximate;
  cfg.nu = nu;
  cfg.pomm_variant = PommVariant::post_approximation;
  RejectionResult out;
  out.pomm = *eliminate(u, cfg).pomm;

  // alpha(x) = k exp(F(x)) with F = U - ln p~. Any upper bound M on max F
  // gives a valid k = exp(-M).
  const auto f = add_scaled(u, pomm_log_density_function(out.pomm), 1.0, -1.0);
  EliminationConfig bound;
  bound.mode = EliminationMode::upper_bound;
  bound.marginal = Marginal::max;
  bound.nu = nu;
  bound.table_cap = options.table_cap;
  out.log_k = -eliminate(f, bound).log_value;
  out.batch.seed = seed;

  constexpr std::uint64_t kAcceptStreams = std::uint64_t{1} << 63;
  std::size_t trials = 0;
  const std::size_t chunk = std::max<std::size_t>(256, count);
  while (out.batch.states.size() < count) {
    const auto proposals = sample(out.pomm, seed, chunk, trials);
    for (std::size_t k = 0; k < proposals.states.size() && out.batch.states.size() < count; ++k) {
      const auto& x = proposals.states[k];
      const double ux = u.evaluate(x);
      const double alpha = std::exp(out.log_k + ux - proposals.log_densities[k]);
      out.max_alpha = std::max(out.max_alpha, alpha);
      if (alpha > 1.0 + 1e-12) {
        throw std::logic_error("rejection_sampler: acceptance probability " + format_real(alpha) +
                               " exceeds 1");
      }
      PhiloxStream accept(seed, kAcceptStreams | trials);
      ++trials;
      if (accept.uniform() < alpha) {
        out.batch.states.push_back(x);
        out.batch.log_densities.push_back(ux);
      }
      if (trials == options.trial_budget) {
        const double rate = static_cast<double>(out.batch.states.size()) / static_cast<double>(trials);
        if (rate < options.acceptance_floor) {
          throw AcceptanceTooLow("rejection_sampler: acceptance rate " + format_real(rate) +
                                 " after " + std::to_string(trials) + " proposals is below " +
                                 format_real(options.acceptance_floor) + "; increase nu");
        }
      }
    }
  }
  out.trials = trials;
  out.acceptance_rate =
      trials ? static_cast<double>(out.batch.states.size()) / static_cast<double>(trials) : 1.0;
  return out;
}

double mh_acceptance_rate(const MarkovRandomField& target, const PartiallyOrderedMarkovModel& pomm,
                          const ReferenceSampler& reference, std::size_t pairs,
                          std::uint64_t seed) {
  if (pairs == 0) throw InvalidArgument("mh_acceptance_rate: pairs must be positive");
  const auto from_target = reference(pairs, seed);
  if (from_target.size() != pairs) {
    throw InvalidArgument("mh_acceptance_rate: reference sampler returned the wrong count");
  }
  const auto proposals = sample(pomm, seed, pairs, std::uint64_t{1} << 62);
  const auto& u = target.energy;
  double total = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto& x = from_target[k];
    const auto& xp = proposals.states[k];
    const double log_ratio =
        u.evaluate(xp) - u.evaluate(x) + log_density(pomm, x) - proposals.log_densities[k];
    total += log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  }
  return total / static_cast<double>(pairs);
}

SampleBatch gibbs_sampler(const MarkovRandomField& mrf, std::size_t sweeps, std::size_t burn_in,
                          std::size_t thin, std::uint64_t seed) {
  if (thin == 0) throw InvalidArgument("gibbs_sampler: thin must be positive");
  const auto& u = mrf.energy;
  const std::size_t n = u.num_variables();
  const auto terms = conditional_terms(u);
  PhiloxStream rng(seed, 0);
  State x(n);
  for (auto& v : x) v = rng.uniform() < 0.5 ? 1 : 0;

  SampleBatch out;
  out.seed = seed;
  for (std::size_t sweep = 0; sweep < burn_in + sweeps; ++sweep) {
    for (Index i = 0; i < n; ++i) {
      double phi = 0.0;
      for (const auto& t : terms[i]) {
        if (t.set.active_in(x)) phi += t.beta;
      }
      const double p = phi >= 0.0 ? 1.0 / (1.0 + std::exp(-phi))
                                  : std::exp(phi) / (1.0 + std::exp(phi));
      x[i] = rng.uniform() < p ? 1 : 0;
    }
    if (sweep >= burn_in && (sweep - burn_in + 1) % thin == 0) {
      out.states.push_back(x);
      out.log_densities.push_back(u.evaluate(x));
    }
  }
  return out;
}

ReferenceSampler gibbs_reference(const MarkovRandomField& mrf, std::size_t burn_in,
                                 std::size_t thin) {
  return [mrf, burn_in, thin](std::size_t count, std::uint64_t seed) {
    return gibbs_sampler(mrf, count * thin, burn_in, thin, seed).states;
  };
}

}  // namespace pbmrf
