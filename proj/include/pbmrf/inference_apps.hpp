#pragma once

// Applications built on elimination: likelihood bracketing, MAP estimation,
// rejection sampling, Metropolis-Hastings acceptance rates and Gibbs sampling.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pbmrf/elimination.hpp"
#include "pbmrf/mrf_models.hpp"
#include "pbmrf/pomm.hpp"

namespace pbmrf {

// ---------------------------------------------------------------------------
// Likelihood bracketing

struct MleRound {
  std::size_t nu = 0;
  std::vector<double> grid;
  // Bounds on ln p(x | theta) at each grid point.
  std::vector<double> loglik_lower;
  std::vector<double> loglik_upper;
  double cut = 0.0;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
};

struct MleBracket {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  std::vector<std::size_t> nu_schedule;
  std::vector<MleRound> rounds;
};

struct MleOptions {
  std::size_t grid_points = 11;
  std::size_t jobs = 1;
  std::optional<std::size_t> table_cap;
};

/// Thrown when no grid point survives the cut, which means the log-likelihood
/// is not concave or the bounds are wrong.
class EmptyInterval : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// For each nu in turn: bound ln p(x | theta) on the grid, cut at the largest
/// lower bound, keep the grid points whose upper bound reaches the cut, widen
/// by one grid step on each side, and regrid the kept interval.
MleBracket mle_bracket(const State& x, ModelFamily family, const LatticeSpec& lattice,
                       std::vector<double> grid, const std::vector<std::size_t>& nu_schedule,
                       const MleOptions& options = {});

// ---------------------------------------------------------------------------
// MAP estimation

struct GaussianLikelihoodSpec {
  double mu0 = 0.0;
  double mu1 = 1.0;
  double sigma = 1.0;
};

/// U(x) + sum_i ln phi(y_i; mu_{x_i}, sigma).
PseudoBooleanFunction posterior_energy(const std::vector<double>& y,
                                       const MarkovRandomField& prior,
                                       const GaussianLikelihoodSpec& lik);

/// Argmax of the posterior energy via max-mode elimination.
EliminationResult map_estimate(const std::vector<double>& y, const MarkovRandomField& prior,
                               const GaussianLikelihoodSpec& lik, EliminationConfig cfg);

// ---------------------------------------------------------------------------
// Rejection sampling

struct RejectionOptions {
  // Give up when, after `trial_budget` proposals, the acceptance rate is
  // below `acceptance_floor`.
  double acceptance_floor = 1e-3;
  std::size_t trial_budget = 100000;
  std::optional<std::size_t> table_cap;
};

struct RejectionResult {
  // log_densities hold the unnormalised U(x) of each accepted state.
  SampleBatch batch;
  std::size_t trials = 0;
  double acceptance_rate = 0.0;
  // ln k with k * exp(U(x)) / p~(x) <= 1 for every x.
  double log_k = 0.0;
  double max_alpha = 0.0;
  PartiallyOrderedMarkovModel pomm;
};

class AcceptanceTooLow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ln p~(x) of a POMM written as a pseudo-Boolean function.
PseudoBooleanFunction pomm_log_density_function(const PartiallyOrderedMarkovModel& pomm);

/// Exact draws from exp(U)/c by proposing from the capped POMM and accepting
/// with probability k exp(U(x)) / p~(x).
RejectionResult rejection_sampler(const MarkovRandomField& target, std::size_t nu,
                                  std::uint64_t seed, std::size_t count,
                                  const RejectionOptions& options = {});

// ---------------------------------------------------------------------------
// MCMC helpers

/// Draws `count` (approximately) independent states from the target.
using ReferenceSampler = std::function<std::vector<State>(std::size_t count, std::uint64_t seed)>;

/// Mean over `pairs` couples (x from the reference, x' from the POMM) of
/// min{1, exp(U(x') - U(x)) p~(x) / p~(x')}.
double mh_acceptance_rate(const MarkovRandomField& target, const PartiallyOrderedMarkovModel& pomm,
                          const ReferenceSampler& reference, std::size_t pairs,
                          std::uint64_t seed);

/// Systematic-scan single-site Gibbs sampler started from a uniform random
/// state. Runs burn_in sweeps, then `sweeps` more, keeping every thin-th.
/// log_densities hold U(x).
SampleBatch gibbs_sampler(const MarkovRandomField& mrf, std::size_t sweeps, std::size_t burn_in,
                          std::size_t thin, std::uint64_t seed);

/// Reference sampler running one Gibbs chain per call.
ReferenceSampler gibbs_reference(const MarkovRandomField& mrf, std::size_t burn_in,
                                 std::size_t thin);

}  // namespace pbmrf
