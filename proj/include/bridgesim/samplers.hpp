#pragma once

#include "bridgesim/guided.hpp"

namespace bridgesim {

/// State of the independence Metropolis-Hastings chain over bridge
/// paths. The acceptance ratio reduces to exp(log_psi' - log_psi): the
/// ptilde(0,u)/p(0,u) factor of the likelihood is path-independent and
/// cancels.
struct ChainState {
  WeightedPath current;
  std::uint64_t iteration = 0;
  std::uint64_t accepted = 0;
};

ChainState init_chain(const DiffusionModel& model, const LinearGuide& guide,
                      const GuideCache& cache, const RngSpec& rng);

/// One independence-sampler step: propose a fresh bridge, accept with
/// probability min(1, exp(log_psi_prop - log_psi_curr)). Simulation
/// errors propagate; they are never converted into rejections.
ChainState mh_step(ChainState state, const DiffusionModel& model, const LinearGuide& guide,
                   const GuideCache& cache, const RngSpec& rng);

struct ChainSummary {
  double acceptance_rate = 0.0;
  std::vector<double> log_psi_trace;     // current log psi after each step
  std::vector<WeightedPath> kept_paths;  // every `thin`-th state
  ChainState final_state;
};

ChainSummary run_chain(const DiffusionModel& model, const LinearGuide& guide,
                       const GuideCache& cache, std::uint64_t n_iters, const RngSpec& rng,
                       std::uint64_t thin = 0);

/// Independent weighted proposals; log weights are log psi shifted so
/// the maximum is 0 (the common p-bar factor drops after
/// self-normalization).
struct WeightedEnsemble {
  std::vector<WeightedPath> samples;
  Vector log_weights;

  Vector normalized_weights() const;
  std::size_t size() const { return samples.size(); }
};

WeightedEnsemble importance_ensemble(const DiffusionModel& model, const LinearGuide& guide,
                                     const GuideCache& cache, std::size_t n_samples,
                                     const RngSpec& rng, int threads = 1);

/// (sum w)^2 / sum w^2 on self-normalized weights; always in [1, n].
double effective_sample_size(const WeightedEnsemble& ensemble);

}  // namespace bridgesim
