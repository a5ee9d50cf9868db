#include "bridgesim/samplers.hpp"

#include "bridgesim/euler.hpp"
#include "bridgesim/parallel.hpp"

#include <cmath>

namespace bridgesim {

ChainState init_chain(const DiffusionModel& model, const LinearGuide& guide,
                      const GuideCache& cache, const RngSpec& rng) {
  ChainState state;
  state.current = simulate_guided_bridge(model, guide, cache, rng);
  return state;
}

ChainState mh_step(ChainState state, const DiffusionModel& model, const LinearGuide& guide,
                   const GuideCache& cache, const RngSpec& rng) {
  auto engine = rng.make_engine();
  Matrix dW = detail::sample_increments(cache.grid(), model.noise_dim, engine);
  WeightedPath proposal = simulate_guided_bridge_with_increments(model, guide, cache, dW);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_u = std::log(unif(engine));
  state.iteration += 1;
  if (log_u < proposal.log_psi - state.current.log_psi) {
    state.current = std::move(proposal);
    state.accepted += 1;
  }
  return state;
}

ChainSummary run_chain(const DiffusionModel& model, const LinearGuide& guide,
                       const GuideCache& cache, std::uint64_t n_iters, const RngSpec& rng,
                       std::uint64_t thin) {
  if (n_iters < 1) throw std::invalid_argument("run_chain needs n_iters >= 1");
  ChainSummary summary;
  ChainState state = init_chain(model, guide, cache, rng.substream(0));
  summary.log_psi_trace.reserve(n_iters);
  for (std::uint64_t i = 1; i <= n_iters; ++i) {
    state = mh_step(std::move(state), model, guide, cache, rng.substream(i));
    summary.log_psi_trace.push_back(state.current.log_psi);
    if (thin > 0 && i % thin == 0) summary.kept_paths.push_back(state.current);
  }
  if (thin == 0) summary.kept_paths.push_back(state.current);
  summary.acceptance_rate = static_cast<double>(state.accepted) / static_cast<double>(n_iters);
  summary.final_state = std::move(state);
  return summary;
}

Vector WeightedEnsemble::normalized_weights() const {
  Vector w = log_weights.array().exp();
  const double total = w.sum();
  return w / total;
}

WeightedEnsemble importance_ensemble(const DiffusionModel& model, const LinearGuide& guide,
                                     const GuideCache& cache, std::size_t n_samples,
                                     const RngSpec& rng, int threads) {
  if (n_samples < 1) throw std::invalid_argument("importance_ensemble needs n_samples >= 1");
  WeightedEnsemble ens;
  ens.samples.resize(n_samples);
  parallel_for_index(n_samples, resolve_threads(threads), [&](std::size_t i) {
    ens.samples[i] = simulate_guided_bridge(model, guide, cache, rng.substream(i));
  });
  ens.log_weights.resize(static_cast<Eigen::Index>(n_samples));
  for (std::size_t i = 0; i < n_samples; ++i) {
    ens.log_weights[static_cast<Eigen::Index>(i)] = ens.samples[i].log_psi;
  }
  ens.log_weights.array() -= ens.log_weights.maxCoeff();
  return ens;
}

double effective_sample_size(const WeightedEnsemble& ensemble) {
  if (ensemble.samples.empty()) throw std::invalid_argument("effective_sample_size needs samples");
  const Vector w = (ensemble.log_weights.array() - ensemble.log_weights.maxCoeff()).exp();
  const double s1 = w.sum();
  const double s2 = w.squaredNorm();
  return s1 * s1 / s2;
}

}  // namespace bridgesim
