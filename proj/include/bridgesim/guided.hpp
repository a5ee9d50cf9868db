#pragma once

#include "bridgesim/linear_guide.hpp"
#include "bridgesim/types.hpp"

namespace bridgesim {

/// A proposal bridge with its likelihood-weight ingredients. The weight
/// is kept in log form: raw psi overflows because G picks up terms of
/// size (T-s)^{-1/2} near the endpoint.
struct WeightedPath {
  Path path;
  double log_psi = 0.0;       // log psi(T) = sum_k G(t_k, X_k) dt_k
  double log_ptilde0 = 0.0;   // log ptilde(0, u; T, v)
  bool variance_mismatch = false;  // a(T, v) != atilde(T) beyond tolerance

  double log_weight() const { return log_psi; }
};

/// Proposal drift  b°(t_k, x) = b(t_k, x) + a(t_k, x) rtilde(t_k, x).
Vector guided_drift(const DiffusionModel& model, const GuideCache& cache, std::size_t k,
                    const Vector& x);

/// G(s,x) = (b - btilde)' rtilde - 1/2 tr([a - atilde][H - rtilde rtilde']),
/// evaluated at grid node k. H-products are reconstructed by solving
/// against the cached L = H^{-1}.
double G_functional(const DiffusionModel& model, const LinearGuide& guide, const GuideCache& cache,
                    std::size_t k, const Vector& x);

/// True when a(T, v) matches atilde(T) to relative tolerance; a mismatch
/// makes the proposal and target bridge laws singular, which is useful
/// as a deliberate diagnostic but deserves a warning.
bool endpoint_variance_matched(const DiffusionModel& model, const LinearGuide& guide,
                               const BridgeSpec& spec, double rtol = 1e-9);

/// Simulates the proposal bridge on the cache's grid and accumulates
/// log psi(T) as a left Riemann sum on the same nodes. The state at t_N
/// is set to v exactly; the drift is never evaluated there.
WeightedPath simulate_guided_bridge(const DiffusionModel& model, const LinearGuide& guide,
                                    const GuideCache& cache, const RngSpec& rng);

/// Increment-coupled variant for grid-refinement studies.
WeightedPath simulate_guided_bridge_with_increments(const DiffusionModel& model,
                                                    const LinearGuide& guide,
                                                    const GuideCache& cache, const Matrix& dW);

/// Recomputes the log weight of an existing trajectory under a
/// (possibly different) guide cache: log ptilde(0,u) + sum_k G dt_k.
/// The path states are taken as given.
double path_log_weight(const DiffusionModel& model, const LinearGuide& guide,
                       const GuideCache& cache, const Path& path);

}  // namespace bridgesim
