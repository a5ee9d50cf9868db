#pragma once

#include "bridgesim/linear_guide.hpp"
#include "bridgesim/types.hpp"

namespace bridgesim {

/// Delyon-Hu proposal keeping the original drift:
/// dX = (b(t,X) + (v - X)/(T - t)) dt + sigma(t,X) dW, endpoint pinned.
/// Carries no likelihood weight; used for path-shape comparisons.
Path simulate_delyon_hu_full(const DiffusionModel& model, const BridgeSpec& spec,
                             const TimeGrid& grid, const RngSpec& rng);
Path simulate_delyon_hu_full_with_increments(const DiffusionModel& model, const BridgeSpec& spec,
                                             const TimeGrid& grid, const Matrix& dW);

/// Delyon-Hu proposal that discards the original drift:
/// dX = (v - X)/(T - t) dt + sigma(t,X) dW, endpoint pinned.
Path simulate_delyon_hu_nodrift(const DiffusionModel& model, const BridgeSpec& spec,
                                const TimeGrid& grid, const RngSpec& rng);
Path simulate_delyon_hu_nodrift_with_increments(const DiffusionModel& model, const BridgeSpec& spec,
                                                const TimeGrid& grid, const Matrix& dW);

/// Exact bridge of the linear process itself (guide doubles as the
/// model, so the guided drift uses the true transition density). Ground
/// truth for linear targets.
Path simulate_exact_linear_bridge(const LinearGuide& guide, const BridgeSpec& spec,
                                  const TimeGrid& grid, const RngSpec& rng);

}  // namespace bridgesim
