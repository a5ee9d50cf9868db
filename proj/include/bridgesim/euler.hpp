#pragma once

#include "bridgesim/types.hpp"

namespace bridgesim {

/// Brownian increments on a grid: row k ~ N(0, dt_k I_{d'}). Fully
/// determined by the RngSpec.
Matrix sample_brownian_increments(const TimeGrid& grid, int noise_dim, const RngSpec& rng);

/// Explicit Euler-Maruyama: X_{k+1} = X_k + b(t_k, X_k) dt_k + sigma(t_k, X_k) dW_k.
/// Coefficients are evaluated at the left endpoint of each step.
Path euler_maruyama(const DiffusionModel& model, const Vector& x0, const TimeGrid& grid,
                    const RngSpec& rng);

/// Same scheme with caller-supplied increments (rows of dW), which makes
/// coupled-grid comparisons possible.
Path euler_maruyama_with_increments(const DiffusionModel& model, const Vector& x0,
                                    const TimeGrid& grid, const Matrix& dW);

namespace detail {
Matrix sample_increments(const TimeGrid& grid, int noise_dim, std::mt19937_64& engine);
}

}  // namespace bridgesim
