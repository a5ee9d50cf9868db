#pragma once

#include "bridgesim/samplers.hpp"
#include "bridgesim/types.hpp"

namespace bridgesim {

/// Default endpoint tolerance for the rejection oracle:
/// 0.02 sqrt(T) ||sigma(T, v)||. The induced bias is second order in
/// epsilon and drowns in Monte Carlo noise at the sample sizes used here.
double default_rejection_epsilon(const DiffusionModel& model, const BridgeSpec& spec);

struct RejectionResult {
  std::vector<Path> kept;
  double acceptance_fraction = 0.0;
  std::uint64_t attempted = 0;
};

/// Brute-force bridge sampling: forward-simulate unconditioned paths and
/// keep those with ||X_T - v|| <= epsilon. Only for d <= 2; the cost
/// explodes beyond that. Throws oracle_infeasible when max_forward runs
/// out with nothing kept.
RejectionResult rejection_bridge_sample(const DiffusionModel& model, const BridgeSpec& spec,
                                        const TimeGrid& grid, double epsilon,
                                        std::size_t n_target, std::uint64_t max_forward,
                                        const RngSpec& rng, int threads = 1);

/// Kernel density estimate of the transition density p(s, x; t, .) from
/// forward simulation, on a regular evaluation grid (d = 1 or 2).
struct DensityEstimate {
  Matrix points;   // m x d evaluation points
  Vector density;  // m values
  double cell_volume = 0.0;
  bool point_mass = false;
  std::string warning;

  double integral() const { return density.sum() * cell_volume; }
};

DensityEstimate transition_density_estimate(const DiffusionModel& model, double s, const Vector& x,
                                            double t, std::size_t n_paths, double bandwidth,
                                            const RngSpec& rng, int threads = 1,
                                            int grid_points = 512, int time_steps = 64);

/// 1-Wasserstein distance between two weighted empirical measures on R.
double wasserstein1(const Vector& values_a, const Vector& weights_a, const Vector& values_b,
                    const Vector& weights_b);

/// W1 between the self-normalized weighted marginal of an ensemble and
/// an oracle empirical marginal at a common grid time t. For d = 2 the
/// largest per-coordinate distance is returned.
double marginal_distance(const WeightedEnsemble& weighted, const std::vector<Path>& oracle_paths,
                         double t);

}  // namespace bridgesim
