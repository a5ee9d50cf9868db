#include "bridgesim/guided.hpp"

#include "bridgesim/euler.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <mutex>

namespace bridgesim {

namespace {

struct NodeEval {
  Vector b_circ;
  double g = 0.0;
};

// Shared evaluation of the proposal drift and G at one node; the score
// solve and diffusion evaluations are the expensive parts and both
// quantities need them.
NodeEval eval_node(const DiffusionModel& model, const LinearGuide& guide, const GuideCache& cache,
                   std::size_t k, const Vector& x) {
  const double t = cache.grid().node(k);
  const Vector r = cache.score(k, x);
  const Vector b = model.drift_checked(t, x);
  const Matrix a = model.diffusion(t, x);

  NodeEval out;
  out.b_circ = b + a * r;

  const Vector b_diff = b - (guide.B(t) * x + guide.beta(t));
  const Matrix a_diff = a - guide.a_tilde(t);
  const double trace_term = cache.solve_L(k, a_diff).trace();
  out.g = b_diff.dot(r) - 0.5 * (trace_term - r.dot(a_diff * r));
  return out;
}

void warn_variance_mismatch_once(const DiffusionModel& model, const LinearGuide& guide,
                                 const BridgeSpec& spec) {
  static std::once_flag flag;
  std::call_once(flag, [&] {
    Matrix a = model.diffusion(spec.T, spec.v);
    Matrix at = guide.a_tilde(spec.T);
    std::fprintf(stderr,
                 "bridgesim: warning: guide variance atilde(T) does not match a(T, v) "
                 "(|diff|=%.3g); proposal and target bridge laws are singular in the limit\n",
                 (a - at).cwiseAbs().maxCoeff());
  });
}

WeightedPath simulate_impl(const DiffusionModel& model, const LinearGuide& guide,
                           const GuideCache& cache, const Matrix& dW) {
  model.validate();
  const TimeGrid& grid = cache.grid();
  const std::size_t n = grid.steps();
  if (model.dim != cache.dim()) throw std::invalid_argument("model/cache dimension mismatch");
  if (dW.rows() != static_cast<Eigen::Index>(n) || dW.cols() != model.noise_dim) {
    throw std::invalid_argument("increment matrix shape does not match grid/model");
  }

  WeightedPath wp;
  wp.variance_mismatch = !endpoint_variance_matched(model, guide, cache.spec());
  if (wp.variance_mismatch) warn_variance_mismatch_once(model, guide, cache.spec());

  wp.path.grid = grid;
  wp.path.states.resize(n + 1, model.dim);
  wp.path.states.row(0) = cache.spec().u.transpose();

  Vector x = cache.spec().u;
  double log_psi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = grid.dt(k);
    NodeEval ev = eval_node(model, guide, cache, k, x);
    log_psi += ev.g * dt;
    const Matrix sigma = model.dispersion_checked(grid.node(k), x);
    x += ev.b_circ * dt + sigma * dW.row(k).transpose();
    if (!detail::all_finite(x) || !std::isfinite(log_psi)) {
      throw numerical_error(fmt::format("guided bridge diverged at node {} ({})", k + 1,
                                        detail::format_point(grid.node(k + 1), x)));
    }
    wp.path.states.row(k + 1) = x.transpose();
  }
  wp.path.states.row(n) = cache.spec().v.transpose();  // endpoint pinned
  wp.log_psi = log_psi;
  wp.log_ptilde0 = cache.log_density(0, cache.spec().u);
  return wp;
}

}  // namespace

Vector guided_drift(const DiffusionModel& model, const GuideCache& cache, std::size_t k,
                    const Vector& x) {
  const double t = cache.grid().node(k);
  const Vector r = cache.score(k, x);
  return model.drift_checked(t, x) + model.diffusion(t, x) * r;
}

double G_functional(const DiffusionModel& model, const LinearGuide& guide, const GuideCache& cache,
                    std::size_t k, const Vector& x) {
  return eval_node(model, guide, cache, k, x).g;
}

bool endpoint_variance_matched(const DiffusionModel& model, const LinearGuide& guide,
                               const BridgeSpec& spec, double rtol) {
  Matrix a = model.diffusion(spec.T, spec.v);
  Matrix at = guide.a_tilde(spec.T);
  const double scale = std::max(1e-300, std::max(a.cwiseAbs().maxCoeff(), at.cwiseAbs().maxCoeff()));
  return (a - at).cwiseAbs().maxCoeff() <= rtol * scale;
}

WeightedPath simulate_guided_bridge(const DiffusionModel& model, const LinearGuide& guide,
                                    const GuideCache& cache, const RngSpec& rng) {
  Matrix dW = sample_brownian_increments(cache.grid(), model.noise_dim, rng);
  return simulate_impl(model, guide, cache, dW);
}

WeightedPath simulate_guided_bridge_with_increments(const DiffusionModel& model,
                                                    const LinearGuide& guide,
                                                    const GuideCache& cache, const Matrix& dW) {
  return simulate_impl(model, guide, cache, dW);
}

double path_log_weight(const DiffusionModel& model, const LinearGuide& guide,
                       const GuideCache& cache, const Path& path) {
  const TimeGrid& grid = cache.grid();
  if (!(path.grid == grid)) throw std::invalid_argument("path and cache use different grids");
  double log_psi = 0.0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const Vector x = path.state(k);
    log_psi += G_functional(model, guide, cache, k, x) * grid.dt(k);
  }
  if (!std::isfinite(log_psi)) throw numerical_error("path log weight is not finite");
  return cache.log_density(0, cache.spec().u) + log_psi;
}

}  // namespace bridgesim
