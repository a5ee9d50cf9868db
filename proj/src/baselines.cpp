#include "bridgesim/baselines.hpp"

#include "bridgesim/euler.hpp"
#include "bridgesim/guided.hpp"

namespace bridgesim {

namespace {

Path pin_endpoint(Path path, const Vector& v) {
  path.states.row(path.states.rows() - 1) = v.transpose();
  return path;
}

DiffusionModel with_pulling_drift(const DiffusionModel& model, const BridgeSpec& spec,
                                  bool keep_drift) {
  model.validate();
  spec.validate();
  if (model.dim != spec.u.size()) throw std::invalid_argument("model/bridge dimension mismatch");
  DiffusionModel out = model;
  const Vector v = spec.v;
  const double T = spec.T;
  if (keep_drift) {
    auto base = model.drift;
    out.drift = [base, v, T](double t, const Vector& x) -> Vector {
      return base(t, x) + (v - x) / (T - t);
    };
  } else {
    out.drift = [v, T](double t, const Vector& x) -> Vector { return (v - x) / (T - t); };
  }
  return out;
}

}  // namespace

Path simulate_delyon_hu_full_with_increments(const DiffusionModel& model, const BridgeSpec& spec,
                                             const TimeGrid& grid, const Matrix& dW) {
  DiffusionModel proposal = with_pulling_drift(model, spec, true);
  return pin_endpoint(euler_maruyama_with_increments(proposal, spec.u, grid, dW), spec.v);
}

Path simulate_delyon_hu_full(const DiffusionModel& model, const BridgeSpec& spec,
                             const TimeGrid& grid, const RngSpec& rng) {
  Matrix dW = sample_brownian_increments(grid, model.noise_dim, rng);
  return simulate_delyon_hu_full_with_increments(model, spec, grid, dW);
}

Path simulate_delyon_hu_nodrift_with_increments(const DiffusionModel& model, const BridgeSpec& spec,
                                                const TimeGrid& grid, const Matrix& dW) {
  DiffusionModel proposal = with_pulling_drift(model, spec, false);
  return pin_endpoint(euler_maruyama_with_increments(proposal, spec.u, grid, dW), spec.v);
}

Path simulate_delyon_hu_nodrift(const DiffusionModel& model, const BridgeSpec& spec,
                                const TimeGrid& grid, const RngSpec& rng) {
  Matrix dW = sample_brownian_increments(grid, model.noise_dim, rng);
  return simulate_delyon_hu_nodrift_with_increments(model, spec, grid, dW);
}

Path simulate_exact_linear_bridge(const LinearGuide& guide, const BridgeSpec& spec,
                                  const TimeGrid& grid, const RngSpec& rng) {
  DiffusionModel model = model_from_guide(guide);
  GuideCache cache(guide, spec, grid, GuideQuadrature{});
  return simulate_guided_bridge(model, guide, cache, rng).path;
}

}  // namespace bridgesim
