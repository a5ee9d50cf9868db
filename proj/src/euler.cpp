#include "bridgesim/euler.hpp"

#include <fmt/format.h>

#include <cmath>

namespace bridgesim {

namespace detail {

Matrix sample_increments(const TimeGrid& grid, int noise_dim, std::mt19937_64& engine) {
  const std::size_t n = grid.steps();
  Matrix dW(n, noise_dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double sd = std::sqrt(grid.dt(k));
    for (int j = 0; j < noise_dim; ++j) dW(k, j) = sd * gauss(engine);
  }
  return dW;
}

}  // namespace detail

Matrix sample_brownian_increments(const TimeGrid& grid, int noise_dim, const RngSpec& rng) {
  if (noise_dim <= 0) throw std::invalid_argument("noise_dim must be positive");
  auto engine = rng.make_engine();
  return detail::sample_increments(grid, noise_dim, engine);
}

Path euler_maruyama_with_increments(const DiffusionModel& model, const Vector& x0,
                                    const TimeGrid& grid, const Matrix& dW) {
  model.validate();
  if (x0.size() != model.dim) throw std::invalid_argument("x0 dimension does not match model");
  if (dW.rows() != static_cast<Eigen::Index>(grid.steps()) || dW.cols() != model.noise_dim) {
    throw std::invalid_argument("increment matrix shape does not match grid/model");
  }

  const std::size_t n = grid.steps();
  Path path;
  path.grid = grid;
  path.states.resize(n + 1, model.dim);
  path.states.row(0) = x0.transpose();

  Vector x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.node(k);
    const double dt = grid.dt(k);
    Vector b = model.drift_checked(t, x);
    Matrix sigma = model.dispersion_checked(t, x);
    x += b * dt + sigma * dW.row(k).transpose();
    if (!detail::all_finite(x)) {
      throw numerical_error(fmt::format("euler step produced non-finite state at node {} ({})", k + 1,
                                        detail::format_point(grid.node(k + 1), x)));
    }
    path.states.row(k + 1) = x.transpose();
  }
  return path;
}

Path euler_maruyama(const DiffusionModel& model, const Vector& x0, const TimeGrid& grid,
                    const RngSpec& rng) {
  Matrix dW = sample_brownian_increments(grid, model.noise_dim, rng);
  return euler_maruyama_with_increments(model, x0, grid, dW);
}

}  // namespace bridgesim
