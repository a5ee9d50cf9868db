#include "bridgesim/euler.hpp"

#include "bridgesim/model_zoo.hpp"
#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <vector>

using namespace bridgesim;

namespace {

DiffusionModel deterministic_model(double rate) {
  DiffusionModel m = make_bm_drift_model(rate, 0.0);
  return m;
}

}  // namespace

TEST_CASE("zero dynamics keep the path constant") {
  DiffusionModel m = make_bm_drift_model(0.0, 0.0);
  Vector u(1);
  u[0] = 1.25;
  Path p = euler_maruyama(m, u, make_bridge_grid(1.0, 50), RngSpec{1, 0});
  for (Eigen::Index k = 0; k < p.states.rows(); ++k) CHECK(p.states(k, 0) == 1.25);
}

TEST_CASE("constant drift integrates exactly") {
  Vector u(1);
  u[0] = -0.5;
  Path p = euler_maruyama(deterministic_model(2.0), u, make_bridge_grid(1.0, 100), RngSpec{1, 0});
  CHECK(p.terminal()[0] == doctest::Approx(-0.5 + 2.0).epsilon(1e-13));
}

TEST_CASE("sigma = 0 reproduces the forward-Euler ODE solution exactly") {
  DiffusionModel m;
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [](double, const Vector& x) { return Vector::Constant(1, x[0] * (1.0 - x[0])); };
  m.dispersion = [](double, const Vector&) { return Matrix::Zero(1, 1); };
  TimeGrid grid = make_uniform_grid(0.0, 2.0, 64);
  Vector u(1);
  u[0] = 0.1;
  Path p = euler_maruyama(m, u, grid, RngSpec{3, 1});
  double x = 0.1;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    x += x * (1.0 - x) * grid.dt(k);
    CHECK(p.states(static_cast<Eigen::Index>(k) + 1, 0) == x);
  }
}

TEST_CASE("OU terminal moments match the closed form") {
  DiffusionModel m = make_ou_model(1.0, 1.0);
  TimeGrid grid = make_uniform_grid(0.0, 1.0, 128);
  Vector u(1);
  u[0] = 1.0;
  const std::size_t n = 100000;
  std::vector<double> xT(n);
  for (std::size_t i = 0; i < n; ++i) {
    xT[i] = euler_maruyama(m, u, grid, RngSpec{42, i}).terminal()[0];
  }
  auto mom = testsupport::moments(xT);
  CHECK(std::abs(mom.mean - testsupport::ou_mean(1.0, 1.0, 1.0)) < 3.0 * mom.se_mean());
  CHECK(std::abs(mom.variance - testsupport::ou_var(1.0, 1.0, 1.0)) < 3.0 * mom.se_variance());
}

TEST_CASE("brownian increments are reproducible and correctly scaled") {
  TimeGrid grid = make_uniform_grid(0.0, 1000.0, 100000);
  Matrix a = sample_brownian_increments(grid, 1, RngSpec{9, 4});
  Matrix b = sample_brownian_increments(grid, 1, RngSpec{9, 4});
  CHECK(a == b);
  Matrix c = sample_brownian_increments(grid, 1, RngSpec{9, 5});
  CHECK(a != c);

  std::vector<double> col(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) col[static_cast<std::size_t>(i)] = a(i, 0);
  auto mom = testsupport::moments(col);
  CHECK(std::abs(mom.variance - 0.01) < 3.0 * mom.se_variance());
}

TEST_CASE("degenerate single-node grid yields no increments") {
  TimeGrid grid({0.0});
  Matrix dw = sample_brownian_increments(grid, 3, RngSpec{1, 1});
  CHECK(dw.rows() == 0);
  CHECK(dw.cols() == 3);
}

TEST_CASE("paths are bitwise reproducible under a fixed rng spec") {
  DiffusionModel m = make_sine_model(2.0, 2.0, 0.5);
  TimeGrid grid = make_bridge_grid(1.0, 100);
  Vector u = Vector::Zero(1);
  Path p1 = euler_maruyama(m, u, grid, RngSpec{123, 7});
  Path p2 = euler_maruyama(m, u, grid, RngSpec{123, 7});
  CHECK(p1.states == p2.states);
}

TEST_CASE("non-finite drift values raise a numerical error with context") {
  DiffusionModel m;
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [](double t, const Vector&) {
    return Vector::Constant(1, t > 0.5 ? std::nan("") : 0.0);
  };
  m.dispersion = [](double, const Vector&) { return Matrix::Identity(1, 1); };
  Vector u = Vector::Zero(1);
  CHECK_THROWS_AS(euler_maruyama(m, u, make_uniform_grid(0.0, 1.0, 10), RngSpec{5, 0}),
                  numerical_error);
}
