#include "bridgesim/linear_guide.hpp"

#include "bridgesim/model_zoo.hpp"
#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace bridgesim;

namespace {

// Smooth time-varying 2-d guide exercising the RK4 paths.
LinearGuide time_varying_guide() {
  LinearGuide g;
  g.dim = 2;
  g.noise_dim = 2;
  g.constant_coefficients = false;
  g.B = [](double t) {
    Matrix b(2, 2);
    b << 0.0, 1.0 + 0.5 * t, -0.3, -0.2 * t;
    return b;
  };
  g.beta = [](double t) {
    Vector v(2);
    v << 0.3 * std::sin(t), 0.1;
    return v;
  };
  g.sigma = [](double t) {
    Matrix s(2, 2);
    s << 0.8 + 0.1 * t, 0.0, 0.2, 0.9;
    return s;
  };
  return g;
}

double trace_integral(const LinearGuide& g, double s, double t, int n = 4000) {
  // composite Simpson for int_s^t trace B(u) du
  if (n % 2 == 1) ++n;
  const double h = (t - s) / n;
  double acc = g.B(s).trace() + g.B(t).trace();
  for (int i = 1; i < n; ++i) acc += g.B(s + i * h).trace() * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Score at arbitrary s assembled from the standalone quantities,
// r(s,x) = Phi(T,s)' K(s)^{-1} (v - mu(s,x)).
Vector standalone_score(const LinearGuide& g, const BridgeSpec& spec, double s, const Vector& x) {
  Matrix phi = fundamental_matrix(g, spec.T, s);
  Matrix K = guide_covariance(g, s, spec.T);
  Vector mu = guide_mean(g, s, x, spec.T);
  return phi.transpose() * K.ldlt().solve(spec.v - mu);
}

}  // namespace

TEST_CASE("fundamental matrix closed forms") {
  SUBCASE("zero generator gives identity") {
    LinearGuide g = make_linear_guide(Matrix::Zero(3, 3), Vector::Zero(3), Matrix::Identity(3, 3));
    CHECK(fundamental_matrix(g, 0.7, 0.2) == Matrix::Identity(3, 3));
  }
  SUBCASE("scalar exponential") {
    LinearGuide g = make_ou_guide(1.0, 1.0);  // B = -1
    CHECK(fundamental_matrix(g, 1.0, 0.0)(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("time-varying scalar ODE phi' = t phi") {
    LinearGuide g;
    g.dim = 1;
    g.noise_dim = 1;
    g.B = [](double t) { return Matrix::Constant(1, 1, t); };
    g.beta = [](double) { return Vector::Zero(1); };
    g.sigma = [](double) { return Matrix::Identity(1, 1); };
    const double expected = std::exp(0.5);
    CHECK(std::abs(fundamental_matrix(g, 1.0, 0.0)(0, 0) - expected) < 1e-8);
  }
  SUBCASE("equal arguments give identity exactly") {
    LinearGuide g = time_varying_guide();
    CHECK(fundamental_matrix(g, 0.4, 0.4) == Matrix::Identity(2, 2));
  }
}

TEST_CASE("fundamental matrix composition and Liouville identities") {
  LinearGuide g = time_varying_guide();
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> runif(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    double a = runif(eng), b = runif(eng), c = runif(eng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    Matrix lhs = fundamental_matrix(g, c, b) * fundamental_matrix(g, b, a);
    Matrix rhs = fundamental_matrix(g, c, a);
    CHECK((lhs - rhs).norm() <= 1e-8);

    Matrix inv = fundamental_matrix(g, a, c);
    CHECK((inv * rhs - Matrix::Identity(2, 2)).norm() <= 1e-8);

    const double det = fundamental_matrix(g, c, a).determinant();
    CHECK(std::abs(det - std::exp(trace_integral(g, a, c))) <= 1e-6);
  }
}

TEST_CASE("guide mean closed forms") {
  Vector x(1);
  x[0] = 0.4;
  SUBCASE("constant drift integrates to x + theta (t - s)") {
    LinearGuide g = make_bm_guide(0.7, 1.0);
    Vector mu = guide_mean(g, 0.2, x, 0.9);
    CHECK(mu[0] == doctest::Approx(0.4 + 0.7 * 0.7).epsilon(1e-12));
  }
  SUBCASE("empty interval returns x") {
    LinearGuide g = make_bm_guide(0.7, 1.0);
    CHECK(guide_mean(g, 0.3, x, 0.3)[0] == 0.4);
  }
  SUBCASE("OU mean decays exponentially") {
    LinearGuide g = make_ou_guide(1.0, 1.0);
    Vector one(1);
    one[0] = 1.0;
    CHECK(guide_mean(g, 0.0, one, 1.0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  }
}

TEST_CASE("guide covariance closed forms") {
  SUBCASE("scaled BM variance is c^2 (t-s)") {
    LinearGuide g = make_bm_guide(0.0, 0.5);
    CHECK(guide_covariance(g, 0.25, 1.0)(0, 0) == doctest::Approx(0.25 * 0.75).epsilon(1e-12));
  }
  SUBCASE("OU variance matches the closed form") {
    LinearGuide g = make_ou_guide(1.0, 1.0);
    CHECK(guide_covariance(g, 0.0, 1.0)(0, 0) ==
          doctest::Approx(testsupport::ou_var(1.0, 1.0, 1.0)).epsilon(1e-9));
  }
  SUBCASE("covariance vanishes linearly as s -> t") {
    LinearGuide g = time_varying_guide();
    const double t = 0.8;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
      Matrix k = guide_covariance(g, t - delta, t);
      CHECK(k.norm() / delta == doctest::Approx(g.a_tilde(t).norm()).epsilon(0.05));
    }
  }
  SUBCASE("degenerate dispersion is rejected") {
    LinearGuide g = make_bm_guide(0.0, 0.0);
    CHECK_THROWS_AS(guide_covariance(g, 0.0, 1.0), numerical_error);
    CHECK_THROWS_AS(guide_mean(g, 0.0, Vector::Zero(1), 1.0), numerical_error);
  }
}

TEST_CASE("guide cache matches scalar closed forms") {
  const double c = 0.5, theta = 0.3;
  LinearGuide g = make_bm_guide(theta, c);
  BridgeSpec spec;
  spec.u = Vector::Zero(1);
  spec.v = Vector::Constant(1, 1.2);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 64);
  GuideCache cache = build_guide_cache(g, spec, grid);

  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double rem = spec.T - grid.node(k);
    CHECK(cache.L(k)(0, 0) == doctest::Approx(c * c * rem).epsilon(1e-12));
    CHECK(cache.pullback(k)[0] == doctest::Approx(1.2 - theta * rem).epsilon(1e-12));
    CHECK(cache.phi_T(k)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cache.log_det_K(k) == doctest::Approx(std::log(c * c * rem)).epsilon(1e-10));
  }
  CHECK(cache.pullback(grid.steps()) == spec.v);  // v(T) = v exactly
  CHECK(cache.phi_T(grid.steps()) == Matrix::Identity(1, 1));
}

TEST_CASE("guide cache L matches a high-resolution reference quadrature") {
  // B = [[0,1],[0,0]] is nilpotent, so Phi(s,tau) = I + B (s - tau)
  // exactly; the reference integrates Phi a Phi' with fine Simpson.
  Matrix B(2, 2);
  B << 0.0, 1.0, 0.0, 0.0;
  LinearGuide g = make_linear_guide(B, Vector::Zero(2), Matrix::Identity(2, 2));
  BridgeSpec spec;
  spec.u = Vector::Zero(2);
  spec.v = Vector::Constant(2, 1.0);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 32);
  GuideCache cache = build_guide_cache(g, spec, grid);

  auto reference = [&](double s) {
    const int n = 200000;
    const double h = (spec.T - s) / n;
    Matrix acc = Matrix::Zero(2, 2);
    for (int i = 0; i <= n; ++i) {
      const double tau = s + i * h;
      Matrix phi = Matrix::Identity(2, 2) + B * (s - tau);
      Matrix f = phi * phi.transpose();
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * f;
    }
    return (acc * h / 3.0).eval();
  };

  for (std::size_t k : {std::size_t{0}, std::size_t{10}, std::size_t{25}}) {
    Matrix ref = reference(grid.node(k));
    CHECK((cache.L(k) - ref).norm() / ref.norm() <= 1e-6);
  }
}

TEST_CASE("guide score closed forms") {
  BridgeSpec spec;
  spec.u = Vector::Zero(1);
  spec.v = Vector::Constant(1, 1.0);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 16);

  SUBCASE("score vanishes at the pullback point") {
    LinearGuide g = make_bm_guide(0.4, 0.8);
    GuideCache cache = build_guide_cache(g, spec, grid);
    Vector x = cache.pullback(3);
    CHECK(guide_score(cache, 3, x)[0] == 0.0);
  }
  SUBCASE("standard BM guide gives (v - x)/(T - s)") {
    LinearGuide g = make_bm_guide(0.0, 1.0);
    GuideCache cache = build_guide_cache(g, spec, grid);
    CHECK(guide_score(cache, 0, Vector::Zero(1))[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("scaled guide at the sine-example endpoint") {
    BridgeSpec spec2 = spec;
    spec2.v = Vector::Constant(1, std::numbers::pi / 2.0);
    LinearGuide g = make_bm_guide(0.0, 0.5);
    GuideCache cache = build_guide_cache(g, spec2, grid);
    // (pi/2) / (0.25 * 1) = 2 pi
    CHECK(guide_score(cache, 0, Vector::Zero(1))[0] ==
          doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  }
  SUBCASE("score is only defined at interior nodes") {
    LinearGuide g = make_bm_guide(0.0, 1.0);
    GuideCache cache = build_guide_cache(g, spec, grid);
    CHECK_THROWS_AS(guide_score(cache, grid.steps(), Vector::Zero(1)), std::invalid_argument);
  }
}

TEST_CASE("guide log density closed forms") {
  BridgeSpec spec;
  spec.u = Vector::Zero(1);
  spec.v = Vector::Zero(1);
  spec.T = 1.0;

  SUBCASE("standard normal at the BM guide") {
    LinearGuide g = make_bm_guide(0.0, 1.0);
    CHECK(guide_log_density(g, spec, 0.0, Vector::Zero(1)) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-10));
  }
  SUBCASE("OU guide equals the Gaussian with OU moments") {
    LinearGuide g = make_ou_guide(1.0, 1.0);
    Vector x(1);
    x[0] = 1.0;
    const double expected = testsupport::gaussian_log_pdf(0.0, testsupport::ou_mean(1.0, 1.0, 1.0),
                                                          testsupport::ou_var(1.0, 1.0, 1.0));
    CHECK(guide_log_density(g, spec, 0.0, x) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("score equals the x-gradient of the log density") {
  LinearGuide g = time_varying_guide();
  BridgeSpec spec;
  spec.u = Vector::Zero(2);
  spec.v = Vector::Constant(2, 0.8);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 16);
  GuideCache cache = build_guide_cache(g, spec, grid);

  std::mt19937_64 eng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k : {std::size_t{0}, std::size_t{5}, std::size_t{11}}) {
    Vector x(2);
    x << gauss(eng), gauss(eng);
    Vector r = cache.score(k, x);
    const double s = grid.node(k);
    for (int j = 0; j < 2; ++j) {
      const double h = 2e-5 * (1.0 + std::abs(x[j]));
      Vector hi = x, lo = x;
      hi[j] += h;
      lo[j] -= h;
      const double fd =
          (guide_log_density(g, spec, s, hi) - guide_log_density(g, spec, s, lo)) / (2.0 * h);
      CHECK(std::abs(fd - r[j]) / std::max(1.0, std::abs(r[j])) <= 1e-4);
    }
  }
}

TEST_CASE("curvature from the score matches Phi' K^{-1} Phi") {
  LinearGuide g = time_varying_guide();
  BridgeSpec spec;
  spec.u = Vector::Zero(2);
  spec.v = Vector::Constant(2, 0.5);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 16);
  GuideCache cache = build_guide_cache(g, spec, grid);

  const std::size_t k = 4;
  const double s = grid.node(k);
  Vector x(2);
  x << 0.3, -0.2;

  Matrix h_fd(2, 2);
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-5;
    Vector hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    h_fd.col(j) = -(cache.score(k, hi) - cache.score(k, lo)) / (2.0 * h);
  }
  CHECK((h_fd - h_fd.transpose()).norm() <= 1e-6 * h_fd.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h_fd + h_fd.transpose()));
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  Matrix phi = fundamental_matrix(g, spec.T, s);
  Matrix K = guide_covariance(g, s, spec.T);
  Matrix h_ref = phi.transpose() * K.ldlt().solve(phi);
  CHECK((h_fd - h_ref).norm() / h_ref.norm() <= 1e-4);
}

TEST_CASE("log density satisfies the backward equation") {
  LinearGuide g = time_varying_guide();
  BridgeSpec spec;
  spec.u = Vector::Zero(2);
  spec.v = Vector::Constant(2, 0.7);
  spec.T = 1.0;

  std::mt19937_64 eng(29);
  std::uniform_real_distribution<double> rs(0.05, 0.85);
  std::normal_distribution<double> gauss(0.0, 0.6);
  for (int rep = 0; rep < 25; ++rep) {
    const double s = rs(eng);
    Vector x(2);
    x << gauss(eng), gauss(eng);

    const double hs = 1e-5;
    const double dR_ds =
        (guide_log_density(g, spec, s + hs, x) - guide_log_density(g, spec, s - hs, x)) / (2.0 * hs);

    Vector r = standalone_score(g, spec, s, x);
    Matrix phi = fundamental_matrix(g, spec.T, s);
    Matrix K = guide_covariance(g, s, spec.T);
    Matrix H = phi.transpose() * K.ldlt().solve(phi);
    Matrix atil = g.a_tilde(s);
    const double generator_term = g.drift(s, x).dot(r) - 0.5 * (atil * H).trace();
    const double residual = dR_ds + generator_term + 0.5 * r.dot(atil * r);
    CHECK(std::abs(residual) <= 1e-3);
  }
}

TEST_CASE("(T - s) ||H(s)|| stays bounded over the grid") {
  LinearGuide g = time_varying_guide();
  BridgeSpec spec;
  spec.u = Vector::Zero(2);
  spec.v = Vector::Constant(2, 0.5);
  spec.T = 1.0;
  TimeGrid grid = make_bridge_grid(spec.T, 200);
  GuideCache cache = build_guide_cache(g, spec, grid);

  const double first = (spec.T - grid.node(0)) * cache.solve_L(0, Matrix::Identity(2, 2)).norm();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double scaled = (spec.T - grid.node(k)) * cache.solve_L(k, Matrix::Identity(2, 2)).norm();
    CHECK(scaled <= 10.0 * first);
  }
}

TEST_CASE("cache rejects degenerate guides and bad grids") {
  BridgeSpec spec;
  spec.u = Vector::Zero(1);
  spec.v = Vector::Zero(1);
  spec.T = 1.0;
  CHECK_THROWS_AS(build_guide_cache(make_bm_guide(0.0, 0.0), spec, make_bridge_grid(1.0, 8)),
                  numerical_error);
  CHECK_THROWS_AS(build_guide_cache(make_bm_guide(0.0, 1.0), spec, make_uniform_grid(0.1, 1.0, 8)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_guide_cache(make_bm_guide(0.0, 1.0), spec, make_uniform_grid(0.0, 0.9, 8)),
                  std::invalid_argument);
}
