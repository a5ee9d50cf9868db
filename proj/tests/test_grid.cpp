#include "bridgesim/types.hpp"

#include "doctest.h"

#include <random>

using namespace bridgesim;

TEST_CASE("bridge grid applies the quadratic time change") {
  TimeGrid g = make_bridge_grid(1.0, 2);
  REQUIRE(g.size() == 3);
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(g.node(2) == 1.0);

  // tau(s) = s (2 - s/2) at s = 0, 0.5, 1, 1.5, 2
  TimeGrid g2 = make_bridge_grid(2.0, 4);
  const double expected[] = {0.0, 0.875, 1.5, 1.875, 2.0};
  for (int k = 0; k <= 4; ++k) CHECK(g2.node(k) == doctest::Approx(expected[k]).epsilon(1e-15));
}

TEST_CASE("bridge grid rejects bad arguments") {
  CHECK_THROWS_AS(make_bridge_grid(1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_bridge_grid(0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_bridge_grid(-2.0, 10), std::invalid_argument);
}

TEST_CASE("bridge grid nodes are monotone with exact endpoints") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> runif(0.1, 10.0);
  std::uniform_int_distribution<int> rn(2, 500);
  for (int rep = 0; rep < 50; ++rep) {
    const double T = runif(eng);
    const int n = rn(eng);
    TimeGrid g = make_bridge_grid(T, n);
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(n) == T);
    for (int k = 0; k < n; ++k) CHECK(g.node(k) < g.node(k + 1));
    // closed form of the remaining time: T - t_k = T (1 - k/n)^2
    for (int k = 0; k <= n; ++k) {
      const double rem = 1.0 - static_cast<double>(k) / n;
      CHECK(T - g.node(k) == doctest::Approx(T * rem * rem).epsilon(1e-10));
    }
  }
}

TEST_CASE("uniform grid and node lookup") {
  TimeGrid g = make_uniform_grid(0.0, 2.0, 8);
  CHECK(g.steps() == 8);
  CHECK(g.dt(3) == doctest::Approx(0.25));
  CHECK(g.index_of(0.75) == 3);
  CHECK(g.nearest_index(0.76) == 3);
  CHECK_THROWS_AS(g.index_of(0.76), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(std::vector<double>{0.0, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(std::vector<double>{}), std::invalid_argument);
}
