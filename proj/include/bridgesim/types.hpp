#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgesim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a computation produces non-finite or otherwise unusable
/// numbers (NaN drift values, indefinite covariance, ...). The message
/// carries the offending location.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the brute-force oracle cannot produce any sample within
/// its forward-simulation budget.
class oracle_infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Target SDE  dX_t = b(t, X_t) dt + sigma(t, X_t) dW_t  on R^d with
/// d'-dimensional driving noise.
struct DiffusionModel {
  int dim = 0;
  int noise_dim = 0;
  std::function<Vector(double, const Vector&)> drift;
  std::function<Matrix(double, const Vector&)> dispersion;

  /// sigma sigma' at (t, x); checked finite.
  Matrix diffusion(double t, const Vector& x) const;

  /// drift with finiteness check; throws numerical_error with context.
  Vector drift_checked(double t, const Vector& x) const;
  Matrix dispersion_checked(double t, const Vector& x) const;

  void validate() const;
};

/// Bridge endpoints: condition the process started in u at time 0 on
/// hitting v at time T.
struct BridgeSpec {
  Vector u;
  Vector v;
  double T = 0.0;

  void validate() const;
};

/// Strictly increasing time nodes t_0 < ... < t_N.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> nodes);

  std::size_t size() const { return nodes_.size(); }
  std::size_t steps() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }
  double node(std::size_t k) const { return nodes_[k]; }
  double dt(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Index of the node equal to t (tolerance 1e-9 * span); throws
  /// std::invalid_argument if no node matches.
  std::size_t index_of(double t) const;

  /// Index of the node closest to t.
  std::size_t nearest_index(double t) const;

  bool operator==(const TimeGrid& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<double> nodes_;
};

/// Grid for bridge simulation on [0, T]: t_k = tau(k T / N) with
/// tau(s) = s (2 - s/T), so that T - t_k = T (1 - k/N)^2 and spacing
/// shrinks quadratically toward T where the proposal drift blows up.
TimeGrid make_bridge_grid(double T, int steps);

/// Uniform grid on [t0, t1].
TimeGrid make_uniform_grid(double t0, double t1, int steps);

/// A discrete trajectory: states.row(k) is the state at grid.node(k).
struct Path {
  TimeGrid grid;
  Matrix states;  // (N+1) x d

  int dim() const { return static_cast<int>(states.cols()); }
  Vector state(std::size_t k) const { return states.row(k).transpose(); }
  Vector terminal() const { return states.row(states.rows() - 1).transpose(); }
};

/// Reproducible randomness: a (seed, stream) pair fully determines every
/// draw. Distinct streams give independent-for-all-practical-purposes
/// generators, so workers can simulate concurrently.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::mt19937_64 make_engine() const;
  RngSpec with_stream(std::uint64_t s) const { return RngSpec{seed, s}; }
  RngSpec substream(std::uint64_t offset) const { return RngSpec{seed, stream + offset}; }
};

namespace detail {
bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);
std::string format_point(double t, const Vector& x);
}  // namespace detail

}  // namespace bridgesim
