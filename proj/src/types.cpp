#include "bridgesim/types.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace bridgesim {

namespace detail {

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string format_point(double t, const Vector& x) {
  std::string s = fmt::format("t={:.12g}, x=(", t);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s += fmt::format("{}{:.12g}", i ? ", " : "", x[i]);
  }
  return s + ")";
}

}  // namespace detail

Vector DiffusionModel::drift_checked(double t, const Vector& x) const {
  Vector b = drift(t, x);
  if (b.size() != dim || !detail::all_finite(b)) {
    throw numerical_error(fmt::format("drift returned invalid value at {}", detail::format_point(t, x)));
  }
  return b;
}

Matrix DiffusionModel::dispersion_checked(double t, const Vector& x) const {
  Matrix s = dispersion(t, x);
  if (s.rows() != dim || s.cols() != noise_dim || !detail::all_finite(s)) {
    throw numerical_error(
        fmt::format("dispersion returned invalid value at {}", detail::format_point(t, x)));
  }
  return s;
}

Matrix DiffusionModel::diffusion(double t, const Vector& x) const {
  Matrix s = dispersion_checked(t, x);
  Matrix a = s * s.transpose();
#ifndef NDEBUG
  // sigma sigma' is symmetric up to rounding; anything worse means the
  // dispersion callback misbehaves.
  double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw numerical_error(fmt::format("a(t,x) asymmetric by {:.3g} at {}", asym, detail::format_point(t, x)));
  }
#endif
  return a;
}

void DiffusionModel::validate() const {
  if (dim <= 0 || noise_dim <= 0) throw std::invalid_argument("model dimensions must be positive");
  if (!drift || !dispersion) throw std::invalid_argument("model drift/dispersion not set");
}

void BridgeSpec::validate() const {
  if (T <= 0.0) throw std::invalid_argument("bridge horizon T must be positive");
  if (u.size() == 0 || u.size() != v.size()) {
    throw std::invalid_argument("bridge endpoints u, v must be nonempty and of equal dimension");
  }
  if (!detail::all_finite(u) || !detail::all_finite(v)) {
    throw std::invalid_argument("bridge endpoints must be finite");
  }
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("time grid needs at least one node");
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    if (!(nodes_[k] < nodes_[k + 1])) {
      throw std::invalid_argument(fmt::format("time grid not strictly increasing at index {}", k));
    }
  }
  if (!std::isfinite(nodes_.front()) || !std::isfinite(nodes_.back())) {
    throw std::invalid_argument("time grid nodes must be finite");
  }
}

std::size_t TimeGrid::index_of(double t) const {
  std::size_t k = nearest_index(t);
  double span = std::max(1.0, std::abs(back() - front()));
  if (std::abs(nodes_[k] - t) > 1e-9 * span) {
    throw std::invalid_argument(fmt::format("no grid node at t={:.12g} (closest is {:.12g})", t, nodes_[k]));
  }
  return k;
}

std::size_t TimeGrid::nearest_index(double t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  if (it == nodes_.end()) return nodes_.size() - 1;
  if (it == nodes_.begin()) return 0;
  std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
  return (t - nodes_[hi - 1] <= nodes_[hi] - t) ? hi - 1 : hi;
}

TimeGrid make_bridge_grid(double T, int steps) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("bridge grid needs T > 0");
  if (steps < 2) throw std::invalid_argument("bridge grid needs at least 2 steps");
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    double s = T * static_cast<double>(k) / steps;
    nodes[static_cast<std::size_t>(k)] = s * (2.0 - s / T);
  }
  nodes.front() = 0.0;
  nodes.back() = T;  // tau(T) = T, pinned against rounding
  return TimeGrid(std::move(nodes));
}

TimeGrid make_uniform_grid(double t0, double t1, int steps) {
  if (!(t1 > t0)) throw std::invalid_argument("uniform grid needs t1 > t0");
  if (steps < 1) throw std::invalid_argument("uniform grid needs at least 1 step");
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    nodes[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * static_cast<double>(k) / steps;
  }
  nodes.back() = t1;
  return TimeGrid(std::move(nodes));
}

std::mt19937_64 RngSpec::make_engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace bridgesim
