#include "bridgesim/oracle.hpp"

#include "bridgesim/euler.hpp"
#include "bridgesim/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bridgesim {

namespace {

void require_low_dim(int dim, const char* what) {
  if (dim > 2) {
    throw std::invalid_argument(fmt::format("{} supports d <= 2 only (got d={})", what, dim));
  }
}

std::vector<std::size_t> sorted_order(const Vector& values) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return idx;
}

}  // namespace

double default_rejection_epsilon(const DiffusionModel& model, const BridgeSpec& spec) {
  const Matrix sigma = model.dispersion_checked(spec.T, spec.v);
  return 0.02 * std::sqrt(spec.T) * sigma.norm();
}

RejectionResult rejection_bridge_sample(const DiffusionModel& model, const BridgeSpec& spec,
                                        const TimeGrid& grid, double epsilon,
                                        std::size_t n_target, std::uint64_t max_forward,
                                        const RngSpec& rng, int threads) {
  model.validate();
  spec.validate();
  require_low_dim(model.dim, "rejection_bridge_sample");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (n_target < 1) throw std::invalid_argument("n_target must be at least 1");
  if (max_forward < 1) throw std::invalid_argument("max_forward must be at least 1");

  const int workers = resolve_threads(threads);
  const std::uint64_t round = std::max<std::uint64_t>(1024, static_cast<std::uint64_t>(workers) * 256);

  RejectionResult result;
  std::uint64_t base = 0;
  while (base < max_forward && result.kept.size() < n_target) {
    const std::uint64_t count = std::min<std::uint64_t>(round, max_forward - base);
    // Kept paths are merged in index order afterwards, so the outcome is
    // independent of the thread count.
    std::vector<std::pair<std::uint64_t, Path>> found;
    std::mutex found_mutex;
    parallel_for_index(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
      const std::uint64_t id = base + i;
      Path path = euler_maruyama(model, spec.u, grid, rng.substream(id));
      if ((path.terminal() - spec.v).norm() <= epsilon) {
        std::lock_guard<std::mutex> lock(found_mutex);
        found.emplace_back(id, std::move(path));
      }
    });
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [id, path] : found) result.kept.push_back(std::move(path));
    base += count;
  }
  result.attempted = base;
  result.acceptance_fraction =
      static_cast<double>(result.kept.size()) / static_cast<double>(std::max<std::uint64_t>(1, base));
  if (result.kept.empty()) {
    throw oracle_infeasible(
        fmt::format("no forward path hit the epsilon ball after {} attempts (epsilon={:.3g})", base,
                    epsilon));
  }
  if (result.kept.size() > n_target) result.kept.resize(n_target);
  return result;
}

DensityEstimate transition_density_estimate(const DiffusionModel& model, double s, const Vector& x,
                                            double t, std::size_t n_paths, double bandwidth,
                                            const RngSpec& rng, int threads, int grid_points,
                                            int time_steps) {
  model.validate();
  require_low_dim(model.dim, "transition_density_estimate");
  if (!(t > s)) throw std::invalid_argument("transition_density_estimate needs t > s");
  if (n_paths < 2) throw std::invalid_argument("need at least 2 paths");
  if (grid_points < 8) throw std::invalid_argument("need at least 8 grid points");

  const int d = model.dim;
  TimeGrid grid = make_uniform_grid(s, t, std::max(1, time_steps));
  Matrix terminals(n_paths, d);
  parallel_for_index(n_paths, resolve_threads(threads), [&](std::size_t i) {
    Path p = euler_maruyama(model, x, grid, rng.substream(i));
    terminals.row(static_cast<Eigen::Index>(i)) = p.terminal().transpose();
  });

  DensityEstimate est;
  const Vector lo = terminals.colwise().minCoeff();
  const Vector hi = terminals.colwise().maxCoeff();
  const double spread = (hi - lo).cwiseAbs().maxCoeff();
  if (spread < 1e-12 * std::max(1.0, terminals.cwiseAbs().maxCoeff())) {
    est.point_mass = true;
    est.points = terminals.row(0);
    est.warning = "terminal distribution is a point mass; refusing bandwidth smoothing";
    return est;
  }
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (static_cast<double>(n_paths) < 10.0 / std::pow(bandwidth, d)) {
    est.warning = "n_paths is small relative to the bandwidth; estimate will be noisy";
  }

  const double margin = 4.0 * bandwidth;
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double norm1d = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth);

  if (d == 1) {
    Vector data = terminals.col(0);
    std::sort(data.data(), data.data() + data.size());
    const double a = data[0] - margin, b = data[data.size() - 1] + margin;
    const double dx = (b - a) / (grid_points - 1);
    est.points.resize(grid_points, 1);
    est.density.resize(grid_points);
    est.cell_volume = dx;
    const double window = 6.0 * bandwidth;
    Eigen::Index lo_i = 0, hi_i = 0;
    for (int g = 0; g < grid_points; ++g) {
      const double y = a + g * dx;
      while (lo_i < data.size() && data[lo_i] < y - window) ++lo_i;
      if (hi_i < lo_i) hi_i = lo_i;
      while (hi_i < data.size() && data[hi_i] <= y + window) ++hi_i;
      double acc = 0.0;
      for (Eigen::Index i = lo_i; i < hi_i; ++i) {
        const double z = y - data[i];
        acc += std::exp(-z * z * inv2h2);
      }
      est.points(g, 0) = y;
      est.density[g] = acc * norm1d / static_cast<double>(n_paths);
    }
    return est;
  }

  // d == 2: product Gaussian kernel on a rectangular grid.
  const int m = std::min(grid_points, 128);
  const double ax = lo[0] - margin, bx = hi[0] + margin;
  const double ay = lo[1] - margin, by = hi[1] + margin;
  const double dx = (bx - ax) / (m - 1), dy = (by - ay) / (m - 1);
  est.points.resize(static_cast<Eigen::Index>(m) * m, 2);
  est.density = Vector::Zero(static_cast<Eigen::Index>(m) * m);
  est.cell_volume = dx * dy;
  const double norm2d = norm1d * norm1d;
  for (Eigen::Index i = 0; i < terminals.rows(); ++i) {
    const double px = terminals(i, 0), py = terminals(i, 1);
    const int gx0 = std::max(0, static_cast<int>((px - 6.0 * bandwidth - ax) / dx));
    const int gx1 = std::min(m - 1, static_cast<int>((px + 6.0 * bandwidth - ax) / dx) + 1);
    const int gy0 = std::max(0, static_cast<int>((py - 6.0 * bandwidth - ay) / dy));
    const int gy1 = std::min(m - 1, static_cast<int>((py + 6.0 * bandwidth - ay) / dy) + 1);
    for (int gi = gx0; gi <= gx1; ++gi) {
      const double zx = ax + gi * dx - px;
      const double kx = std::exp(-zx * zx * inv2h2);
      for (int gj = gy0; gj <= gy1; ++gj) {
        const double zy = ay + gj * dy - py;
        est.density[static_cast<Eigen::Index>(gi) * m + gj] += kx * std::exp(-zy * zy * inv2h2);
      }
    }
  }
  est.density *= norm2d / static_cast<double>(n_paths);
  for (int gi = 0; gi < m; ++gi) {
    for (int gj = 0; gj < m; ++gj) {
      est.points(static_cast<Eigen::Index>(gi) * m + gj, 0) = ax + gi * dx;
      est.points(static_cast<Eigen::Index>(gi) * m + gj, 1) = ay + gj * dy;
    }
  }
  return est;
}

double wasserstein1(const Vector& values_a, const Vector& weights_a, const Vector& values_b,
                    const Vector& weights_b) {
  if (values_a.size() == 0 || values_b.size() == 0) {
    throw std::invalid_argument("wasserstein1 needs nonempty samples");
  }
  if (values_a.size() != weights_a.size() || values_b.size() != weights_b.size()) {
    throw std::invalid_argument("values/weights size mismatch");
  }
  const double wa_total = weights_a.sum();
  const double wb_total = weights_b.sum();
  if (!(wa_total > 0.0) || !(wb_total > 0.0)) throw std::invalid_argument("weights must sum > 0");

  auto ia = sorted_order(values_a);
  auto ib = sorted_order(values_b);
  std::size_t pa = 0, pb = 0;
  double cdf_a = 0.0, cdf_b = 0.0;
  double dist = 0.0;
  double x_prev = 0.0;
  bool first = true;
  while (pa < ia.size() || pb < ib.size()) {
    double x_next;
    if (pb == ib.size() || (pa < ia.size() && values_a[ia[pa]] <= values_b[ib[pb]])) {
      x_next = values_a[ia[pa]];
    } else {
      x_next = values_b[ib[pb]];
    }
    if (!first) dist += std::abs(cdf_a - cdf_b) * (x_next - x_prev);
    while (pa < ia.size() && values_a[ia[pa]] <= x_next) cdf_a += weights_a[ia[pa++]] / wa_total;
    while (pb < ib.size() && values_b[ib[pb]] <= x_next) cdf_b += weights_b[ib[pb++]] / wb_total;
    x_prev = x_next;
    first = false;
  }
  return dist;
}

double marginal_distance(const WeightedEnsemble& weighted, const std::vector<Path>& oracle_paths,
                         double t) {
  if (weighted.samples.empty() || oracle_paths.empty()) {
    throw std::invalid_argument("marginal_distance needs nonempty ensembles");
  }
  const int d = weighted.samples.front().path.dim();
  require_low_dim(d, "marginal_distance");
  const std::size_t ka = weighted.samples.front().path.grid.index_of(t);
  const std::size_t kb = oracle_paths.front().grid.index_of(t);

  const Vector wa = weighted.normalized_weights();
  const Vector wb = Vector::Ones(static_cast<Eigen::Index>(oracle_paths.size()));
  double worst = 0.0;
  for (int c = 0; c < d; ++c) {
    Vector va(static_cast<Eigen::Index>(weighted.samples.size()));
    for (std::size_t i = 0; i < weighted.samples.size(); ++i) {
      va[static_cast<Eigen::Index>(i)] = weighted.samples[i].path.states(static_cast<Eigen::Index>(ka), c);
    }
    Vector vb(static_cast<Eigen::Index>(oracle_paths.size()));
    for (std::size_t i = 0; i < oracle_paths.size(); ++i) {
      vb[static_cast<Eigen::Index>(i)] = oracle_paths[i].states(static_cast<Eigen::Index>(kb), c);
    }
    worst = std::max(worst, wasserstein1(va, wa, vb, wb));
  }
  return worst;
}

}  // namespace bridgesim
