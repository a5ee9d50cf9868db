#include "bridgesim/tuner.hpp"

#include "bridgesim/parallel.hpp"

#include <fmt/format.h>

#include <cmath>

namespace bridgesim {

namespace {

// Streaming log of the running mean of exp(h) values.
class LogMeanExp {
 public:
  void add(double log_value) {
    if (count_ == 0) {
      log_sum_ = log_value;
    } else {
      const double hi = std::max(log_sum_, log_value);
      log_sum_ = hi + std::log(std::exp(log_sum_ - hi) + std::exp(log_value - hi));
    }
    ++count_;
  }
  double log_mean() const { return log_sum_ - std::log(static_cast<double>(count_)); }
  std::uint64_t count() const { return count_; }

 private:
  double log_sum_ = 0.0;
  std::uint64_t count_ = 0;
};

Matrix batch_log_weights(const TunerContext& ctx, const Vector& theta,
                         const std::vector<WeightedPath>& batch, int threads) {
  LinearGuide guide = ctx.family.at(theta);
  GuideCache cache(guide, ctx.spec, ctx.grid, ctx.quad);
  Matrix h(batch.size(), 1);
  parallel_for_index(batch.size(), threads, [&](std::size_t m) {
    h(static_cast<Eigen::Index>(m), 0) = path_log_weight(ctx.model, guide, cache, batch[m].path);
  });
  return h;
}

}  // namespace

LinearGuide GuideFamily::at(const Vector& theta) const {
  if (!make) throw std::invalid_argument("guide family has no constructor");
  if (theta.size() != theta_dim) {
    throw std::invalid_argument(
        fmt::format("guide family expects {}-dim theta, got {}", theta_dim, theta.size()));
  }
  LinearGuide g = make(theta);
  g.theta = theta;
  return g;
}

std::function<double(std::uint64_t, int)> harmonic_decay(double alpha0, double gamma) {
  if (!(alpha0 > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("decay needs positive parameters");
  return [alpha0, gamma](std::uint64_t n, int) {
    return alpha0 * gamma / (gamma + static_cast<double>(n));
  };
}

std::function<double(std::uint64_t, int)> trace_plot_decay() {
  return [](std::uint64_t n, int) { return 1.0 / (10.0 + 2.0 * static_cast<double>(n)); };
}

void TunerConfig::validate() const {
  if (theta0.size() < 1) throw std::invalid_argument("tuner needs a starting theta");
  if (batch_size < 1) throw std::invalid_argument("tuner batch size M must be >= 1");
  if (inner_steps < 1) throw std::invalid_argument("tuner inner step count K must be >= 1");
  if (!step_size) throw std::invalid_argument("tuner step size schedule not set");
  if (!(step_size(1, 1) > 0.0)) throw std::invalid_argument("step sizes must be positive");
  if (!(fd_step_rel > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
}

double reevaluate_log_weight(const TunerContext& ctx, const Vector& theta, const Path& path) {
  LinearGuide guide = ctx.family.at(theta);
  GuideCache cache(guide, ctx.spec, ctx.grid, ctx.quad);
  return path_log_weight(ctx.model, guide, cache, path);
}

TunerStepResult theta_gradient_step(const TunerContext& ctx, const TunerConfig& cfg,
                                    const Vector& theta, const Vector& theta_n,
                                    const std::vector<WeightedPath>& batch, double log_normalizer,
                                    double alpha, int threads) {
  if (batch.empty()) throw std::invalid_argument("theta_gradient_step needs a nonempty batch");
  const std::size_t m_count = batch.size();
  const Eigen::Index p = theta.size();

  // h at theta_n comes with the batch; at theta it is re-evaluated on
  // the frozen trajectories (identical arithmetic when theta == theta_n,
  // so the reweights are exactly one there).
  Vector h_ref(static_cast<Eigen::Index>(m_count));
  for (std::size_t m = 0; m < m_count; ++m) {
    h_ref[static_cast<Eigen::Index>(m)] = batch[m].log_ptilde0 + batch[m].log_psi;
  }
  Vector h_cur;
  if (theta == theta_n) {
    h_cur = h_ref;
  } else {
    h_cur = batch_log_weights(ctx, theta, batch, threads).col(0);
  }

  Matrix grad(static_cast<Eigen::Index>(m_count), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double delta = cfg.fd_step_rel * (1.0 + std::abs(theta[j]));
    Vector theta_hi = theta, theta_lo = theta;
    theta_hi[j] += delta;
    theta_lo[j] -= delta;
    const Vector h_hi = batch_log_weights(ctx, theta_hi, batch, threads).col(0);
    const Vector h_lo = batch_log_weights(ctx, theta_lo, batch, threads).col(0);
    grad.col(j) = (h_hi - h_lo) / (2.0 * delta);
  }

  TunerStepResult out;
  out.reweights = (h_cur - h_ref).array().exp();
  Vector step = Vector::Zero(p);
  for (std::size_t m = 0; m < m_count; ++m) {
    const Eigen::Index mi = static_cast<Eigen::Index>(m);
    double exponent = h_cur[mi] - log_normalizer;
    if (exponent > cfg.log_weight_clamp) {
      exponent = cfg.log_weight_clamp;
      out.clamped = true;
    }
    step += std::exp(exponent) * grad.row(mi).transpose();
  }
  step /= static_cast<double>(m_count);
  out.theta = theta - alpha * step;
  if (!detail::all_finite(out.theta)) throw numerical_error("tuner step produced non-finite theta");
  return out;
}

TunerResult run_tuner(const DiffusionModel& model, const GuideFamily& family,
                      const BridgeSpec& spec, const TimeGrid& grid, const TunerConfig& cfg,
                      const RngSpec& rng, int threads) {
  cfg.validate();
  TunerContext ctx{model, family, spec, grid, cfg.quad};
  const int workers = resolve_threads(threads);
  const Eigen::Index p = cfg.theta0.size();

  TunerResult result;
  result.theta_trace.resize(static_cast<Eigen::Index>(cfg.n_outer) + 1, p);
  result.theta_trace.row(0) = cfg.theta0.transpose();

  Vector theta = cfg.theta0;
  LogMeanExp normalizer;
  const std::size_t m_count = static_cast<std::size_t>(cfg.batch_size);

  for (std::uint64_t n = 1; n <= cfg.n_outer; ++n) {
    const Vector theta_n = theta;
    LinearGuide guide_n = family.at(theta_n);
    GuideCache cache_n(guide_n, spec, grid, cfg.quad);

    std::vector<WeightedPath> batch(m_count);
    parallel_for_index(m_count, workers, [&](std::size_t m) {
      batch[m] = simulate_guided_bridge(model, guide_n, cache_n,
                                        rng.substream((n - 1) * m_count + m));
    });
    for (const auto& wp : batch) normalizer.add(wp.log_ptilde0 + wp.log_psi);

    for (int k = 1; k <= cfg.inner_steps; ++k) {
      TunerStepResult step = theta_gradient_step(ctx, cfg, theta, theta_n, batch,
                                                 normalizer.log_mean(), cfg.step_size(n, k), workers);
      theta = step.theta;
      if (step.clamped) ++result.clamped_steps;
    }
    result.theta_trace.row(static_cast<Eigen::Index>(n)) = theta.transpose();
  }
  result.log_normalizer = normalizer.count() > 0 ? normalizer.log_mean() : 0.0;
  return result;
}

Vector TunerResult::tail_mean(std::size_t window) const {
  const Eigen::Index rows = theta_trace.rows();
  const Eigen::Index w = std::min<Eigen::Index>(static_cast<Eigen::Index>(window), rows);
  if (w < 1) throw std::invalid_argument("tail_mean needs a positive window");
  return theta_trace.bottomRows(w).colwise().mean().transpose();
}

std::size_t KlScanResult::argmin() const {
  Eigen::Index best = 0;
  kl.minCoeff(&best);
  return static_cast<std::size_t>(best);
}

KlScanResult kl_scan(const DiffusionModel& model, const GuideFamily& family,
                     const BridgeSpec& spec, const TimeGrid& grid, const Vector& theta_grid,
                     std::size_t n_mc, const Vector& theta_ref, const RngSpec& rng, int threads) {
  if (theta_grid.size() < 1) throw std::invalid_argument("kl_scan needs a nonempty theta grid");
  if (n_mc < 2) throw std::invalid_argument("kl_scan needs at least 2 reference paths");
  if (family.theta_dim != 1) throw std::invalid_argument("kl_scan scans scalar theta families");
  const int workers = resolve_threads(threads);
  TunerContext ctx{model, family, spec, grid, GuideQuadrature{}};

  LinearGuide guide_ref = family.at(theta_ref);
  GuideCache cache_ref(guide_ref, spec, grid, GuideQuadrature{});
  std::vector<WeightedPath> paths(n_mc);
  parallel_for_index(n_mc, workers, [&](std::size_t i) {
    paths[i] = simulate_guided_bridge(model, guide_ref, cache_ref, rng.substream(i));
  });

  // Reference log weights h_ref = log ptilde_ref(0,u) + log psi_ref; their
  // mean exp estimates p(0,u) and their normalized exponentials weight the
  // target-law expectations.
  Vector h_ref(static_cast<Eigen::Index>(n_mc));
  for (std::size_t i = 0; i < n_mc; ++i) {
    h_ref[static_cast<Eigen::Index>(i)] = paths[i].log_ptilde0 + paths[i].log_psi;
  }
  const double h_max = h_ref.maxCoeff();
  const Vector w_raw = (h_ref.array() - h_max).exp();
  const double w_sum = w_raw.sum();
  const Vector w = w_raw / w_sum;

  KlScanResult out;
  out.thetas = theta_grid;
  out.kl.resize(theta_grid.size());
  out.std_err.resize(theta_grid.size());
  out.log_p_hat = h_max + std::log(w_sum / static_cast<double>(n_mc));
  out.reference_ess = 1.0 / w.squaredNorm();
  out.low_ess_warning = out.reference_ess < 0.01 * static_cast<double>(n_mc);

  parallel_for_index(static_cast<std::size_t>(theta_grid.size()), workers, [&](std::size_t j) {
    const Eigen::Index jj = static_cast<Eigen::Index>(j);
    Vector theta(1);
    theta[0] = theta_grid[jj];
    LinearGuide guide = ctx.family.at(theta);
    GuideCache cache(guide, ctx.spec, ctx.grid, ctx.quad);
    Vector h(static_cast<Eigen::Index>(n_mc));
    for (std::size_t i = 0; i < n_mc; ++i) {
      h[static_cast<Eigen::Index>(i)] = path_log_weight(ctx.model, guide, cache, paths[i].path);
    }
    const double mean_h = w.dot(h);
    out.kl[jj] = mean_h - out.log_p_hat;
    double var = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const double c = h[i] - mean_h;
      var += w[i] * w[i] * c * c;
    }
    out.std_err[jj] = std::sqrt(var);
  });
  return out;
}

}  // namespace bridgesim
