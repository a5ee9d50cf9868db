#pragma once

#include "bridgesim/samplers.hpp"

namespace bridgesim {

/// A one-or-more-parameter family of linear guides, theta |-> guide.
struct GuideFamily {
  int theta_dim = 1;
  std::function<LinearGuide(const Vector&)> make;

  LinearGuide at(const Vector& theta) const;
};

std::function<double(std::uint64_t, int)> harmonic_decay(double alpha0 = 0.1, double gamma = 10.0);
/// alpha_n = 1 / (10 + 2n), the schedule used for the trace-plot figure.
std::function<double(std::uint64_t, int)> trace_plot_decay();

struct TunerConfig {
  Vector theta0;
  int batch_size = 1;   // M proposals per outer iteration
  int inner_steps = 1;  // K gradient steps per batch
  std::uint64_t n_outer = 1000;
  std::function<double(std::uint64_t, int)> step_size = harmonic_decay();
  /// Central-difference step for theta-gradients: fd_step_rel * (1 + |theta_j|).
  double fd_step_rel = 1e-4;
  /// Importance-weight exponents are clamped at this value; clamped
  /// batches are counted, not hidden.
  double log_weight_clamp = 4.0;
  GuideQuadrature quad;

  void validate() const;
};

struct TunerContext {
  const DiffusionModel& model;
  const GuideFamily& family;
  const BridgeSpec& spec;
  const TimeGrid& grid;
  GuideQuadrature quad;
};

/// h(theta) = log ptilde_theta(0,u) + log psi_theta(T) re-evaluated on
/// the fixed trajectory; the guide cache is rebuilt for this theta.
double reevaluate_log_weight(const TunerContext& ctx, const Vector& theta, const Path& path);

struct TunerStepResult {
  Vector theta;
  /// exp(h(theta) - h(theta_n)) per path; exactly 1 when theta == theta_n.
  Vector reweights;
  bool clamped = false;
};

/// One stochastic KL-descent step on a batch sampled under theta_n:
/// theta <- theta - alpha (1/M) sum_m W_m grad_theta h_m(theta), with
/// importance weight W_m = exp(h_m(theta) - log_normalizer) estimating
/// dP*/dP_theta at the current theta (log_normalizer tracks log p(0,u),
/// whose exact value only scales the step).
TunerStepResult theta_gradient_step(const TunerContext& ctx, const TunerConfig& cfg,
                                    const Vector& theta, const Vector& theta_n,
                                    const std::vector<WeightedPath>& batch, double log_normalizer,
                                    double alpha, int threads = 1);

struct TunerResult {
  Matrix theta_trace;  // (n_outer + 1) x p; row 0 is theta0
  std::uint64_t clamped_steps = 0;
  double log_normalizer = 0.0;

  /// Mean of the last `window` trace rows (diagnostics for settledness).
  Vector tail_mean(std::size_t window) const;
};

TunerResult run_tuner(const DiffusionModel& model, const GuideFamily& family,
                      const BridgeSpec& spec, const TimeGrid& grid, const TunerConfig& cfg,
                      const RngSpec& rng, int threads = 1);

struct KlScanResult {
  Vector thetas;
  Vector kl;
  Vector std_err;
  double reference_ess = 0.0;
  double log_p_hat = 0.0;  // Monte Carlo estimate of log p(0,u;T,v)
  bool low_ess_warning = false;

  std::size_t argmin() const;
};

/// Estimates theta |-> KL(P* || P_theta) over a scan grid from one
/// reference ensemble: E_*[log(dP*/dP_theta)] with self-normalized
/// weights proportional to ptilde_ref(0,u) psi_ref(T), and p(0,u)
/// estimated as the ensemble mean of that same quantity.
KlScanResult kl_scan(const DiffusionModel& model, const GuideFamily& family,
                     const BridgeSpec& spec, const TimeGrid& grid, const Vector& theta_grid,
                     std::size_t n_mc, const Vector& theta_ref, const RngSpec& rng,
                     int threads = 1);

}  // namespace bridgesim
