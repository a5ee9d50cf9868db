#pragma once

#include "bridgesim/types.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace testsupport {

using bridgesim::Matrix;
using bridgesim::Vector;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n = 0;

  double se_mean() const { return std::sqrt(variance / static_cast<double>(n)); }
  double se_variance() const { return variance * std::sqrt(2.0 / static_cast<double>(n - 1)); }
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = xs.size();
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(m.n - 1);
  return m;
}

inline double gaussian_log_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - (x - mean) * (x - mean) / (2.0 * var);
}

// Closed-form OU transition for dX = -lambda X dt + sigma dW.
inline double ou_mean(double lambda, double x0, double dt) { return x0 * std::exp(-lambda * dt); }
inline double ou_var(double lambda, double sigma, double dt) {
  return sigma * sigma * (1.0 - std::exp(-2.0 * lambda * dt)) / (2.0 * lambda);
}
inline double ou_transition_log_pdf(double lambda, double sigma, double x0, double dt, double y) {
  return gaussian_log_pdf(y, ou_mean(lambda, x0, dt), ou_var(lambda, sigma, dt));
}

// Brownian bridge (scaled BM, dispersion sigma) from u at 0 to v at T.
inline double bb_mean(double u, double v, double t, double T) { return u + (v - u) * t / T; }
inline double bb_var(double sigma, double t, double T) { return sigma * sigma * t * (T - t) / T; }

// Conditional law of X_t given X_0 = u, X_T = v for the scalar linear
// process dX = -lambda X dt + sigma dW, via Gaussian conditioning of the
// joint (X_t, X_T).
struct GaussianConditional {
  double mean = 0.0;
  double var = 0.0;
};

inline GaussianConditional ou_bridge_marginal(double lambda, double sigma, double u, double v,
                                              double t, double T) {
  const double m_t = ou_mean(lambda, u, t);
  const double m_T = ou_mean(lambda, u, T);
  const double v_t = ou_var(lambda, sigma, t);
  const double v_T = ou_var(lambda, sigma, T);
  const double cov = v_t * std::exp(-lambda * (T - t));  // Cov(X_t, X_T)
  GaussianConditional out;
  out.mean = m_t + cov / v_T * (v - m_T);
  out.var = v_t - cov * cov / v_T;
  return out;
}

}  // namespace testsupport
