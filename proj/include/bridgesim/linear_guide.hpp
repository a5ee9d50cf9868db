#pragma once

#include "bridgesim/types.hpp"

#include <Eigen/Cholesky>

namespace bridgesim {

/// Auxiliary linear process  dXt = B(t) Xt dt + beta(t) dt + sigma(t) dWt.
/// Its Gaussian transition density supplies the guiding term of the
/// proposal bridge. sigma(t) sigma(t)' must be positive definite.
struct LinearGuide {
  int dim = 0;
  int noise_dim = 0;
  std::function<Matrix(double)> B;
  std::function<Vector(double)> beta;
  std::function<Matrix(double)> sigma;
  /// Selects the matrix-exponential fast path; never auto-detected.
  bool constant_coefficients = false;
  /// Tuning parameter the coefficient callbacks were built from, if any.
  Vector theta;

  Matrix a_tilde(double t) const;
  Vector drift(double t, const Vector& x) const { return B(t) * x + beta(t); }
  void validate() const;
};

/// The guide viewed as a simulatable diffusion (used for exact linear
/// bridges and model/guide coincidence tests).
DiffusionModel model_from_guide(const LinearGuide& guide);

struct GuideQuadrature {
  /// Sub-intervals per bridge-grid interval when building a cache.
  int substeps_per_interval = 8;
  /// Sub-intervals for one-off quadratures over [s, T].
  int standalone_steps = 2048;
  /// RK4 steps per unit time for fundamental-matrix integration.
  int ode_steps_per_unit = 256;
};

/// Solution operator Phi(t, s) of x' = B(t) x: closed-form matrix
/// exponential for constant B, fixed-step RK4 otherwise. Works for
/// either time order (Phi(s, t) = Phi(t, s)^{-1}).
Matrix fundamental_matrix(const LinearGuide& guide, double t, double s,
                          const GuideQuadrature& quad = {});

/// mu_t(s, x) = Phi(t,s) x + int_s^t Phi(t,tau) beta(tau) dtau.
Vector guide_mean(const LinearGuide& guide, double s, const Vector& x, double t,
                  const GuideQuadrature& quad = {});

/// K_t(s) = int_s^t Phi(t,tau) a(tau) Phi(t,tau)' dtau, symmetrized;
/// throws numerical_error if the result is not positive definite.
Matrix guide_covariance(const LinearGuide& guide, double s, double t,
                        const GuideQuadrature& quad = {});

/// log ptilde(s, x; T, v): the Gaussian log transition density to the
/// bridge endpoint.
double guide_log_density(const LinearGuide& guide, const BridgeSpec& spec, double s,
                         const Vector& x, const GuideQuadrature& quad = {});

/// Per-node guiding quantities on a bridge grid, immutable after
/// construction and shareable across threads. The curvature H(s) is
/// never formed: its inverse L(s) = (int_s^T Phi(s,tau) a(tau)
/// Phi(s,tau)' dtau) is stored with a Cholesky factor and all uses go
/// through linear solves, since |H(s)| ~ 1/(T-s) near the endpoint.
class GuideCache {
 public:
  GuideCache(const LinearGuide& guide, const BridgeSpec& spec, const TimeGrid& grid,
             const GuideQuadrature& quad);

  const TimeGrid& grid() const { return grid_; }
  const BridgeSpec& spec() const { return spec_; }
  std::size_t steps() const { return grid_.steps(); }
  int dim() const { return dim_; }

  /// Phi(T, t_k); identity at k = N.
  const Matrix& phi_T(std::size_t k) const { return phi_T_[k]; }
  /// L(t_k) = H(t_k)^{-1}; only defined for k < N.
  const Matrix& L(std::size_t k) const { return L_[k]; }
  /// Pullback endpoint v(t_k); equals v exactly at k = N.
  const Vector& pullback(std::size_t k) const { return vpull_[k]; }
  /// log |K(t_k)| with K(s) = Phi(T,s) L(s) Phi(T,s)'.
  double log_det_K(std::size_t k) const { return logdetK_[k]; }

  /// Score rtilde(t_k, x) = H(t_k)(v(t_k) - x), via Cholesky solve.
  Vector score(std::size_t k, const Vector& x) const;
  /// L(t_k)^{-1} M by Cholesky solve (reconstructs H-products).
  Matrix solve_L(std::size_t k, const Matrix& m) const;
  /// log ptilde(t_k, x; T, v) from cached quantities (k < N).
  double log_density(std::size_t k, const Vector& x) const;

 private:
  void require_interior(std::size_t k) const;

  TimeGrid grid_;
  BridgeSpec spec_;
  int dim_;
  std::vector<Matrix> phi_T_;
  std::vector<Matrix> L_;
  std::vector<Eigen::LLT<Matrix>> llt_;  // size N, factor of L_[k]
  std::vector<Vector> vpull_;
  std::vector<double> logdetK_;
};

/// Convenience wrapper constructing the cache.
GuideCache build_guide_cache(const LinearGuide& guide, const BridgeSpec& spec,
                             const TimeGrid& grid, const GuideQuadrature& quad = {});

/// Score at a cache node (checked variant of GuideCache::score).
Vector guide_score(const GuideCache& cache, std::size_t k, const Vector& x);

}  // namespace bridgesim
