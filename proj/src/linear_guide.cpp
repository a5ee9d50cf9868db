#include "bridgesim/linear_guide.hpp"

#include <fmt/format.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace bridgesim {

namespace {

constexpr double kPdTol = 1e-10;
// Below T - s < kEndpointScale * T the covariance integral is replaced by
// its leading term a(T) (T - s).
constexpr double kEndpointScale = 1e-12;

double log2pi() { return std::log(2.0 * std::numbers::pi); }

void check_spd(const Matrix& m, const char* what, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw numerical_error(fmt::format("{}: eigenvalue computation failed at t={:.9g}", what, t));
  }
  const double lo = es.eigenvalues().minCoeff();
  const double dim = static_cast<double>(m.rows());
  if (!(lo > kPdTol * m.trace() / dim)) {
    throw numerical_error(
        fmt::format("{} not positive definite at t={:.9g} (min eigenvalue {:.3g})", what, t, lo));
  }
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  double s = 0.0;
  auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) s += std::log(diag[i]);
  return 2.0 * s;
}

template <class F>
void rk4_step(Matrix& m, double tau, double h, F&& f) {
  const Matrix k1 = f(tau, m);
  const Matrix k2 = f(tau + 0.5 * h, m + (0.5 * h) * k1);
  const Matrix k3 = f(tau + 0.5 * h, m + (0.5 * h) * k2);
  const Matrix k4 = f(tau + h, m + h * k3);
  m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct EndpointSweep {
  Matrix phi_ts;   // Phi(t, s)
  Matrix cov;      // int_s^t Phi(t,tau) a(tau) Phi(t,tau)' dtau
  Vector beta_int; // int_s^t Phi(t,tau) beta(tau) dtau
};

// Walks tau from t down to s integrating M(tau) = Phi(t, tau), which
// solves dM/dtau = -M B(tau), and accumulates the mean and covariance
// integrals by composite trapezoid on the same sub-grid.
EndpointSweep sweep_from_endpoint(const LinearGuide& g, double s, double t, int nsteps) {
  const int d = g.dim;
  Matrix m = Matrix::Identity(d, d);
  Matrix cov = Matrix::Zero(d, d);
  Vector bint = Vector::Zero(d);
  const double h = (s - t) / nsteps;  // negative

  Matrix step;  // constant-coefficient transfer over one sub-step
  if (g.constant_coefficients) step = (g.B(t) * (-h)).exp();

  Matrix atil = g.a_tilde(t);
  check_spd(atil, "guide a(t)", t);
  Matrix f_prev = atil;  // M a M' at tau = t with M = I
  Vector b_prev = g.beta(t);

  for (int j = 0; j < nsteps; ++j) {
    const double tau = t + h * j;
    if (g.constant_coefficients) {
      m = m * step;
    } else {
      rk4_step(m, tau, h, [&g](double u, const Matrix& w) -> Matrix { return -w * g.B(u); });
    }
    const double tau1 = (j + 1 == nsteps) ? s : t + h * (j + 1);
    Matrix f_next = m * g.a_tilde(tau1) * m.transpose();
    Vector b_next = m * g.beta(tau1);
    cov += (-h / 2.0) * (f_prev + f_next);
    bint += (-h / 2.0) * (b_prev + b_next);
    f_prev.swap(f_next);
    b_prev.swap(b_next);
  }
  if (!detail::all_finite(m) || !detail::all_finite(cov)) {
    throw numerical_error(fmt::format("guide quadrature diverged on [{:.9g}, {:.9g}]", s, t));
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {std::move(m), std::move(cov), std::move(bint)};
}

int standalone_steps(const GuideQuadrature& quad) { return std::max(16, quad.standalone_steps); }

}  // namespace

Matrix LinearGuide::a_tilde(double t) const {
  Matrix s = sigma(t);
  if (s.rows() != dim || s.cols() != noise_dim || !detail::all_finite(s)) {
    throw numerical_error(fmt::format("guide dispersion invalid at t={:.9g}", t));
  }
  return s * s.transpose();
}

void LinearGuide::validate() const {
  if (dim <= 0 || noise_dim <= 0) throw std::invalid_argument("guide dimensions must be positive");
  if (!B || !beta || !sigma) throw std::invalid_argument("guide coefficient functions not set");
}

DiffusionModel model_from_guide(const LinearGuide& guide) {
  guide.validate();
  DiffusionModel model;
  model.dim = guide.dim;
  model.noise_dim = guide.noise_dim;
  model.drift = [guide](double t, const Vector& x) { return guide.B(t) * x + guide.beta(t); };
  model.dispersion = [guide](double t, const Vector&) { return guide.sigma(t); };
  return model;
}

Matrix fundamental_matrix(const LinearGuide& guide, double t, double s, const GuideQuadrature& quad) {
  guide.validate();
  if (!std::isfinite(s) || !std::isfinite(t)) throw std::invalid_argument("times must be finite");
  const int d = guide.dim;
  if (s == t) return Matrix::Identity(d, d);
  if (guide.constant_coefficients) {
    return (guide.B(s) * (t - s)).exp();
  }
  const int n =
      std::max(8, static_cast<int>(std::ceil(std::abs(t - s) * std::max(1, quad.ode_steps_per_unit))));
  Matrix m = Matrix::Identity(d, d);
  const double h = (t - s) / n;
  for (int j = 0; j < n; ++j) {
    rk4_step(m, s + h * j, h, [&guide](double u, const Matrix& w) -> Matrix { return guide.B(u) * w; });
  }
  if (!detail::all_finite(m)) {
    throw numerical_error(fmt::format("fundamental matrix diverged integrating [{:.9g}, {:.9g}]", s, t));
  }
  return m;
}

Vector guide_mean(const LinearGuide& guide, double s, const Vector& x, double t,
                  const GuideQuadrature& quad) {
  guide.validate();
  if (x.size() != guide.dim) throw std::invalid_argument("state dimension mismatch");
  if (!(s <= t)) throw std::invalid_argument("guide_mean needs s <= t");
  if (s == t) return x;
  auto sweep = sweep_from_endpoint(guide, s, t, standalone_steps(quad));
  return sweep.phi_ts * x + sweep.beta_int;
}

Matrix guide_covariance(const LinearGuide& guide, double s, double t, const GuideQuadrature& quad) {
  guide.validate();
  if (!(s < t)) throw std::invalid_argument("guide_covariance needs s < t");
  auto sweep = sweep_from_endpoint(guide, s, t, standalone_steps(quad));
  check_spd(sweep.cov, "guide covariance K_t(s)", s);
  return sweep.cov;
}

double guide_log_density(const LinearGuide& guide, const BridgeSpec& spec, double s, const Vector& x,
                         const GuideQuadrature& quad) {
  guide.validate();
  spec.validate();
  if (!(s < spec.T)) throw std::invalid_argument("guide_log_density needs s < T");
  if (x.size() != guide.dim) throw std::invalid_argument("state dimension mismatch");

  const int d = guide.dim;
  Matrix cov;
  Vector mean;
  if (spec.T - s < kEndpointScale * spec.T) {
    cov = guide.a_tilde(spec.T) * (spec.T - s);
    mean = x + guide.drift(s, x) * (spec.T - s);
  } else {
    auto sweep = sweep_from_endpoint(guide, s, spec.T, standalone_steps(quad));
    cov = std::move(sweep.cov);
    mean = sweep.phi_ts * x + sweep.beta_int;
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw numerical_error(fmt::format("transition covariance not positive definite at s={:.9g}", s));
  }
  const Vector resid = spec.v - mean;
  const double quad_form = resid.dot(llt.solve(resid));
  return -0.5 * d * log2pi() - 0.5 * log_det_from_llt(llt) - 0.5 * quad_form;
}

GuideCache::GuideCache(const LinearGuide& guide, const BridgeSpec& spec, const TimeGrid& grid,
                       const GuideQuadrature& quad)
    : grid_(grid), spec_(spec), dim_(guide.dim) {
  guide.validate();
  spec.validate();
  if (guide.dim != spec.u.size()) throw std::invalid_argument("guide/bridge dimension mismatch");
  const std::size_t n = grid.steps();
  if (n < 2) throw std::invalid_argument("guide cache needs a grid with at least 2 steps");
  if (grid.front() != 0.0) throw std::invalid_argument("bridge grid must start at t=0");
  if (std::abs(grid.back() - spec.T) > 1e-12 * std::max(1.0, spec.T)) {
    throw std::invalid_argument("bridge grid must end at t=T");
  }

  const int d = dim_;
  const int nsub = std::max(8, quad.substeps_per_interval);
  const double T = spec.T;

  phi_T_.assign(n + 1, Matrix::Identity(d, d));
  L_.assign(n + 1, Matrix::Zero(d, d));
  vpull_.assign(n + 1, spec.v);
  logdetK_.assign(n + 1, -std::numeric_limits<double>::infinity());
  llt_.resize(n);

  const Matrix a_end = guide.a_tilde(T);
  check_spd(a_end, "guide a(t)", T);

  std::vector<double> logdet_phi(n + 1, 0.0);

  // Backward recursion over grid intervals. Per interval we integrate
  // W(tau) = Phi(t_k, tau) and S(tau) = Phi(tau, t_k) and accumulate the
  // local covariance/mean integrals, then splice them onto the tail.
  for (std::size_t k = n; k-- > 0;) {
    const double t0 = grid.node(k);
    const double t1 = grid.node(k + 1);
    const double h = (t1 - t0) / nsub;

    Matrix w = Matrix::Identity(d, d);
    Matrix sfwd = Matrix::Identity(d, d);
    Matrix q_cov = Matrix::Zero(d, d);
    Vector q_beta = Vector::Zero(d);
    double q_trace = 0.0;

    Matrix step_w, step_s;
    if (guide.constant_coefficients) {
      step_w = (guide.B(t0) * (-h)).exp();
      step_s = (guide.B(t0) * h).exp();
    }

    Matrix atil = guide.a_tilde(t0);
    check_spd(atil, "guide a(t)", t0);
    Matrix f_prev = atil;  // W a W' at tau = t0
    Vector b_prev = guide.beta(t0);
    double tr_prev = guide.B(t0).trace();

    for (int j = 0; j < nsub; ++j) {
      const double tau = t0 + h * j;
      if (guide.constant_coefficients) {
        w = w * step_w;
        sfwd = step_s * sfwd;
      } else {
        rk4_step(w, tau, h, [&guide](double u, const Matrix& m) -> Matrix { return -m * guide.B(u); });
        rk4_step(sfwd, tau, h, [&guide](double u, const Matrix& m) -> Matrix { return guide.B(u) * m; });
      }
      const double tau1 = (j + 1 == nsub) ? t1 : t0 + h * (j + 1);
      Matrix f_next = w * guide.a_tilde(tau1) * w.transpose();
      Vector b_next = w * guide.beta(tau1);
      const double tr_next = guide.B(tau1).trace();
      q_cov += (h / 2.0) * (f_prev + f_next);
      q_beta += (h / 2.0) * (b_prev + b_next);
      q_trace += (h / 2.0) * (tr_prev + tr_next);
      f_prev.swap(f_next);
      b_prev.swap(b_next);
      tr_prev = tr_next;
    }

    const Matrix& shrink = w;  // Phi(t_k, t_{k+1})
    Matrix grow = sfwd;        // Phi(t_{k+1}, t_k)

    Matrix L = q_cov + shrink * L_[k + 1] * shrink.transpose();
    L = 0.5 * (L + L.transpose()).eval();
    if (T - t0 < kEndpointScale * T) {
      L = a_end * (T - t0);
    }
    if (!detail::all_finite(L)) {
      throw numerical_error(fmt::format("guide cache diverged at node {} (t={:.9g})", k, t0));
    }
    L_[k] = L;
    vpull_[k] = shrink * vpull_[k + 1] - q_beta;
    phi_T_[k] = phi_T_[k + 1] * grow;
    logdet_phi[k] = logdet_phi[k + 1] + q_trace;

    check_spd(L_[k], "guide cache L(t_k)", t0);
    llt_[k].compute(L_[k]);
    if (llt_[k].info() != Eigen::Success) {
      throw numerical_error(fmt::format("Cholesky of L(t_k) failed at node {} (t={:.9g})", k, t0));
    }
    logdetK_[k] = log_det_from_llt(llt_[k]) + 2.0 * logdet_phi[k];
  }
}

void GuideCache::require_interior(std::size_t k) const {
  if (k >= grid_.steps()) {
    throw std::invalid_argument(
        fmt::format("guide quantities are only defined at nodes k < N (got k={}, N={})", k, grid_.steps()));
  }
}

Vector GuideCache::score(std::size_t k, const Vector& x) const {
  require_interior(k);
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Vector r = llt_[k].solve(vpull_[k] - x);
  if (!detail::all_finite(r)) {
    throw numerical_error(fmt::format("score solve failed at node {}", k));
  }
  return r;
}

Matrix GuideCache::solve_L(std::size_t k, const Matrix& m) const {
  require_interior(k);
  return llt_[k].solve(m);
}

double GuideCache::log_density(std::size_t k, const Vector& x) const {
  require_interior(k);
  const Vector resid = vpull_[k] - x;
  const double quad_form = resid.dot(llt_[k].solve(resid));
  return -0.5 * dim_ * log2pi() - 0.5 * logdetK_[k] - 0.5 * quad_form;
}

GuideCache build_guide_cache(const LinearGuide& guide, const BridgeSpec& spec, const TimeGrid& grid,
                             const GuideQuadrature& quad) {
  return GuideCache(guide, spec, grid, quad);
}

Vector guide_score(const GuideCache& cache, std::size_t k, const Vector& x) {
  return cache.score(k, x);
}

}  // namespace bridgesim
