#include "bridgesim/model_zoo.hpp"

#include <cmath>

namespace bridgesim {

namespace {

DiffusionModel scalar_model(std::function<double(double)> b, double sigma) {
  DiffusionModel m;
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [b = std::move(b)](double, const Vector& x) {
    Vector out(1);
    out[0] = b(x[0]);
    return out;
  };
  m.dispersion = [sigma](double, const Vector&) {
    Matrix s(1, 1);
    s(0, 0) = sigma;
    return s;
  };
  return m;
}

}  // namespace

DiffusionModel make_bm_drift_model(double beta1, double sigma) {
  return scalar_model([beta1](double) { return beta1; }, sigma);
}

DiffusionModel make_ou_model(double lambda, double sigma) {
  return scalar_model([lambda](double x) { return -lambda * x; }, sigma);
}

DiffusionModel make_sine_model(double beta1, double beta2, double sigma) {
  return scalar_model([beta1, beta2](double x) { return beta1 - beta2 * std::sin(8.0 * x); }, sigma);
}

DiffusionModel make_polynomial_model(const Vector& coeffs, double sigma) {
  if (coeffs.size() < 1) throw std::invalid_argument("polynomial drift needs coefficients");
  return scalar_model(
      [coeffs](double x) {
        double acc = 0.0;
        for (Eigen::Index i = coeffs.size() - 1; i >= 0; --i) acc = acc * x + coeffs[i];
        return acc;
      },
      sigma);
}

LinearGuide make_linear_guide(const Matrix& B, const Vector& beta, const Matrix& sigma) {
  if (B.rows() != B.cols() || B.rows() != beta.size() || sigma.rows() != B.rows()) {
    throw std::invalid_argument("linear guide coefficient shapes are inconsistent");
  }
  LinearGuide g;
  g.dim = static_cast<int>(B.rows());
  g.noise_dim = static_cast<int>(sigma.cols());
  g.constant_coefficients = true;
  g.B = [B](double) { return B; };
  g.beta = [beta](double) { return beta; };
  g.sigma = [sigma](double) { return sigma; };
  return g;
}

LinearGuide make_bm_guide(double theta, double sigma) {
  Matrix B = Matrix::Zero(1, 1);
  Vector beta(1);
  beta[0] = theta;
  Matrix s(1, 1);
  s(0, 0) = sigma;
  LinearGuide g = make_linear_guide(B, beta, s);
  g.theta = beta;
  return g;
}

LinearGuide make_ou_guide(double lambda, double sigma) {
  Matrix B(1, 1);
  B(0, 0) = -lambda;
  Matrix s(1, 1);
  s(0, 0) = sigma;
  return make_linear_guide(B, Vector::Zero(1), s);
}

GuideFamily bm_drift_guide_family(double sigma) {
  GuideFamily family;
  family.theta_dim = 1;
  family.make = [sigma](const Vector& theta) { return make_bm_guide(theta[0], sigma); };
  return family;
}

}  // namespace bridgesim
