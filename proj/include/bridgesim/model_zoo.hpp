#pragma once

#include "bridgesim/linear_guide.hpp"
#include "bridgesim/tuner.hpp"
#include "bridgesim/types.hpp"

namespace bridgesim {

/// 1-d Brownian motion with drift: dX = beta1 dt + sigma dW.
DiffusionModel make_bm_drift_model(double beta1, double sigma);

/// 1-d Ornstein-Uhlenbeck: dX = -lambda X dt + sigma dW.
DiffusionModel make_ou_model(double lambda, double sigma);

/// The sine well model: dX = (beta1 - beta2 sin(8 X)) dt + sigma dW.
DiffusionModel make_sine_model(double beta1, double beta2, double sigma);

/// 1-d polynomial drift: b(x) = sum_i coeffs[i] x^i, constant sigma.
DiffusionModel make_polynomial_model(const Vector& coeffs, double sigma);

/// Scaled Brownian motion with drift theta as a guide (B=0, beta=theta,
/// constant sigma).
LinearGuide make_bm_guide(double theta, double sigma);

/// OU guide: B = -lambda, beta = 0, constant sigma.
LinearGuide make_ou_guide(double lambda, double sigma);

/// General constant-coefficient linear guide.
LinearGuide make_linear_guide(const Matrix& B, const Vector& beta, const Matrix& sigma);

/// theta |-> Brownian guide with drift theta and fixed sigma; the family
/// tuned in the drift-matching experiments.
GuideFamily bm_drift_guide_family(double sigma);

}  // namespace bridgesim
