#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "rolf/statespace.hpp"

// Filter recursions on linear-Gaussian models.
//
// Prediction (robust form, with user matrices Lambda/Omega and fading
// factor theta >= 1):
//   x_{t|t-1}     = F x_{t-1|t-1}
//   Sigma_{t|t-1} = theta * Lambda F Sigma F^T Lambda^T + Omega Q Omega^T
//
// Update (information form, weighted):
//   Sigma_t^{-1} = Sigma_{t|t-1}^{-1} + w^2 H^T R^{-1} H
//   K_t          = w^2 Sigma_t H^T R^{-1}
//   x_{t|t}      = x_{t|t-1} + K_t (y_t - H x_{t|t-1})
//
// Lambda = Omega = I, theta = 1, w = 1 is the standard Kalman filter;
// keeping the inverse-multiquadric weight but no covariance scaling is
// WoLF; enabling the strong-tracking fading factor on top is RoLF.

namespace rolf {

// Default soft threshold of the inverse-multiquadric weight, in Mahalanobis
// units. Chosen so a residual at the 99th percentile of chi-square with
// d = 2 degrees of freedom (9.210340371976182) receives weight 0.7.
inline constexpr double kDefaultImqC = 2.97475218353854;

// Default smoothing constant of the strong-tracking fading factor.
inline constexpr double kDefaultStfRho = 0.95;

enum class WeightKind {
  kConstantOne,         // w == 1: the exact-likelihood update
  kInverseMultiquadric  // w = (1 + r^2/c^2)^{-1/2} of the Mahalanobis residual norm
};

struct WeightFnConfig {
  WeightKind kind = WeightKind::kConstantOne;
  double c = kDefaultImqC;  // soft threshold, > 0; only used by kInverseMultiquadric
};

// Per-step m x m matrix provider (Lambda_t / Omega_t). A null provider
// means identity at every step.
using MatrixProvider = std::function<Eigen::MatrixXd(int t)>;

// Full configuration of one filter run.
struct RobustConfig {
  MatrixProvider lambda_provider;  // scales the propagated covariance term
  MatrixProvider omega_provider;   // scales the process-noise term
  bool stf_enabled = false;
  // When set, the innovation covariance V_t feeding the fading factor is
  // the classic recursive estimate V_t = (rho V_{t-1} + e_t e_t^T)/(1 + rho)
  // instead of the default one-shot expression.
  bool stf_recursive = false;
  double rho = kDefaultStfRho;  // in (0,1); only used when stf_enabled
  WeightFnConfig weight;
};

// Standard Kalman filter: no covariance scaling, constant-one weight.
RobustConfig make_kf_config();

// WoLF: inverse-multiquadric measurement weight only.
RobustConfig make_wolf_config(double c = kDefaultImqC);

// RoLF as shipped: IMQ weight plus the strong-tracking fading factor.
RobustConfig make_rolf_config(double c = kDefaultImqC, double rho = kDefaultStfRho);

// Record of one predict/update cycle.
struct StepTrace {
  GaussianBelief predicted;
  GaussianBelief updated;
  double weight = 1.0;         // in (0,1]
  double fading_factor = 1.0;  // >= 1
  Eigen::VectorXd innovation;  // y_t - H x_{t|t-1}
};

// x' = F x, Sigma' = symmetrize_psd(F Sigma F^T + Q).
GaussianBelief kf_predict(const GaussianBelief& belief, const Eigen::MatrixXd& F,
                          const Eigen::MatrixXd& Q);

// Robust prediction: Sigma' = symmetrize_psd(theta * Lambda F Sigma F^T Lambda^T
// + Omega Q Omega^T), theta >= 1. Identity Lambda/Omega with theta = 1
// reproduces kf_predict bit for bit.
GaussianBelief rolf_predict(const GaussianBelief& belief, const Eigen::MatrixXd& F,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& lambda,
                            const Eigen::MatrixXd& omega, double theta);

struct UpdateResult {
  GaussianBelief posterior;
  Eigen::MatrixXd gain;  // K, m x d
};

// Weighted information-form update (see header comment). weight must lie
// in (0,1]; weight = 1 is the standard KF update. Throws on a singular
// predicted covariance or dimension mismatch.
UpdateResult kf_update_information(const GaussianBelief& predicted, const Eigen::MatrixXd& H,
                                   const Eigen::MatrixXd& R, const Eigen::VectorXd& y,
                                   double weight);

// Inverse-multiquadric weight (1 + mahalanobis_sq(residual, R)/c^2)^{-1/2}.
// Strictly decreasing in the Mahalanobis norm, equals 1 iff residual = 0.
double imq_weight(const Eigen::VectorXd& residual, const Eigen::MatrixXd& r_cov, double c);

// Evaluates the configured weighting function on a residual.
double evaluate_weight(const WeightFnConfig& cfg, const Eigen::VectorXd& residual,
                       const Eigen::MatrixXd& r_cov);

// Fading factor given an already-formed innovation covariance V:
//   theta = max(1, tr(V - R - H Q H^T) / tr(H F Sigma F^T H^T))
// Throws std::domain_error when the denominator trace is not positive
// (H F Sigma F^T H^T = 0 means the model is degenerate; that is reported,
// never clamped).
double stf_theta_from_v(const Eigen::MatrixXd& v, const Eigen::MatrixXd& prev_posterior_cov,
                        const Eigen::MatrixXd& F, const Eigen::MatrixXd& H,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// Strong-tracking fading factor with the one-shot innovation covariance
//   V_t = rho H Sigma H^T + R + (1 - rho) e e^T
// where e is the innovation (predicted minus real measurement) and Sigma
// the previous posterior covariance. Always >= 1.
double stf_fading_factor(const Eigen::VectorXd& innovation,
                         const Eigen::MatrixXd& prev_posterior_cov, const Eigen::MatrixXd& F,
                         const Eigen::MatrixXd& H, const Eigen::MatrixXd& Q,
                         const Eigen::MatrixXd& R, double rho);

// Runs the full recursion over a measurement sequence and records one
// StepTrace per measurement. An empty sequence yields an empty trace (the
// initial belief stands as final). Inner errors are rethrown with the step
// index attached.
std::vector<StepTrace> filter_run(const LinearGaussianModel& model,
                                  const std::vector<Eigen::VectorXd>& measurements,
                                  const RobustConfig& config);

// Brute-force Gaussian conditioning used to cross-check the information
// form: builds the joint over (x, y) with cross-covariance Sigma H^T and
// conditions on y exactly. H = 0 returns the prior unchanged.
GaussianBelief bayes_conditioning_oracle(const GaussianBelief& prior, const Eigen::MatrixXd& H,
                                         const Eigen::MatrixXd& R, const Eigen::VectorXd& y);

}  // namespace rolf
