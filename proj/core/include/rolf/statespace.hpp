#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

// Core state-space types shared by every filter:
//   x_t = F_t x_{t-1} + u_t,   u_t ~ N(0, Q_t)
//   y_t = H_t x_t     + v_t,   v_t ~ N(0, R_t)
// plus the numerical-hygiene helpers (covariance repair, Cholesky-based
// Mahalanobis distance) the filter recursions rely on.

namespace rolf {

// Tolerances used when checking belief covariances:
// symmetry within max|C - C^T| <= kSymmetryTol, and smallest eigenvalue
// >= -kPsdRelTol * largest eigenvalue.
inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kPsdRelTol = 1e-9;

// Gaussian state belief: mean x and covariance Sigma.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

// True iff `cov` is square, symmetric within sym_tol, and its smallest
// eigenvalue is >= -psd_rel_tol * largest eigenvalue.
bool is_valid_covariance(const Eigen::MatrixXd& cov, double sym_tol = kSymmetryTol,
                         double psd_rel_tol = kPsdRelTol);

// True iff the belief dimensions line up and the covariance is valid.
bool is_valid_belief(const GaussianBelief& belief, double sym_tol = kSymmetryTol,
                     double psd_rel_tol = kPsdRelTol);

// One step's worth of system matrices.
struct SystemMatrices {
  Eigen::MatrixXd F;  // m x m transition
  Eigen::MatrixXd H;  // d x m observation
  Eigen::MatrixXd Q;  // m x m process-noise covariance (PSD)
  Eigen::MatrixXd R;  // d x d measurement-noise covariance (PD)
};

// Per-step provider for time-varying systems, indexed by step t >= 0.
using SystemProvider = std::function<SystemMatrices(int t)>;

// Linear-Gaussian model. The constant F/H/Q/R members always define the
// nominal system (and its dimensions); when `provider` is set it supplies
// the matrices actually used at each step, with the constants acting as
// the t-independent template. Constant models simply leave it unset.
struct LinearGaussianModel {
  Eigen::MatrixXd F;
  Eigen::MatrixXd H;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  GaussianBelief init;
  SystemProvider provider;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index meas_dim() const { return H.rows(); }

  SystemMatrices at(int t) const {
    if (provider) return provider(t);
    return SystemMatrices{F, H, Q, R};
  }
};

// States and measurements of one simulated run; both sequences have equal
// length T (possibly zero).
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> measurements;

  std::size_t length() const { return states.size(); }
};

// Outcome of validate_model: a list of named violations, empty on success.
struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Checks the LinearGaussianModel invariants (dimension consistency, Q
// symmetric PSD, R symmetric PD via Cholesky, init belief valid) and
// reports every violation found. Violations are data, not faults: this
// never throws.
ValidationReport validate_model(const LinearGaussianModel& model);

// Returns (M + M^T)/2 with negative eigenvalues clamped to zero. The PD
// fast path is a Cholesky probe; the eigenvalue clamp only runs when the
// symmetrized matrix fails it. Throws std::invalid_argument on non-square
// input.
Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixXd& m);

// Squared Mahalanobis norm r^T R^{-1} r computed through a triangular
// solve against the Cholesky factor of R; R is never inverted explicitly.
// Throws std::invalid_argument if R is not positive definite or the
// dimensions disagree.
double mahalanobis_sq(const Eigen::VectorXd& residual, const Eigen::MatrixXd& r_cov);

}  // namespace rolf
