#include "rolf/statespace.hpp"

#include <stdexcept>

namespace rolf {

namespace {

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

bool is_valid_covariance(const Eigen::MatrixXd& cov, double sym_tol, double psd_rel_tol) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) return false;
  if (!cov.allFinite()) return false;
  if (!is_symmetric(cov, sym_tol)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()),
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return false;
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo >= -psd_rel_tol * std::max(hi, 0.0);
}

bool is_valid_belief(const GaussianBelief& belief, double sym_tol, double psd_rel_tol) {
  if (belief.mean.size() == 0 || belief.cov.rows() != belief.mean.size()) return false;
  if (!belief.mean.allFinite()) return false;
  return is_valid_covariance(belief.cov, sym_tol, psd_rel_tol);
}

ValidationReport validate_model(const LinearGaussianModel& model) {
  ValidationReport report;
  auto add = [&report](const std::string& msg) { report.violations.push_back(msg); };

  const Eigen::Index m = model.F.rows();
  const Eigen::Index d = model.H.rows();

  if (m == 0) {
    add("F dimension mismatch: empty transition matrix");
    return report;
  }
  if (model.F.cols() != m) add("F dimension mismatch");
  if (d == 0 || model.H.cols() != m) add("H dimension mismatch");
  if (model.Q.rows() != m || model.Q.cols() != m) add("Q dimension mismatch");
  if (model.R.rows() != d || model.R.cols() != d) add("R dimension mismatch");
  if (model.init.mean.size() != m) add("init mean dimension mismatch");
  if (model.init.cov.rows() != m || model.init.cov.cols() != m)
    add("init covariance dimension mismatch");

  if (!report.ok()) return report;  // shape errors make the value checks meaningless

  if (!model.F.allFinite()) add("F not finite");
  if (!model.H.allFinite()) add("H not finite");

  if (!model.Q.allFinite() || !is_symmetric(model.Q, kSymmetryTol)) {
    add("Q not symmetric");
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.Q, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    if (eig.eigenvalues().minCoeff() < -kPsdRelTol * std::max(hi, 0.0))
      add("Q not positive semidefinite");
  }

  if (!model.R.allFinite() || !is_symmetric(model.R, kSymmetryTol)) {
    add("R not symmetric");
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(model.R);
    if (llt.info() != Eigen::Success) add("R not positive definite");
  }

  if (!is_valid_belief(model.init)) add("init covariance not symmetric PSD");

  return report;
}

Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("symmetrize_psd: input must be square");

  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());

  // Cholesky probe: a PD matrix has nothing to clamp.
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return sym;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("symmetrize_psd: eigendecomposition failed");
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
  sym = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (sym + sym.transpose());
}

double mahalanobis_sq(const Eigen::VectorXd& residual, const Eigen::MatrixXd& r_cov) {
  if (r_cov.rows() != r_cov.cols() || r_cov.rows() != residual.size())
    throw std::invalid_argument("mahalanobis_sq: dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt(r_cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("mahalanobis_sq: R not positive definite");

  // r^T R^{-1} r = ||L^{-1} r||^2 with R = L L^T.
  const Eigen::VectorXd z = llt.matrixL().solve(residual);
  return z.squaredNorm();
}

}  // namespace rolf
