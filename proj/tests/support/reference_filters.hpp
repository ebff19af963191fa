#pragma once

// Textbook gain-form reference filters used as independent oracles. They
// deliberately avoid the library's code paths: explicit matrix inverses,
// Joseph-form covariance updates, no covariance repair.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "rolf/statespace.hpp"

namespace rolf::testsupport {

struct RefBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline RefBelief ref_predict(const RefBelief& b, const Eigen::MatrixXd& F,
                             const Eigen::MatrixXd& Q) {
  return {F * b.mean, F * b.cov * F.transpose() + Q};
}

// Standard gain-form update with measurement covariance `r_eff`:
//   S = H P H^T + R,  K = P H^T S^{-1},  Joseph-form posterior covariance.
inline RefBelief ref_update(const RefBelief& b, const Eigen::MatrixXd& H,
                            const Eigen::MatrixXd& r_eff, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd s = H * b.cov * H.transpose() + r_eff;
  const Eigen::MatrixXd k = b.cov * H.transpose() * s.inverse();
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(b.mean.size(), b.mean.size());
  RefBelief out;
  out.mean = b.mean + k * (y - H * b.mean);
  out.cov = (i - k * H) * b.cov * (i - k * H).transpose() + k * r_eff * k.transpose();
  return out;
}

inline double ref_imq_weight(const Eigen::VectorXd& residual, const Eigen::MatrixXd& R,
                             double c) {
  const double maha = residual.dot(R.inverse() * residual);
  return 1.0 / std::sqrt(1.0 + maha / (c * c));
}

// Reference KF pass: per-step posterior beliefs.
inline std::vector<RefBelief> ref_kf_run(const LinearGaussianModel& model,
                                         const std::vector<Eigen::VectorXd>& ys) {
  std::vector<RefBelief> out;
  out.reserve(ys.size());
  RefBelief b{model.init.mean, model.init.cov};
  for (const auto& y : ys) {
    b = ref_predict(b, model.F, model.Q);
    b = ref_update(b, model.H, model.R, y);
    out.push_back(b);
  }
  return out;
}

// Reference WoLF pass: downweighting the likelihood by w^2 is identical to
// inflating the measurement covariance to R / w^2, so the oracle runs the
// gain-form update with that effective covariance.
inline std::vector<RefBelief> ref_wolf_run(const LinearGaussianModel& model,
                                           const std::vector<Eigen::VectorXd>& ys, double c) {
  std::vector<RefBelief> out;
  out.reserve(ys.size());
  RefBelief b{model.init.mean, model.init.cov};
  for (const auto& y : ys) {
    b = ref_predict(b, model.F, model.Q);
    const double w = ref_imq_weight(y - model.H * b.mean, model.R, c);
    b = ref_update(b, model.H, model.R / (w * w), y);
    out.push_back(b);
  }
  return out;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace rolf::testsupport
