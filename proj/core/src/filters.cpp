#include "rolf/filters.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rolf {

RobustConfig make_kf_config() {
  RobustConfig cfg;
  cfg.weight.kind = WeightKind::kConstantOne;
  return cfg;
}

RobustConfig make_wolf_config(double c) {
  RobustConfig cfg;
  cfg.weight.kind = WeightKind::kInverseMultiquadric;
  cfg.weight.c = c;
  return cfg;
}

RobustConfig make_rolf_config(double c, double rho) {
  RobustConfig cfg = make_wolf_config(c);
  cfg.stf_enabled = true;
  cfg.rho = rho;
  return cfg;
}

GaussianBelief kf_predict(const GaussianBelief& belief, const Eigen::MatrixXd& F,
                          const Eigen::MatrixXd& Q) {
  const Eigen::Index m = belief.mean.size();
  if (F.rows() != m || F.cols() != m || Q.rows() != m || Q.cols() != m)
    throw std::invalid_argument("kf_predict: dimension mismatch");

  GaussianBelief out;
  out.mean = F * belief.mean;
  out.cov = symmetrize_psd(F * belief.cov * F.transpose() + Q);
  return out;
}

GaussianBelief rolf_predict(const GaussianBelief& belief, const Eigen::MatrixXd& F,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& lambda,
                            const Eigen::MatrixXd& omega, double theta) {
  const Eigen::Index m = belief.mean.size();
  if (F.rows() != m || F.cols() != m || Q.rows() != m || Q.cols() != m ||
      lambda.rows() != m || lambda.cols() != m || omega.rows() != m || omega.cols() != m)
    throw std::invalid_argument("rolf_predict: dimension mismatch");
  if (!(theta >= 1.0))
    throw std::invalid_argument("rolf_predict: theta must be >= 1");

  GaussianBelief out;
  out.mean = F * belief.mean;
  const Eigen::MatrixXd propagated = lambda * (F * belief.cov * F.transpose()) * lambda.transpose();
  out.cov = symmetrize_psd(theta * propagated + omega * Q * omega.transpose());
  return out;
}

UpdateResult kf_update_information(const GaussianBelief& predicted, const Eigen::MatrixXd& H,
                                   const Eigen::MatrixXd& R, const Eigen::VectorXd& y,
                                   double weight) {
  const Eigen::Index m = predicted.mean.size();
  const Eigen::Index d = H.rows();
  if (H.cols() != m || R.rows() != d || R.cols() != d || y.size() != d)
    throw std::invalid_argument("kf_update_information: dimension mismatch");
  if (!(weight > 0.0) || weight > 1.0)
    throw std::invalid_argument("kf_update_information: weight must be in (0,1]");

  Eigen::LLT<Eigen::MatrixXd> llt_prior(predicted.cov);
  if (llt_prior.info() != Eigen::Success)
    throw std::runtime_error("kf_update_information: singular predicted covariance");
  const Eigen::MatrixXd prior_info =
      llt_prior.solve(Eigen::MatrixXd::Identity(m, m));

  Eigen::LLT<Eigen::MatrixXd> llt_r(R);
  if (llt_r.info() != Eigen::Success)
    throw std::invalid_argument("kf_update_information: R not positive definite");
  const Eigen::MatrixXd rinv_h = llt_r.solve(H);  // R^{-1} H

  const double w2 = weight * weight;
  Eigen::MatrixXd post_info = prior_info + w2 * H.transpose() * rinv_h;
  post_info = 0.5 * (post_info + post_info.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt_post(post_info);
  if (llt_post.info() != Eigen::Success)
    throw std::runtime_error("kf_update_information: posterior information matrix not PD");

  UpdateResult result;
  result.posterior.cov = symmetrize_psd(llt_post.solve(Eigen::MatrixXd::Identity(m, m)));
  // K = w^2 Sigma H^T R^{-1}; (R^{-1} H)^T = H^T R^{-1} since R is symmetric.
  result.gain = w2 * result.posterior.cov * rinv_h.transpose();
  result.posterior.mean = predicted.mean + result.gain * (y - H * predicted.mean);
  return result;
}

double imq_weight(const Eigen::VectorXd& residual, const Eigen::MatrixXd& r_cov, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("imq_weight: c must be positive");
  return 1.0 / std::sqrt(1.0 + mahalanobis_sq(residual, r_cov) / (c * c));
}

double evaluate_weight(const WeightFnConfig& cfg, const Eigen::VectorXd& residual,
                       const Eigen::MatrixXd& r_cov) {
  switch (cfg.kind) {
    case WeightKind::kConstantOne:
      return 1.0;
    case WeightKind::kInverseMultiquadric:
      return imq_weight(residual, r_cov, cfg.c);
  }
  throw std::logic_error("evaluate_weight: unknown weight kind");
}

double stf_theta_from_v(const Eigen::MatrixXd& v, const Eigen::MatrixXd& prev_posterior_cov,
                        const Eigen::MatrixXd& F, const Eigen::MatrixXd& H,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const double numerator = (v - R - H * Q * H.transpose()).trace();
  const double denominator =
      (H * F * prev_posterior_cov * F.transpose() * H.transpose()).trace();
  if (!(denominator > 0.0))
    throw std::domain_error(
        "stf fading factor: tr(H F Sigma F^T H^T) is not positive (degenerate model)");
  return std::max(1.0, numerator / denominator);
}

double stf_fading_factor(const Eigen::VectorXd& innovation,
                         const Eigen::MatrixXd& prev_posterior_cov, const Eigen::MatrixXd& F,
                         const Eigen::MatrixXd& H, const Eigen::MatrixXd& Q,
                         const Eigen::MatrixXd& R, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("stf_fading_factor: rho must be in (0,1)");
  const Eigen::MatrixXd v = rho * H * prev_posterior_cov * H.transpose() + R +
                            (1.0 - rho) * innovation * innovation.transpose();
  return stf_theta_from_v(v, prev_posterior_cov, F, H, Q, R);
}

std::vector<StepTrace> filter_run(const LinearGaussianModel& model,
                                  const std::vector<Eigen::VectorXd>& measurements,
                                  const RobustConfig& config) {
  const ValidationReport report = validate_model(model);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "filter_run: invalid model:";
    for (const auto& v : report.violations) msg << " [" << v << "]";
    throw std::invalid_argument(msg.str());
  }
  if (config.stf_enabled && !(config.rho > 0.0 && config.rho < 1.0))
    throw std::invalid_argument("filter_run: rho must be in (0,1) when stf is enabled");

  const Eigen::Index m = model.state_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);

  std::vector<StepTrace> traces;
  traces.reserve(measurements.size());

  GaussianBelief belief = model.init;
  Eigen::MatrixXd v_state;  // recursive innovation covariance, when used

  for (std::size_t t = 0; t < measurements.size(); ++t) {
    try {
      const SystemMatrices sys = model.at(static_cast<int>(t));
      const Eigen::MatrixXd lambda =
          config.lambda_provider ? config.lambda_provider(static_cast<int>(t)) : identity;
      const Eigen::MatrixXd omega =
          config.omega_provider ? config.omega_provider(static_cast<int>(t)) : identity;
      if (lambda.rows() != m || lambda.cols() != m || omega.rows() != m || omega.cols() != m)
        throw std::invalid_argument("Lambda/Omega provider returned wrong dimensions");

      // The predicted mean does not depend on theta, so the innovation that
      // feeds the fading factor is the same one used in the update.
      const Eigen::VectorXd innovation = measurements[t] - sys.H * (sys.F * belief.mean);

      double theta = 1.0;
      if (config.stf_enabled) {
        if (config.stf_recursive) {
          const Eigen::MatrixXd outer = innovation * innovation.transpose();
          v_state = (v_state.size() == 0)
                        ? outer
                        : Eigen::MatrixXd((config.rho * v_state + outer) / (1.0 + config.rho));
          theta = stf_theta_from_v(v_state, belief.cov, sys.F, sys.H, sys.Q, sys.R);
        } else {
          theta = stf_fading_factor(innovation, belief.cov, sys.F, sys.H, sys.Q, sys.R,
                                    config.rho);
        }
      }

      StepTrace trace;
      trace.predicted = rolf_predict(belief, sys.F, sys.Q, lambda, omega, theta);
      trace.weight = evaluate_weight(config.weight, innovation, sys.R);
      trace.fading_factor = theta;
      trace.innovation = innovation;

      UpdateResult update =
          kf_update_information(trace.predicted, sys.H, sys.R, measurements[t], trace.weight);
      trace.updated = std::move(update.posterior);

      belief = trace.updated;
      traces.push_back(std::move(trace));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "filter_run: step " << t << ": " << e.what();
      throw std::runtime_error(msg.str());
    }
  }

  return traces;
}

GaussianBelief bayes_conditioning_oracle(const GaussianBelief& prior, const Eigen::MatrixXd& H,
                                         const Eigen::MatrixXd& R, const Eigen::VectorXd& y) {
  const Eigen::Index m = prior.mean.size();
  const Eigen::Index d = H.rows();
  if (H.cols() != m || R.rows() != d || R.cols() != d || y.size() != d)
    throw std::invalid_argument("bayes_conditioning_oracle: dimension mismatch");

  // Joint over (x, y):
  //   [ Sigma        Sigma H^T        ]
  //   [ H Sigma      H Sigma H^T + R  ]
  Eigen::MatrixXd joint(m + d, m + d);
  joint.topLeftCorner(m, m) = prior.cov;
  joint.topRightCorner(m, d) = prior.cov * H.transpose();
  joint.bottomLeftCorner(d, m) = H * prior.cov;
  joint.bottomRightCorner(d, d) = H * prior.cov * H.transpose() + R;

  const Eigen::MatrixXd cross = joint.topRightCorner(m, d);
  const Eigen::MatrixXd marginal_y = joint.bottomRightCorner(d, d);

  Eigen::LLT<Eigen::MatrixXd> llt(marginal_y);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("bayes_conditioning_oracle: singular joint covariance");

  // Condition the joint Gaussian on y.
  const Eigen::VectorXd predicted_y = H * prior.mean;
  const Eigen::MatrixXd gain = llt.solve(cross.transpose()).transpose();  // Sigma H^T S^{-1}

  GaussianBelief posterior;
  posterior.mean = prior.mean + gain * (y - predicted_y);
  posterior.cov = symmetrize_psd(prior.cov - gain * cross.transpose());
  return posterior;
}

}  // namespace rolf
