#include "rolf/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "format_util.hpp"

namespace rolf {

using detail::format_double;

double garch_step(double prev_sigma_sq, double prev_eps, const GarchParams& params) {
  return params.omega0 + params.alpha * prev_eps * prev_eps + params.beta * prev_sigma_sq;
}

double garch_stationary_variance(const GarchParams& params) {
  if (!(params.alpha + params.beta < 1.0))
    throw std::invalid_argument("garch_stationary_variance: requires alpha + beta < 1");
  return params.omega0 / (1.0 - params.alpha - params.beta);
}

std::vector<std::string> validate_scenario_config(const ScenarioConfig& config) {
  std::vector<std::string> problems;
  if (!(config.dt > 0.0)) problems.push_back("dt must be positive");
  if (config.horizon < 1) problems.push_back("horizon must be >= 1");
  if (!(config.pos_noise_var > 0.0)) problems.push_back("pos_noise_var must be positive");
  if (!(config.garch.omega0 > 0.0)) problems.push_back("garch.omega0 must be positive");
  if (config.garch.alpha < 0.0) problems.push_back("garch.alpha must be >= 0");
  if (config.garch.beta < 0.0) problems.push_back("garch.beta must be >= 0");
  if (!(config.garch.alpha + config.garch.beta < 1.0))
    problems.push_back("garch.alpha + garch.beta must be < 1");
  if (!(config.garch.sigma0_sq > 0.0)) problems.push_back("garch.sigma0_sq must be positive");
  if (config.mixture.p_outlier < 0.0 || config.mixture.p_outlier > 1.0)
    problems.push_back("mixture.p_outlier must be in [0,1]");
  if (!(config.mixture.scale >= 1.0)) problems.push_back("mixture.scale must be >= 1");
  Eigen::LLT<Eigen::Matrix2d> llt(config.meas_noise);
  if ((config.meas_noise - config.meas_noise.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol ||
      llt.info() != Eigen::Success)
    problems.push_back("meas_noise must be symmetric positive definite");
  for (const auto& imp : config.impulses) {
    if (imp.t < 0 || imp.t >= config.horizon) {
      problems.push_back("impulse step out of range");
      break;
    }
  }
  return problems;
}

std::pair<Eigen::Matrix4d, Eigen::Matrix<double, 2, 4>> build_cv_model(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("build_cv_model: dt must be positive");
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 1) = dt;
  F(2, 3) = dt;
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 2) = 1.0;
  return {F, H};
}

Eigen::Matrix4d nominal_process_noise(const ScenarioConfig& config) {
  const double vel_var = garch_stationary_variance(config.garch);
  Eigen::Vector4d diag(config.pos_noise_var, vel_var, config.pos_noise_var, vel_var);
  return diag.asDiagonal();
}

double NormalSampler::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalSampler::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd NormalSampler::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

ScenarioData generate_scenario(const ScenarioConfig& config) {
  const auto problems = validate_scenario_config(config);
  if (!problems.empty()) {
    std::string msg = "generate_scenario: invalid config:";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw std::invalid_argument(msg);
  }

  const auto [F, H] = build_cv_model(config.dt);
  const int T = config.horizon;

  NormalSampler rng(config.seed);
  const Eigen::Matrix2d meas_chol = Eigen::LLT<Eigen::Matrix2d>(config.meas_noise).matrixL();

  ScenarioData data;
  data.trajectory.states.reserve(T);
  data.trajectory.measurements.reserve(T);
  data.process_noise_diag.reserve(T);
  data.outlier_flags.reserve(T);

  // One GARCH chain per velocity axis; both start at sigma0_sq, and the
  // shock feeding the recursion is the realized velocity process noise.
  double sigma_vx_sq = config.garch.sigma0_sq;
  double sigma_vy_sq = config.garch.sigma0_sq;
  double eps_vx = 0.0;
  double eps_vy = 0.0;

  Eigen::Vector4d state = Eigen::Vector4d::Zero();

  // Fixed draw order per step: 4 process normals (x, vx, y, vy), one
  // uniform for the mixture branch, 2 measurement normals.
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      sigma_vx_sq = garch_step(sigma_vx_sq, eps_vx, config.garch);
      sigma_vy_sq = garch_step(sigma_vy_sq, eps_vy, config.garch);
    }
    const Eigen::Vector4d q_diag(config.pos_noise_var, sigma_vx_sq, config.pos_noise_var,
                                 sigma_vy_sq);

    // Q_t is diagonal, so its Cholesky factor is the elementwise sqrt.
    Eigen::Vector4d shock;
    for (int i = 0; i < 4; ++i) shock(i) = std::sqrt(q_diag(i)) * rng.normal();
    eps_vx = shock(1);
    eps_vy = shock(3);

    state = F * state + shock;
    for (const auto& imp : config.impulses)
      if (imp.t == t) state += imp.delta;

    const bool outlier = rng.uniform01() < config.mixture.p_outlier;
    Eigen::Vector2d noise = meas_chol * Eigen::Vector2d(rng.normal(), rng.normal());
    if (outlier) noise *= config.mixture.scale;  // chol(scale^2 R) = scale chol(R)
    const Eigen::Vector2d meas = H * state + noise;

    data.trajectory.states.push_back(state);
    data.trajectory.measurements.push_back(meas);
    data.process_noise_diag.push_back(q_diag);
    data.outlier_flags.push_back(outlier ? 1 : 0);
  }

  return data;
}

void write_scenario_csv(std::ostream& out, const ScenarioData& data) {
  out << "t,x,vx,y,vy,meas_x,meas_y,outlier_flag,sigma_vx_sq,sigma_vy_sq\n";
  for (std::size_t t = 0; t < data.trajectory.length(); ++t) {
    const auto& s = data.trajectory.states[t];
    const auto& m = data.trajectory.measurements[t];
    const auto& q = data.process_noise_diag[t];
    out << t << ',' << format_double(s(0)) << ',' << format_double(s(1)) << ','
        << format_double(s(2)) << ',' << format_double(s(3)) << ',' << format_double(m(0))
        << ',' << format_double(m(1)) << ',' << int(data.outlier_flags[t]) << ','
        << format_double(q(1)) << ',' << format_double(q(3)) << '\n';
  }
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t replica_index) {
  std::uint64_t z = base_seed + (replica_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rolf
