#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include "rolf/statespace.hpp"

// Deterministic generation of the benchmark scenario: a 2D constant-velocity
// target whose velocity process noise follows independent GARCH(1,1) chains
// per axis, observed through position measurements contaminated by
// Gaussian-mixture outliers. Everything is a pure function of the config,
// seed included.

namespace rolf {

// GARCH(1,1) conditional-variance recursion
//   sigma^2_t = omega0 + alpha * eps^2_{t-1} + beta * sigma^2_{t-1}
// covariance-stationary when alpha + beta < 1, with stationary variance
// omega0 / (1 - alpha - beta).
struct GarchParams {
  double omega0 = 0.1;     // baseline variance, squared velocity units
  double alpha = 0.3;      // shock coefficient, >= 0
  double beta = 0.6;       // persistence, >= 0
  double sigma0_sq = 1.0;  // variance of the first step
};

double garch_step(double prev_sigma_sq, double prev_eps, const GarchParams& params);

// Stationary variance omega0 / (1 - alpha - beta); requires alpha + beta < 1.
double garch_stationary_variance(const GarchParams& params);

// Measurement noise: N(0, R) with probability 1 - p_outlier, otherwise
// N(0, scale^2 R).
struct MixtureNoiseParams {
  double p_outlier = 0.05;
  double scale = 10.0;  // outlier standard-deviation multiplier, >= 1
};

// Optional additive jump applied to the true state after the transition at
// step t. Ships unused: the default scenario injects no impulses.
struct StateImpulse {
  int t = 0;
  Eigen::Vector4d delta = Eigen::Vector4d::Zero();
};

struct ScenarioConfig {
  double dt = 1.0;              // seconds
  int horizon = 1000;           // T >= 1
  double pos_noise_var = 0.01;  // process-noise variance on position components
  GarchParams garch;
  MixtureNoiseParams mixture;
  Eigen::Matrix2d meas_noise = Eigen::Matrix2d::Identity();  // R, 2x2 PD
  std::uint64_t seed = 0;
  std::vector<StateImpulse> impulses;
};

// Empty on success, otherwise one message per violated invariant.
std::vector<std::string> validate_scenario_config(const ScenarioConfig& config);

struct ScenarioData {
  Trajectory trajectory;  // states (x, vx, y, vy) and 2D position measurements
  // Per-step true process-noise covariance Q_t, stored as its diagonal
  // (pos_noise_var, sigma^2_vx,t, pos_noise_var, sigma^2_vy,t). Diagnostics
  // only; the filters run on the constant nominal Q.
  std::vector<Eigen::Vector4d> process_noise_diag;
  std::vector<std::uint8_t> outlier_flags;  // 1 where the outlier branch fired
};

// Constant-velocity discretization in (x, vx, y, vy) ordering: F is block
// diagonal with [[1, dt], [0, 1]] per axis, H selects the two positions.
std::pair<Eigen::Matrix4d, Eigen::Matrix<double, 2, 4>> build_cv_model(double dt);

// Simulates the scenario. States start from the origin and evolve as
// x_t = F x_{t-1} + u_t with u_t ~ N(0, Q_t); measurements are H x_t plus
// mixture noise. Output is bit-identical for equal configs.
ScenarioData generate_scenario(const ScenarioConfig& config);

// Constant nominal process noise handed to the filters: GARCH variance is
// replaced by its stationary value, so the true time-varying Q_t is the
// misspecification the robust filters face.
Eigen::Matrix4d nominal_process_noise(const ScenarioConfig& config);

// Scenario dump: header plus one row per step, columns
// t,x,vx,y,vy,meas_x,meas_y,outlier_flag,sigma_vx_sq,sigma_vy_sq.
void write_scenario_csv(std::ostream& out, const ScenarioData& data);

// Splittable-counter seed derivation: the splitmix64 finalizer applied to
// base_seed + (replica_index + 1) * golden gamma. Pure, and injective in
// the index for a fixed base seed.
std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t replica_index);

// Reproducible standard-normal source: mt19937_64 with a fixed Box-Muller
// transform (two engine draws per variate, cosine branch only), so streams
// do not depend on the standard library's normal_distribution.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1): (x >> 11) * 2^-53.
  double uniform01();

  // Standard normal via Box-Muller: sqrt(-2 ln u1) * cos(2 pi u2) with
  // u1 in (0, 1].
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace rolf
