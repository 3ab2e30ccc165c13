#pragma once

#include <Eigen/Dense>

#include "dastrack/types.hpp"

namespace dastrack {

/// Constant-velocity motion model over state (position, velocity) with scalar
/// position measurements.
struct MotionModel {
  double dt = 0.2;        ///< s between steps
  double sigma_q2 = 1.0;  ///< process-noise intensity
  double sigma_r2 = 15.0;  ///< measurement-noise variance (m^2)

  [[nodiscard]] Eigen::Matrix2d transition() const {
    Eigen::Matrix2d g;
    g << 1.0, dt, 0.0, 1.0;
    return g;
  }

  /// Integrated white-noise-acceleration covariance.
  [[nodiscard]] Eigen::Matrix2d process_noise() const {
    Eigen::Matrix2d q;
    q << dt * dt * dt / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
    return sigma_q2 * q;
  }

  [[nodiscard]] Eigen::RowVector2d observation() const {
    return Eigen::RowVector2d{1.0, 0.0};
  }

  void validate() const;
};

/// Gaussian state estimate.
struct GaussianState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

/// Time update: mean -> G mean, cov -> G cov G^T + Q.
[[nodiscard]] GaussianState kf_predict(const GaussianState& state, const MotionModel& model);

/// Innovation variance S = H cov H^T + sigma_r2 of a predicted state.
[[nodiscard]] double innovation_variance(const GaussianState& predicted, const MotionModel& model);

/// Measurement update with a single position observation z.
[[nodiscard]] GaussianState kf_update(const GaussianState& predicted, double z,
                                      const MotionModel& model);

/// Standard normal quantile (Wichura's AS 241, ~1e-15 accurate).
/// p in (0,1); returns -inf/+inf at the endpoints.
[[nodiscard]] double normal_quantile(double p);

/// Quantile of the chi-square distribution with one degree of freedom.
[[nodiscard]] double chi2_quantile_1dof(double p);

/// Gaussian density with mean mu and variance var.
[[nodiscard]] double gaussian_pdf(double x, double mu, double var);

}  // namespace dastrack
