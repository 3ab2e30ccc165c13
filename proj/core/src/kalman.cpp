#include "dastrack/kalman.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace dastrack {

void MotionModel::validate() const {
  if (!(dt > 0)) throw config_error("dt must be positive");
  if (!(sigma_q2 >= 0)) throw config_error("sigma_q2 must be non-negative");
  if (!(sigma_r2 > 0)) throw config_error("sigma_r2 must be positive");
}

GaussianState kf_predict(const GaussianState& state, const MotionModel& model) {
  const Eigen::Matrix2d g = model.transition();
  GaussianState out;
  out.mean = g * state.mean;
  out.cov = g * state.cov * g.transpose() + model.process_noise();
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  return out;
}

double innovation_variance(const GaussianState& predicted, const MotionModel& model) {
  const Eigen::RowVector2d h = model.observation();
  return (h * predicted.cov * h.transpose())(0) + model.sigma_r2;
}

GaussianState kf_update(const GaussianState& predicted, double z, const MotionModel& model) {
  const Eigen::RowVector2d h = model.observation();
  const double s = innovation_variance(predicted, model);
  const Eigen::Vector2d k = predicted.cov * h.transpose() / s;
  const double innovation = z - (h * predicted.mean)(0);
  GaussianState out;
  out.mean = predicted.mean + k * innovation;
  out.cov = predicted.cov - k * h * predicted.cov;
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  return out;
}

namespace {

/// Wichura's algorithm AS 241 (PPND16): inverse standard normal CDF.
double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0 ? -value : value;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw domain_error("normal_quantile: p must lie in [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return ppnd16(p);
}

double chi2_quantile_1dof(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw domain_error("chi2_quantile_1dof: p must lie in [0, 1]");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  const double z = normal_quantile((1.0 + p) / 2.0);
  return z * z;
}

double gaussian_pdf(double x, double mu, double var) {
  if (!(var > 0)) throw domain_error("gaussian_pdf: variance must be positive");
  const double d = x - mu;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace dastrack
