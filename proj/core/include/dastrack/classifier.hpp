#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

/// Two-class Gaussian amplitude model: class l has log-amplitude
/// N(alpha_l, tau2_l), with prior pi_car for the car class.
struct ClassModel {
  double pi_car = 0.5;
  double alpha_car = -8.0;
  double tau2_car = 0.25;
  double alpha_train = -5.5;
  double tau2_train = 0.25;
  bool use_amplitude_in_da = false;  ///< refine association weights with amplitudes

  void validate() const;
};

/// Per-track class belief, kept in log space for numerical stability.
struct ClassPosterior {
  double log_p_car;
  double log_p_train;

  [[nodiscard]] static ClassPosterior from_prior(double pi_car);
  [[nodiscard]] double p_car() const;
  void normalize();
};

/// Fit a ClassModel from a passage log and picks near the log site: picks are
/// matched to the nearest event within +-match_window/2 seconds, and each
/// class's alpha/tau2 are the sample mean/variance of its matched amplitudes
/// (variance floored at 1e-4). pi_car is the fraction of car entries.
/// Throws fit_error when a class has fewer than 2 matched picks.
[[nodiscard]] ClassModel fit_class_model(const EventLog& events, const std::vector<Pick>& picks,
                                         double match_window = 4.0);

/// Mixture likelihood of one amplitude under the track's current class belief:
/// p_car * phi(y; alpha_car, tau2_car) + p_train * phi(y; alpha_train, tau2_train).
[[nodiscard]] double class_mixture_likelihood(double y, const ClassPosterior& posterior,
                                              const ClassModel& model);

/// Bayes update of the class belief from one association step:
/// p_l <- (beta_miss + sum_j beta_j * phi(y_j; alpha_l, tau2_l)) * p_l, renormalized.
/// `beta` is the association row ([0] = undetected), `amplitudes` the gated
/// pick amplitudes aligned with beta[1..].
void update_class_posterior(ClassPosterior& posterior, std::span<const double> amplitudes,
                            std::span<const double> beta, const ClassModel& model);

/// Amplitude-refined association row: each detection term is additionally
/// weighted by the track's class-mixture likelihood of that pick's amplitude.
/// `base_terms` is the unnormalized row ([0] = miss term, [1+k] = detection
/// term k); returns the refined, normalized row.
[[nodiscard]] std::vector<double> amplitude_refined_beta(std::span<const double> base_terms,
                                                         std::span<const double> amplitudes,
                                                         const ClassPosterior& posterior,
                                                         const ClassModel& model);

/// JSON serialization of a fitted model.
void save_class_model(const ClassModel& model, const std::filesystem::path& path);
[[nodiscard]] ClassModel load_class_model(const std::filesystem::path& path);

}  // namespace dastrack
