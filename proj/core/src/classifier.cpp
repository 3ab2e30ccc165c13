#include "dastrack/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>
#include <utility>

#include <nlohmann/json.hpp>

#include "dastrack/kalman.hpp"

namespace dastrack {

namespace {
constexpr double k_variance_floor = 1e-4;
}

void ClassModel::validate() const {
  if (!(pi_car > 0) || !(pi_car < 1)) throw config_error("pi_car must lie in (0, 1)");
  if (!(tau2_car > 0) || !(tau2_train > 0)) throw config_error("class variances must be positive");
  if (!std::isfinite(alpha_car) || !std::isfinite(alpha_train)) {
    throw config_error("class means must be finite");
  }
}

ClassPosterior ClassPosterior::from_prior(double pi_car) {
  if (!(pi_car > 0) || !(pi_car < 1)) throw config_error("pi_car must lie in (0, 1)");
  return {std::log(pi_car), std::log(1.0 - pi_car)};
}

double ClassPosterior::p_car() const {
  return 1.0 / (1.0 + std::exp(log_p_train - log_p_car));
}

void ClassPosterior::normalize() {
  const double m = std::max(log_p_car, log_p_train);
  const double lse = m + std::log(std::exp(log_p_car - m) + std::exp(log_p_train - m));
  log_p_car -= lse;
  log_p_train -= lse;
}

ClassModel fit_class_model(const EventLog& events, const std::vector<Pick>& picks,
                           double match_window) {
  if (!(match_window > 0)) throw config_error("match_window must be positive");
  if (events.empty()) throw fit_error("cannot fit a class model from an empty event log");

  std::size_t car_entries = 0;
  for (const EventEntry& e : events) car_entries += e.cls == ObjectClass::car ? 1 : 0;
  if (car_entries == 0 || car_entries == events.size()) {
    throw fit_error("event log must contain both classes");
  }

  std::vector<double> amp_car;
  std::vector<double> amp_train;
  for (const Pick& p : picks) {
    double best_gap = match_window / 2.0;
    const EventEntry* best = nullptr;
    for (const EventEntry& e : events) {
      const double gap = std::abs(p.time - e.time);
      if (gap <= best_gap) {
        best_gap = gap;
        best = &e;
      }
    }
    if (best == nullptr) continue;
    (best->cls == ObjectClass::car ? amp_car : amp_train).push_back(p.log_amplitude);
  }

  auto moments = [](const std::vector<double>& xs, const char* label) {
    if (xs.size() < 2) {
      throw fit_error(std::string("class '") + label + "' has fewer than 2 matched picks");
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return std::pair{mean, std::max(var, k_variance_floor)};
  };

  ClassModel model;
  model.pi_car = static_cast<double>(car_entries) / static_cast<double>(events.size());
  std::tie(model.alpha_car, model.tau2_car) = moments(amp_car, "car");
  std::tie(model.alpha_train, model.tau2_train) = moments(amp_train, "train");
  model.validate();
  return model;
}

double class_mixture_likelihood(double y, const ClassPosterior& posterior,
                                const ClassModel& model) {
  const double p_car = posterior.p_car();
  return p_car * gaussian_pdf(y, model.alpha_car, model.tau2_car) +
         (1.0 - p_car) * gaussian_pdf(y, model.alpha_train, model.tau2_train);
}

void update_class_posterior(ClassPosterior& posterior, std::span<const double> amplitudes,
                            std::span<const double> beta, const ClassModel& model) {
  if (beta.size() != amplitudes.size() + 1) {
    throw domain_error("update_class_posterior: beta must be amplitudes plus miss entry");
  }
  double factor_car = beta[0];
  double factor_train = beta[0];
  for (std::size_t j = 0; j < amplitudes.size(); ++j) {
    factor_car += beta[1 + j] * gaussian_pdf(amplitudes[j], model.alpha_car, model.tau2_car);
    factor_train += beta[1 + j] * gaussian_pdf(amplitudes[j], model.alpha_train, model.tau2_train);
  }
  if (!(factor_car > 0) && !(factor_train > 0)) return;  // no usable information
  posterior.log_p_car += std::log(factor_car);
  posterior.log_p_train += std::log(factor_train);
  posterior.normalize();
}

std::vector<double> amplitude_refined_beta(std::span<const double> base_terms,
                                           std::span<const double> amplitudes,
                                           const ClassPosterior& posterior,
                                           const ClassModel& model) {
  if (base_terms.size() != amplitudes.size() + 1) {
    throw domain_error("amplitude_refined_beta: terms must be amplitudes plus miss entry");
  }
  std::vector<double> refined(base_terms.size());
  refined[0] = base_terms[0];
  double total = refined[0];
  for (std::size_t j = 0; j < amplitudes.size(); ++j) {
    refined[1 + j] = base_terms[1 + j] * class_mixture_likelihood(amplitudes[j], posterior, model);
    total += refined[1 + j];
  }
  if (!(total > 0)) {
    std::fill(refined.begin(), refined.end(), 0.0);
    refined[0] = 1.0;
    return refined;
  }
  for (double& b : refined) b /= total;
  return refined;
}

void save_class_model(const ClassModel& model, const std::filesystem::path& path) {
  model.validate();
  nlohmann::json j{{"pi_car", model.pi_car},
                   {"alpha_car", model.alpha_car},
                   {"tau2_car", model.tau2_car},
                   {"alpha_train", model.alpha_train},
                   {"tau2_train", model.tau2_train},
                   {"use_amplitude_in_da", model.use_amplitude_in_da}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failure on " + path.string());
}

ClassModel load_class_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open class model " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw format_error(path.string() + ": invalid JSON object");
  }
  ClassModel model;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "pi_car") {
        model.pi_car = value.get<double>();
      } else if (key == "alpha_car") {
        model.alpha_car = value.get<double>();
      } else if (key == "tau2_car") {
        model.tau2_car = value.get<double>();
      } else if (key == "alpha_train") {
        model.alpha_train = value.get<double>();
      } else if (key == "tau2_train") {
        model.tau2_train = value.get<double>();
      } else if (key == "use_amplitude_in_da") {
        model.use_amplitude_in_da = value.get<bool>();
      } else {
        throw format_error(path.string() + ": unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path.string() + ": " + e.what());
  }
  model.validate();
  return model;
}

}  // namespace dastrack
