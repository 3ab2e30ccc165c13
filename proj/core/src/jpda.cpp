#include "dastrack/jpda.hpp"

#include <cmath>

namespace dastrack {

std::vector<int> gate(const GaussianState& predicted, std::span<const double> measurements,
                      const MotionModel& model, double gate_probability) {
  const double threshold = chi2_quantile_1dof(gate_probability);
  const double s = innovation_variance(predicted, model);
  const double z_hat = (model.observation() * predicted.mean)(0);
  std::vector<int> inside;
  for (std::size_t j = 0; j < measurements.size(); ++j) {
    const double nu = measurements[j] - z_hat;
    if (nu * nu / s <= threshold) inside.push_back(static_cast<int>(j));
  }
  return inside;
}

namespace {

void check_input(const AssociationInput& input) {
  if (input.gated.size() != input.det_term.size()) {
    throw domain_error("association input: gated/det_term size mismatch");
  }
  for (std::size_t i = 0; i < input.gated.size(); ++i) {
    if (input.gated[i].size() != input.det_term[i].size()) {
      throw domain_error("association input: gated/det_term row mismatch");
    }
    for (int j : input.gated[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= input.n_measurements) {
        throw domain_error("association input: gated index out of range");
      }
    }
  }
  if (!(input.miss_term >= 0)) throw domain_error("association input: negative miss term");
}

/// Depth-first enumeration over tracks; `used` tracks which measurements are taken.
bool enumerate_rec(const AssociationInput& input, std::size_t track, std::vector<int>& assignment,
                   std::vector<char>& used, double weight, std::size_t cap,
                   std::vector<AssociationHypothesis>& out) {
  if (track == input.gated.size()) {
    if (out.size() >= cap) return false;
    out.push_back({assignment, weight});
    return true;
  }
  assignment[track] = 0;
  if (!enumerate_rec(input, track + 1, assignment, used, weight * input.miss_term, cap, out)) {
    return false;
  }
  for (std::size_t k = 0; k < input.gated[track].size(); ++k) {
    const int j = input.gated[track][k];
    if (used[static_cast<std::size_t>(j)]) continue;
    used[static_cast<std::size_t>(j)] = 1;
    assignment[track] = j + 1;
    const bool ok = enumerate_rec(input, track + 1, assignment, used,
                                  weight * input.det_term[track][k], cap, out);
    used[static_cast<std::size_t>(j)] = 0;
    if (!ok) return false;
  }
  assignment[track] = 0;
  return true;
}

}  // namespace

std::optional<std::vector<AssociationHypothesis>> enumerate_valid_das(
    const AssociationInput& input, std::size_t cap) {
  check_input(input);
  std::vector<AssociationHypothesis> hypotheses;
  std::vector<int> assignment(input.gated.size(), 0);
  std::vector<char> used(input.n_measurements, 0);
  if (!enumerate_rec(input, 0, assignment, used, 1.0, cap, hypotheses)) return std::nullopt;
  return hypotheses;
}

AssociationResult association_probabilities(const AssociationInput& input, DaMode mode,
                                            std::size_t cap) {
  check_input(input);
  const std::size_t n = input.gated.size();
  AssociationResult result;
  result.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.beta[i].assign(1 + input.gated[i].size(), 0.0);
  }
  if (n == 0) return result;

  if (mode == DaMode::joint) {
    if (auto hypotheses = enumerate_valid_das(input, cap)) {
      double total = 0.0;
      for (const AssociationHypothesis& h : hypotheses.value()) total += h.weight;
      if (total <= 0.0) {
        // Degenerate weights (e.g. miss term 0 with no detectable pairing):
        // fall back to the single all-miss hypothesis.
        for (std::size_t i = 0; i < n; ++i) result.beta[i][0] = 1.0;
        return result;
      }
      for (const AssociationHypothesis& h : hypotheses.value()) {
        for (std::size_t i = 0; i < n; ++i) {
          if (h.assignment[i] == 0) {
            result.beta[i][0] += h.weight;
          } else {
            // Map the measurement index back to its slot in track i's gate list.
            const auto& g = input.gated[i];
            for (std::size_t k = 0; k < g.size(); ++k) {
              if (g[k] + 1 == h.assignment[i]) {
                result.beta[i][1 + k] += h.weight;
                break;
              }
            }
          }
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (double& b : result.beta[i]) b /= total;
      }
      return result;
    }
    result.used_fallback = true;
  }

  // Per-target factorization: each row normalized on its own.
  for (std::size_t i = 0; i < n; ++i) {
    double total = input.miss_term;
    for (double d : input.det_term[i]) total += d;
    if (total <= 0.0) {
      result.beta[i][0] = 1.0;
      continue;
    }
    result.beta[i][0] = input.miss_term / total;
    for (std::size_t k = 0; k < input.det_term[i].size(); ++k) {
      result.beta[i][1 + k] = input.det_term[i][k] / total;
    }
  }
  return result;
}

AssociationInput make_association_input(std::span<const GaussianState> predicted,
                                        std::span<const double> measurements,
                                        std::span<const std::vector<int>> gated,
                                        const MotionModel& model, double p_detect,
                                        double clutter_density) {
  if (predicted.size() != gated.size()) {
    throw domain_error("make_association_input: predicted/gated size mismatch");
  }
  if (!(p_detect >= 0) || !(p_detect <= 1)) throw config_error("p_detect must lie in [0, 1]");
  if (!(clutter_density > 0)) throw config_error("clutter_density must be positive");

  AssociationInput input;
  input.n_measurements = measurements.size();
  input.miss_term = 1.0 - p_detect;
  input.gated.assign(gated.begin(), gated.end());
  input.det_term.resize(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double s = innovation_variance(predicted[i], model);
    const double z_hat = (model.observation() * predicted[i].mean)(0);
    input.det_term[i].reserve(gated[i].size());
    for (int j : gated[i]) {
      const double phi = gaussian_pdf(measurements[static_cast<std::size_t>(j)], z_hat, s);
      input.det_term[i].push_back(p_detect * phi / clutter_density);
    }
  }
  return input;
}

GaussianState jpda_update(const GaussianState& predicted, std::span<const double> gated_z,
                          std::span<const double> beta, const MotionModel& model) {
  if (beta.size() != gated_z.size() + 1) {
    throw domain_error("jpda_update: beta must have one entry per gated measurement plus miss");
  }
  if (gated_z.empty()) return predicted;

  const Eigen::RowVector2d h = model.observation();
  const double s = innovation_variance(predicted, model);
  const Eigen::Vector2d k = predicted.cov * h.transpose() / s;
  const double z_hat = (h * predicted.mean)(0);

  double nu_bar = 0.0;
  double nu_sq = 0.0;
  for (std::size_t j = 0; j < gated_z.size(); ++j) {
    const double nu = gated_z[j] - z_hat;
    nu_bar += beta[1 + j] * nu;
    nu_sq += beta[1 + j] * nu * nu;
  }

  GaussianState out;
  out.mean = predicted.mean + k * nu_bar;

  const Eigen::Matrix2d updated = predicted.cov - k * h * predicted.cov;
  const Eigen::Matrix2d spread = k * (nu_sq - nu_bar * nu_bar) * k.transpose();
  out.cov = beta[0] * predicted.cov + (1.0 - beta[0]) * updated + spread;
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  return out;
}

}  // namespace dastrack
