#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dastrack/kalman.hpp"

namespace dastrack {

enum class DaMode { joint, per_target };

/// One joint data-association hypothesis: entry i is 0 when track i is
/// undetected, or j >= 1 meaning track i generated measurement j-1.
struct AssociationHypothesis {
  std::vector<int> assignment;
  double weight = 0.0;  ///< unnormalized product weight
};

/// Inputs to the association-probability computation, already gated:
/// gated[i] lists the (0-based) measurement indices inside track i's gate and
/// det_term[i][k] is the detection weight of pairing track i with gated[i][k]
/// (typically P_D * phi(z; H mu, S) / lambda, possibly amplitude-refined).
/// miss_term is the undetected weight (1 - P_D), shared by all tracks.
struct AssociationInput {
  std::vector<std::vector<int>> gated;
  std::vector<std::vector<double>> det_term;
  double miss_term = 0.1;
  std::size_t n_measurements = 0;
};

/// Marginal association probabilities: beta[i][0] is track i's undetected
/// probability, beta[i][1 + k] pairs track i with gated[i][k].
struct AssociationResult {
  std::vector<std::vector<double>> beta;
  bool used_fallback = false;  ///< joint enumeration exceeded the cap, used per_target
};

/// Measurement indices within the chi-square gate of a predicted track:
/// (z - H mu)^2 / S <= chi2_quantile_1dof(gate_probability).
/// gate_probability == 1 disables gating.
[[nodiscard]] std::vector<int> gate(const GaussianState& predicted,
                                    std::span<const double> measurements,
                                    const MotionModel& model, double gate_probability);

/// Enumerate every valid joint association (each track undetected or paired
/// with one of its gated measurements; no measurement shared by two tracks).
/// Weights are products of miss/detection terms. Returns nullopt once more
/// than `cap` hypotheses exist.
[[nodiscard]] std::optional<std::vector<AssociationHypothesis>> enumerate_valid_das(
    const AssociationInput& input, std::size_t cap);

/// Marginal association probabilities. In joint mode the marginals come from
/// the enumerated hypotheses (falling back to per_target beyond `cap`); in
/// per_target mode each track row is normalized independently.
[[nodiscard]] AssociationResult association_probabilities(const AssociationInput& input,
                                                          DaMode mode, std::size_t cap);

/// Convenience wrapper building standard detection terms
/// P_D * phi(z_j; H mu_i, S_i) / lambda for already-gated measurements.
[[nodiscard]] AssociationInput make_association_input(
    std::span<const GaussianState> predicted, std::span<const double> measurements,
    std::span<const std::vector<int>> gated, const MotionModel& model, double p_detect,
    double clutter_density);

/// Moment-matched JPDA state update for one track. `gated_z` are the gated
/// measurements, `beta` the matching row ([0] = undetected, [1+k] = gated_z[k]).
[[nodiscard]] GaussianState jpda_update(const GaussianState& predicted,
                                        std::span<const double> gated_z,
                                        std::span<const double> beta, const MotionModel& model);

}  // namespace dastrack
