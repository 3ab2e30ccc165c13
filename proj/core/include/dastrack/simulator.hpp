#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

namespace rng {

/// Deterministic random engine with fixed, implementation-independent
/// distributions (std:: distribution objects are not bit-reproducible across
/// standard libraries). Box-Muller normals, log-space Knuth Poisson.
class Engine {
 public:
  explicit Engine(std::uint64_t seed, std::uint32_t salt = 0);

  /// Uniform on [0, 1) with 53-bit resolution.
  [[nodiscard]] double uniform01();
  /// Standard normal (Box-Muller; the spare deviate is cached).
  [[nodiscard]] double normal();
  [[nodiscard]] double normal(double mean, double stddev);
  /// Poisson(lambda) count, lambda >= 0.
  [[nodiscard]] int poisson(double lambda);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rng

/// Which field-of-view edge an object enters through.
enum class EntrySide { low, high };

/// One simulated object: born at an FOV edge, constant-velocity motion
/// (optionally with process noise), vanishing when it leaves the FOV.
struct ObjectSpec {
  double birth_time = 0.0;
  EntrySide entry = EntrySide::low;
  double speed = 10.0;  ///< m/s, strictly positive; sign comes from the entry side
  ObjectClass cls = ObjectClass::car;
  std::optional<double> amplitude;  ///< mean log-amplitude override (default: class mean)
};

/// A stationary amplitude bump in the synthetic field (field-level scenarios only).
struct Decoy {
  double time = 0.0;      ///< bump centre (s)
  double position = 0.0;  ///< bump centre (m along fibre)
  double amplitude = 0.0; ///< peak log-amplitude
};

/// Synthetic log-RMS field geometry and texture.
struct FieldParams {
  double channel_spacing = 1.02;     ///< metres between synthetic channels
  double blob_width_channels = 15.0; ///< Gaussian sigma of a bump across channels
  double blob_duration = 0.6;        ///< Gaussian sigma of a bump in time (s)
  double noise_floor = -10.0;        ///< background mean log-amplitude
  double noise_sigma = 0.3;          ///< background noise standard deviation
  double margin = 40.0;              ///< extra fibre length beyond the FOV (m)
  std::vector<Decoy> decoys;
};

/// Gaussian log-amplitude model for one pick source.
struct AmplitudeModel {
  double mean = 0.0;
  double var = 0.25;
};

/// Full scenario description; a pure function of this (and nothing else)
/// produces every simulator output.
struct Scenario {
  std::uint64_t seed = 1;
  double duration = 600.0;  ///< s; steps run from t = 0 to duration inclusive
  double dt = 0.2;          ///< s per step
  double fov_low = 3963.0;
  double fov_high = 4167.0;
  double p_detect = 0.9;
  double clutter_density = 1.0 / 200.0;  ///< clutter picks per metre per step
  double sigma_q2 = 1.0;                 ///< true process-noise intensity (0 = straight lines)
  double sigma_r2 = 15.0;                ///< measurement-noise variance (m^2)
  AmplitudeModel car_amp{-8.0, 0.25};
  AmplitudeModel train_amp{-5.5, 0.25};
  AmplitudeModel clutter_amp{-8.5, 0.04};
  std::vector<ObjectSpec> objects;
  FieldParams field;

  void validate() const;
};

/// One true object state at a step.
struct TrueState {
  double t = 0.0;
  double position = 0.0;
  double velocity = 0.0;
};

/// One object's truth: id (1-based), class, and its per-step states from birth
/// until it leaves the field of view.
struct TrueObject {
  int object_id = 0;
  ObjectClass cls = ObjectClass::car;
  std::vector<TrueState> states;

  /// North when the initial velocity is positive.
  [[nodiscard]] Direction direction() const;
};

/// Per-step truth for a whole scenario.
struct GroundTruth {
  double t0 = 0.0;
  double dt = 0.2;
  std::size_t n_steps = 0;
  std::vector<TrueObject> objects;
};

/// A pick plus its origin: the generating object_id, or -1 for clutter.
struct SimulatedPick {
  Pick pick;
  int origin = -1;
};

/// Pick-level simulation output.
struct PickSimulation {
  GroundTruth truth;
  std::vector<std::vector<SimulatedPick>> picks_per_step;

  /// All picks flattened in step order (the tracker-facing stream).
  [[nodiscard]] std::vector<Pick> flatten() const;
};

/// Sample every object's trajectory: birth at its FOV edge at the step nearest
/// birth_time, then x_{k+1} = G x_k + q_k with q_k ~ N(0, Q(sigma_q2)); the
/// object vanishes at the first step its position leaves [fov_low, fov_high].
[[nodiscard]] GroundTruth make_ground_truth(const Scenario& scn);

/// Measurement-model simulation: each alive object is detected per step with
/// probability p_detect, producing position + N(0, sigma_r2) and a class-model
/// amplitude; clutter counts are Poisson(clutter_density * FOV width) per step
/// with uniform positions and clutter-model amplitudes. Trajectories are those
/// of make_ground_truth (same seed stream), so truth and picks agree.
[[nodiscard]] PickSimulation simulate_picks(const Scenario& scn);

/// Field-level simulation: a log-RMS StrainBatch at the step cadence covering
/// [fov_low - margin, fov_high + margin]. Each cell is
/// noise_floor + N(0, noise_sigma^2) + the largest Gaussian bump deposited by
/// any object state or decoy; a bump peaks at its source amplitude above the
/// floor with sigmas (blob_width_channels, blob_duration).
[[nodiscard]] StrainBatch simulate_field(const Scenario& scn);

/// Tracking quality metrics. Confirmed tracks are greedily matched to true
/// objects by mean absolute position gap over overlapping steps (closest pair
/// first, each used once, gap <= match_distance). Values over an empty pair
/// set are NaN.
struct TrackingMetrics {
  std::size_t true_count = 0;
  std::size_t confirmed_count = 0;  ///< distinct tracks that ever reached confirmed
  std::size_t matched_count = 0;
  double class_accuracy = 0.0;      ///< end-of-track argmax vs true class, over matches
  double position_rmse = 0.0;       ///< over all matched overlapping steps (m)
  double velocity_mean_error = 0.0; ///< mean |track mean vel - true mean vel| (m/s)
  std::size_t north_pairs = 0;
  std::size_t south_pairs = 0;
  double mean_speed_error_north = 0.0;  ///< |mean track speed - mean true speed| (m/s)
  double mean_speed_error_south = 0.0;
};

[[nodiscard]] TrackingMetrics score_tracking(const GroundTruth& truth,
                                             const std::vector<TrackRecord>& records,
                                             double match_distance = 20.0);

/// CSV export/import of ground truth (header
/// object_id,t,position_m,velocity_mps,class). Loading reconstructs dt from
/// the smallest positive time gap between consecutive states.
void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
[[nodiscard]] GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Scenario JSON (strict: unknown keys are rejected; all fields optional with
/// the defaults above).
[[nodiscard]] Scenario parse_scenario(const std::string& json_text);
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] std::string scenario_to_json_string(const Scenario& scn);
void save_scenario(const Scenario& scn, const std::filesystem::path& path);

}  // namespace dastrack
