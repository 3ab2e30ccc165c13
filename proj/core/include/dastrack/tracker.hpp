#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dastrack/classifier.hpp"
#include "dastrack/jpda.hpp"
#include "dastrack/kalman.hpp"
#include "dastrack/types.hpp"

namespace dastrack {

/// One live tracker hypothesis about a moving object.
struct Track {
  long long id = 0;
  GaussianState state;
  TrackStatus status = TrackStatus::holding;
  int update_count = 0;        ///< steps whose association deemed the track detected
  int consecutive_misses = 0;  ///< steps since the association last deemed it detected
  double birth_time = 0.0;
  Direction direction_hint = Direction::north;  ///< entry side at initiation
  ClassPosterior class_posterior{};
};

/// Multi-object tracker configuration.
struct TrackerConfig {
  MotionModel motion{};
  double p_detect = 0.9;                 ///< per-object detection probability
  double clutter_density = 1.0 / 200.0;  ///< expected clutter picks per metre per step
  double fov_low = 3963.0;               ///< field-of-view start (m along fibre)
  double fov_high = 4167.0;              ///< field-of-view end (m along fibre)
  double init_zone = 60.0;               ///< entry-zone depth at each FOV edge (m)
  double init_speed = 10.0;              ///< |initial velocity| (m/s), signed by entry side
  double init_pos_var = 10.0;            ///< initial position variance (m^2)
  double init_vel_var = 2.0;             ///< initial velocity variance ((m/s)^2)
  double cov_trace_threshold = 150.0;    ///< delete once the predicted trace exceeds this
  int n_init = 5;                        ///< updates required to confirm a holding track
  double gate_probability = 0.99;        ///< chi-square gate mass; 1 disables gating
  DaMode da_mode = DaMode::joint;
  std::size_t hypothesis_cap = 10000;  ///< joint-enumeration cap before per_target fallback
  int holding_miss_limit = 0;          ///< delete a holding track after this many consecutive
                                       ///< undetected steps (0 disables the rule)
  int confirmed_miss_limit = 0;        ///< delete a confirmed track after this many consecutive
                                       ///< undetected steps (0 disables the rule)

  void validate() const;
};

/// Entry-zone initiation: at most one holding track per zone, placed at the
/// mean position of the zone's picks, with velocity +init_speed when entering
/// at the low edge (northbound by convention) and -init_speed at the high
/// edge, and covariance diag(init_pos_var, init_vel_var). A zone is skipped
/// when any state in `existing_predicted` has the zone mean inside its gate.
/// Returned tracks carry id 0 (the tracker assigns real ids) and class belief
/// at the model prior.
[[nodiscard]] std::vector<Track> init_candidates(
    const std::vector<Pick>& picks, const TrackerConfig& cfg, const ClassModel& model, double t,
    std::span<const GaussianState> existing_predicted = {});

/// JPDA multi-object tracker over scalar position picks.
///
/// Per step: predict every live track, gate the step's picks, form marginal
/// association probabilities (joint enumeration or per-target normalization),
/// moment-match each track's state, update its class belief, initiate from the
/// entry zones, confirm holding tracks with update_count >= n_init, and delete
/// tracks whose predicted trace exceeds cov_trace_threshold or whose predicted
/// position left the field of view.
class Tracker {
 public:
  /// `start_time` is the timestamp of the first step's picks; step k fuses
  /// picks at start_time + k * motion.dt.
  Tracker(TrackerConfig cfg, ClassModel model, double start_time);

  /// Advance one step, fusing the picks timestamped at current_time().
  /// Picks outside the field of view are ignored. Returns one record per live
  /// track plus the final (status deleted) record of tracks removed this step.
  std::vector<TrackRecord> step(const std::vector<Pick>& picks);

  /// Timestamp the next step() call will fuse.
  [[nodiscard]] double current_time() const;
  [[nodiscard]] int steps_taken() const { return steps_taken_; }
  [[nodiscard]] const std::vector<Track>& tracks() const { return tracks_; }
  [[nodiscard]] const TrackerConfig& config() const { return cfg_; }

 private:
  TrackerConfig cfg_;
  ClassModel model_;
  double start_time_ = 0.0;
  int steps_taken_ = 0;
  long long next_id_ = 1;
  std::vector<Track> tracks_;
};

/// Run a whole pick stream through a Tracker: picks are bucketed to steps by
/// rounding (time - t_start) / dt, and the tracker is stepped once per bucket
/// from t_start through t_end. Picks outside [t_start, t_end] are dropped.
[[nodiscard]] std::vector<TrackRecord> run_tracker(const std::vector<Pick>& picks,
                                                   const TrackerConfig& cfg,
                                                   const ClassModel& model, double t_start,
                                                   double t_end);

}  // namespace dastrack
