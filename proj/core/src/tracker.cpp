#include "dastrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dastrack {

void TrackerConfig::validate() const {
  motion.validate();
  if (!(p_detect > 0) || !(p_detect <= 1)) throw config_error("p_detect must lie in (0, 1]");
  if (!(clutter_density > 0)) throw config_error("clutter_density must be positive");
  if (!(fov_low < fov_high)) throw config_error("fov_low must be below fov_high");
  if (!(init_zone > 0) || !(init_zone < (fov_high - fov_low) / 2.0)) {
    throw config_error("init_zone must be positive and below half the field of view");
  }
  if (!(init_speed > 0)) throw config_error("init_speed must be positive");
  if (!(init_pos_var > 0) || !(init_vel_var > 0)) {
    throw config_error("initial variances must be positive");
  }
  if (!(cov_trace_threshold > 0)) throw config_error("cov_trace_threshold must be positive");
  if (n_init < 1) throw config_error("n_init must be at least 1");
  if (!(gate_probability > 0) || !(gate_probability <= 1)) {
    throw config_error("gate_probability must lie in (0, 1]");
  }
  if (hypothesis_cap < 1) throw config_error("hypothesis_cap must be at least 1");
  if (holding_miss_limit < 0) throw config_error("holding_miss_limit must be >= 0");
  if (confirmed_miss_limit < 0) throw config_error("confirmed_miss_limit must be >= 0");
}

namespace {

TrackRecord make_record(const Track& trk, double t) {
  return {trk.id,
          t,
          trk.state.mean(0),
          trk.state.mean(1),
          trk.state.cov(0, 0),
          trk.state.cov(1, 1),
          trk.class_posterior.p_car(),
          trk.status};
}

}  // namespace

std::vector<Track> init_candidates(const std::vector<Pick>& picks, const TrackerConfig& cfg,
                                   const ClassModel& model, double t,
                                   std::span<const GaussianState> existing_predicted) {
  const double chi2 = chi2_quantile_1dof(cfg.gate_probability);

  struct Zone {
    double low;
    double high;
    double velocity;
    Direction direction;
  };
  const Zone zones[2] = {
      {cfg.fov_low, cfg.fov_low + cfg.init_zone, cfg.init_speed, Direction::north},
      {cfg.fov_high - cfg.init_zone, cfg.fov_high, -cfg.init_speed, Direction::south},
  };

  std::vector<Track> born;
  for (const Zone& zone : zones) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Pick& p : picks) {
      if (p.position >= zone.low && p.position <= zone.high) {
        sum += p.position;
        ++count;
      }
    }
    if (count == 0) continue;
    const double zone_mean = sum / static_cast<double>(count);

    bool suppressed = false;
    for (const GaussianState& predicted : existing_predicted) {
      const double nu = zone_mean - predicted.mean(0);
      const double s = innovation_variance(predicted, cfg.motion);
      if (nu * nu / s <= chi2) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;

    Track trk;
    trk.state.mean << zone_mean, zone.velocity;
    trk.state.cov << cfg.init_pos_var, 0.0, 0.0, cfg.init_vel_var;
    trk.status = TrackStatus::holding;
    trk.update_count = 0;
    trk.consecutive_misses = 0;
    trk.birth_time = t;
    trk.direction_hint = zone.direction;
    trk.class_posterior = ClassPosterior::from_prior(model.pi_car);
    born.push_back(trk);
  }
  return born;
}

Tracker::Tracker(TrackerConfig cfg, ClassModel model, double start_time)
    : cfg_(std::move(cfg)), model_(std::move(model)), start_time_(start_time) {
  cfg_.validate();
  model_.validate();
}

double Tracker::current_time() const {
  return start_time_ + static_cast<double>(steps_taken_) * cfg_.motion.dt;
}

std::vector<TrackRecord> Tracker::step(const std::vector<Pick>& all_picks) {
  const double t = current_time();

  std::vector<Pick> picks;
  picks.reserve(all_picks.size());
  for (const Pick& p : all_picks) {
    if (p.position >= cfg_.fov_low && p.position <= cfg_.fov_high) picks.push_back(p);
  }
  std::vector<double> z(picks.size());
  std::vector<double> amp(picks.size());
  for (std::size_t j = 0; j < picks.size(); ++j) {
    z[j] = picks[j].position;
    amp[j] = picks[j].log_amplitude;
  }

  // Predict every live track to this step.
  const std::size_t n_existing = tracks_.size();
  std::vector<GaussianState> predicted(n_existing);
  for (std::size_t i = 0; i < n_existing; ++i) {
    predicted[i] = kf_predict(tracks_[i].state, cfg_.motion);
  }

  // Gate and form association terms (optionally amplitude-refined).
  std::vector<std::vector<int>> gated(n_existing);
  for (std::size_t i = 0; i < n_existing; ++i) {
    gated[i] = gate(predicted[i], z, cfg_.motion, cfg_.gate_probability);
  }
  AssociationInput input =
      make_association_input(predicted, z, gated, cfg_.motion, cfg_.p_detect, cfg_.clutter_density);
  if (model_.use_amplitude_in_da) {
    for (std::size_t i = 0; i < n_existing; ++i) {
      for (std::size_t k = 0; k < gated[i].size(); ++k) {
        input.det_term[i][k] *= class_mixture_likelihood(
            amp[static_cast<std::size_t>(gated[i][k])], tracks_[i].class_posterior, model_);
      }
    }
  }
  const AssociationResult assoc = association_probabilities(input, cfg_.da_mode, cfg_.hypothesis_cap);

  // Moment-matched state update, hit/miss bookkeeping, class-belief update.
  for (std::size_t i = 0; i < n_existing; ++i) {
    Track& trk = tracks_[i];
    std::vector<double> gz(gated[i].size());
    std::vector<double> ga(gated[i].size());
    for (std::size_t k = 0; k < gated[i].size(); ++k) {
      gz[k] = z[static_cast<std::size_t>(gated[i][k])];
      ga[k] = amp[static_cast<std::size_t>(gated[i][k])];
    }
    trk.state = jpda_update(predicted[i], gz, assoc.beta[i], cfg_.motion);
    // A successful update leaves the track more likely detected than not;
    // duplicates sharing an object's picks are starved of probability mass by
    // the joint association and age out instead of confirming.
    const double beta_miss = assoc.beta[i].empty() ? 1.0 : assoc.beta[i][0];
    if (!gated[i].empty() && 1.0 - beta_miss > 0.5) {
      ++trk.update_count;
      trk.consecutive_misses = 0;
    } else {
      ++trk.consecutive_misses;
    }
    update_class_posterior(trk.class_posterior, ga, assoc.beta[i], model_);
  }

  // Initiate from the entry zones, suppressed by existing gates.
  for (Track& born : init_candidates(picks, cfg_, model_, t, predicted)) {
    born.id = next_id_++;
    tracks_.push_back(std::move(born));
  }

  // Confirm holding tracks with enough updates.
  for (Track& trk : tracks_) {
    if (trk.status == TrackStatus::holding && trk.update_count >= cfg_.n_init) {
      trk.status = TrackStatus::confirmed;
    }
  }

  // Delete on predicted quantities (tracks born this step are exempt).
  for (std::size_t i = 0; i < n_existing; ++i) {
    const double trace = predicted[i].cov.trace();
    const double pos = predicted[i].mean(0);
    bool gone =
        trace > cfg_.cov_trace_threshold || pos < cfg_.fov_low || pos > cfg_.fov_high;
    if (!gone && cfg_.holding_miss_limit > 0 && tracks_[i].status == TrackStatus::holding &&
        tracks_[i].consecutive_misses >= cfg_.holding_miss_limit) {
      gone = true;
    }
    if (!gone && cfg_.confirmed_miss_limit > 0 &&
        tracks_[i].status == TrackStatus::confirmed &&
        tracks_[i].consecutive_misses >= cfg_.confirmed_miss_limit) {
      gone = true;
    }
    if (gone) tracks_[i].status = TrackStatus::deleted;
  }

  std::vector<TrackRecord> records;
  records.reserve(tracks_.size());
  for (const Track& trk : tracks_) records.push_back(make_record(trk, t));

  std::erase_if(tracks_, [](const Track& trk) { return trk.status == TrackStatus::deleted; });

  ++steps_taken_;
  return records;
}

std::vector<TrackRecord> run_tracker(const std::vector<Pick>& picks, const TrackerConfig& cfg,
                                     const ClassModel& model, double t_start, double t_end) {
  cfg.validate();
  model.validate();
  if (!(t_end >= t_start)) throw config_error("run_tracker: t_end must be >= t_start");
  const double dt = cfg.motion.dt;
  const long long n_steps = std::llround((t_end - t_start) / dt) + 1;

  std::vector<std::vector<Pick>> buckets(static_cast<std::size_t>(n_steps));
  for (const Pick& p : picks) {
    const long long k = std::llround((p.time - t_start) / dt);
    if (k >= 0 && k < n_steps) buckets[static_cast<std::size_t>(k)].push_back(p);
  }

  Tracker tracker(cfg, model, t_start);
  std::vector<TrackRecord> records;
  for (const std::vector<Pick>& bucket : buckets) {
    std::vector<TrackRecord> out = tracker.step(bucket);
    records.insert(records.end(), out.begin(), out.end());
  }
  return records;
}

}  // namespace dastrack
