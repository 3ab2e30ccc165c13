#include "dastrack/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

namespace dastrack {

void TunerConfig::validate(std::size_t n_channels) const {
  if (kappa_grid.empty() || threshold_grid.empty() || epsilon_grid.empty()) {
    throw config_error("tuner grids must be non-empty");
  }
  for (int k : kappa_grid) {
    if (k < 1 || k % 2 == 0 || static_cast<std::size_t>(k) > n_channels) {
      throw config_error("kappa grid values must be odd, >= 1 and <= n_channels");
    }
  }
  for (double a : threshold_grid) {
    if (!std::isfinite(a)) throw config_error("threshold grid values must be finite");
  }
  for (double e : epsilon_grid) {
    if (!(e > 0)) throw config_error("epsilon grid values must be positive");
  }
  if (!(penalty_xi >= 0)) throw config_error("penalty_xi must be non-negative");
  if (reference_channel >= n_channels) throw config_error("reference_channel out of range");
  if (min_pts < 1) throw config_error("min_pts must be >= 1");
  if (!(batch_span > 0)) throw config_error("batch_span must be positive");
}

namespace {

/// Largest distance from any point of `from` to its nearest point of `to_sorted`.
double directed_hausdorff(std::span<const double> from, const std::vector<double>& to_sorted) {
  double worst = 0.0;
  for (double x : from) {
    auto it = std::lower_bound(to_sorted.begin(), to_sorted.end(), x);
    double best = std::numeric_limits<double>::infinity();
    if (it != to_sorted.end()) best = std::min(best, std::abs(*it - x));
    if (it != to_sorted.begin()) best = std::min(best, std::abs(*(it - 1) - x));
    worst = std::max(worst, best);
  }
  return worst;
}

/// Slice `span_samples` rows starting at `first` into a standalone batch.
StrainBatch slice_rows(const StrainBatch& b, std::size_t first, std::size_t count) {
  StrainBatch out;
  out.meta = b.meta;
  out.meta.n_samples = count;
  out.meta.t0 = b.meta.t0 + static_cast<double>(first) * b.meta.sample_interval;
  out.values.assign(
      b.values.begin() + static_cast<std::ptrdiff_t>(first * b.meta.n_channels),
      b.values.begin() + static_cast<std::ptrdiff_t>((first + count) * b.meta.n_channels));
  return out;
}

}  // namespace

double hausdorff(std::span<const double> p, std::span<const double> e) {
  if (p.empty() || e.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> ps(p.begin(), p.end());
  std::vector<double> es(e.begin(), e.end());
  std::sort(ps.begin(), ps.end());
  std::sort(es.begin(), es.end());
  return std::max(directed_hausdorff(p, es), directed_hausdorff(e, ps));
}

double penalized_objective(std::span<const double> p, std::span<const double> e, double xi) {
  if (p.empty() || e.empty()) return std::numeric_limits<double>::infinity();
  const double size_gap = std::abs(static_cast<double>(p.size()) - static_cast<double>(e.size()));
  return hausdorff(p, e) + xi * size_gap;
}

TuneResult tune(const StrainBatch& batch, const EventLog& events, const TunerConfig& cfg) {
  cfg.validate(batch.meta.n_channels);

  std::vector<double> event_times;
  event_times.reserve(events.size());
  for (const EventEntry& ev : events) event_times.push_back(ev.time);

  // The log-RMS stage does not depend on any grid parameter: run it once per
  // picking window, mirroring how extraction batches the stream.
  std::vector<StrainBatch> log_windows;
  {
    const double dt = batch.meta.sample_interval;
    const std::size_t span =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.batch_span / dt)));
    for (std::size_t first = 0; first < batch.meta.n_samples; first += span) {
      const std::size_t count = std::min(span, batch.meta.n_samples - first);
      StrainBatch window = slice_rows(batch, first, count);
      if (!batch.meta.is_log_rms) {
        window = log_rms_pipeline(window, cfg.preprocess);
        if (window.meta.n_samples == 0) continue;
      }
      log_windows.push_back(std::move(window));
    }
  }

  const double ref_position = batch.meta.channel0_position +
                              static_cast<double>(cfg.reference_channel) *
                                  batch.meta.channel_spacing;

  TuneResult result;
  double best_score = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int kappa : cfg.kappa_grid) {
    std::vector<StrainBatch> smoothed;
    smoothed.reserve(log_windows.size());
    for (const StrainBatch& w : log_windows) smoothed.push_back(smooth_channels(w, kappa));
    const double half_span_m =
        static_cast<double>(kappa) / 2.0 * batch.meta.channel_spacing;

    for (double threshold : cfg.threshold_grid) {
      for (double epsilon : cfg.epsilon_grid) {
        PickerConfig picker;
        picker.amplitude_threshold = threshold;
        picker.epsilon = epsilon;
        picker.min_pts = cfg.min_pts;
        picker.batch_span = cfg.batch_span;

        std::vector<double> pick_times;
        for (const StrainBatch& w : smoothed) {
          for (const Pick& p : extract_picks(w, picker)) {
            if (std::abs(p.position - ref_position) <= half_span_m) {
              pick_times.push_back(p.time);
            }
          }
        }
        const double score = penalized_objective(pick_times, event_times, cfg.penalty_xi);
        result.surface.push_back({kappa, threshold, epsilon, score});

        const bool better =
            !have_best || score < best_score ||
            (score == best_score &&
             std::tie(threshold, epsilon, kappa) <
                 std::tie(result.best_threshold, result.best_epsilon, result.best_kappa));
        if (better) {
          have_best = true;
          best_score = score;
          result.best_kappa = kappa;
          result.best_threshold = threshold;
          result.best_epsilon = epsilon;
          result.objective = score;
        }
      }
    }
  }

  if (!std::isfinite(best_score)) {
    std::ostringstream msg;
    msg << "tuning failed: every grid point scored +inf (no picks near the reference "
           "channel or no events). Surface:";
    for (const SurfaceCell& c : result.surface) {
      msg << " (kappa=" << c.kappa << ", A=" << c.threshold << ", eps=" << c.epsilon << ")";
    }
    throw tune_error(msg.str());
  }
  return result;
}

void save_surface(const TuneResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "kappa,A,epsilon,score\n";
  char buf[128];
  for (const SurfaceCell& c : result.surface) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", c.kappa, c.threshold, c.epsilon,
                  c.score);
    out << buf;
  }
  if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace dastrack
