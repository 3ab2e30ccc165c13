#include "dastrack/picker.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

namespace dastrack {

void PickerConfig::validate() const {
  if (!std::isfinite(amplitude_threshold)) throw config_error("amplitude_threshold must be finite");
  if (!(epsilon > 0)) throw config_error("epsilon must be positive");
  if (min_pts < 1) throw config_error("min_pts must be >= 1");
  if (!(batch_span > 0)) throw config_error("batch_span must be positive");
}

std::vector<Cell> threshold_exceedances(const StrainBatch& batch, double threshold) {
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < batch.meta.n_samples; ++s) {
    for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
      if (batch.at(s, c) > threshold) cells.push_back({s, c});
    }
  }
  return cells;
}

namespace {

/// Uniform grid over the point set with cell size epsilon; neighbour queries
/// only touch the 3x3 cell block around a point.
class GridIndex {
 public:
  GridIndex(const std::vector<std::array<double, 2>>& pts, double eps)
      : pts_(pts), eps_(eps) {
    buckets_.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      buckets_[key(cell_of(pts[i][0]), cell_of(pts[i][1]))].push_back(i);
    }
  }

  /// Indices with dist(p, q) < eps; includes `i` itself.
  void neighbours(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const auto& p = pts_[i];
    const std::int64_t cx = cell_of(p[0]);
    const std::int64_t cy = cell_of(p[1]);
    const double eps2 = eps_ * eps_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second) {
          const double ddx = pts_[j][0] - p[0];
          const double ddy = pts_[j][1] - p[1];
          if (ddx * ddx + ddy * ddy < eps2) out.push_back(j);
        }
      }
    }
  }

 private:
  [[nodiscard]] std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v / eps_));
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
           static_cast<std::uint32_t>(y);
  }

  const std::vector<std::array<double, 2>>& pts_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

constexpr int k_unvisited = -2;
constexpr int k_noise = -1;

}  // namespace

ClusterLabels dbscan(const std::vector<std::array<double, 2>>& points, double epsilon,
                     int min_pts) {
  if (!(epsilon > 0)) throw config_error("epsilon must be positive");
  if (min_pts < 1) throw config_error("min_pts must be >= 1");

  ClusterLabels result;
  result.label.assign(points.size(), k_unvisited);
  if (points.empty()) return result;

  GridIndex index(points, epsilon);
  std::vector<std::size_t> nbrs;
  std::vector<std::size_t> expand_nbrs;
  int cid = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (result.label[i] != k_unvisited) continue;
    index.neighbours(i, nbrs);
    if (nbrs.size() < static_cast<std::size_t>(min_pts)) {
      result.label[i] = k_noise;
      continue;
    }
    result.label[i] = cid;
    std::deque<std::size_t> seeds(nbrs.begin(), nbrs.end());
    while (!seeds.empty()) {
      const std::size_t q = seeds.front();
      seeds.pop_front();
      if (result.label[q] == k_noise) result.label[q] = cid;  // border point
      if (result.label[q] != k_unvisited) continue;
      result.label[q] = cid;
      index.neighbours(q, expand_nbrs);
      if (expand_nbrs.size() >= static_cast<std::size_t>(min_pts)) {
        seeds.insert(seeds.end(), expand_nbrs.begin(), expand_nbrs.end());
      }
    }
    ++cid;
  }
  result.n_clusters = cid;
  return result;
}

std::vector<Pick> extract_picks(const StrainBatch& smoothed, const PickerConfig& cfg) {
  cfg.validate();
  if (!smoothed.meta.is_log_rms) throw domain_error("extract_picks expects a log-RMS batch");
  const auto cells = threshold_exceedances(smoothed, cfg.amplitude_threshold);
  if (cells.empty()) return {};

  const double nt = static_cast<double>(smoothed.meta.n_samples);
  const double nc = static_cast<double>(smoothed.meta.n_channels);
  std::vector<std::array<double, 2>> pts(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    pts[i] = {static_cast<double>(cells[i].channel) / nc,
              static_cast<double>(cells[i].sample) / nt};
  }
  const ClusterLabels labels = dbscan(pts, cfg.epsilon, cfg.min_pts);

  struct Acc {
    double t_sum = 0, c_sum = 0, a_sum = 0;
    int n = 0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(labels.n_clusters));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int l = labels.label[i];
    if (l < 0) continue;  // noise (only possible when min_pts > 1)
    Acc& a = acc[static_cast<std::size_t>(l)];
    a.t_sum += static_cast<double>(cells[i].sample);
    a.c_sum += static_cast<double>(cells[i].channel);
    a.a_sum += smoothed.at(cells[i].sample, cells[i].channel);
    a.n += 1;
  }

  std::vector<Pick> picks;
  picks.reserve(acc.size());
  for (const Acc& a : acc) {
    if (a.n == 0) continue;
    Pick p;
    const double mean_t = a.t_sum / a.n;
    const double mean_c = a.c_sum / a.n;
    p.time = smoothed.meta.t0 + mean_t * smoothed.meta.sample_interval;
    p.position = smoothed.meta.channel0_position + mean_c * smoothed.meta.channel_spacing;
    p.log_amplitude = a.a_sum / a.n;
    p.cluster_size = a.n;
    picks.push_back(p);
  }
  return picks;
}

std::vector<Pick> extract_picks_batched(const StrainBatch& smoothed, const PickerConfig& cfg) {
  cfg.validate();
  const double dt = smoothed.meta.sample_interval;
  const std::size_t span =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.batch_span / dt)));

  std::vector<Pick> picks;
  for (std::size_t first = 0; first < smoothed.meta.n_samples; first += span) {
    const std::size_t count = std::min(span, smoothed.meta.n_samples - first);
    StrainBatch window;
    window.meta = smoothed.meta;
    window.meta.n_samples = count;
    window.meta.t0 = smoothed.meta.t0 + static_cast<double>(first) * dt;
    window.values.assign(
        smoothed.values.begin() + static_cast<std::ptrdiff_t>(first * smoothed.meta.n_channels),
        smoothed.values.begin() +
            static_cast<std::ptrdiff_t>((first + count) * smoothed.meta.n_channels));
    auto batch_picks = extract_picks(window, cfg);
    picks.insert(picks.end(), batch_picks.begin(), batch_picks.end());
  }
  return picks;
}

}  // namespace dastrack
