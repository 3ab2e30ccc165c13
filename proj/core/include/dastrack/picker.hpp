#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

/// Parameters for turning a smoothed log-RMS batch into picks.
struct PickerConfig {
  double amplitude_threshold = -8.8;  ///< log-RMS exceedance threshold A
  double epsilon = 0.05;              ///< DBSCAN radius in normalized (channel, time) space
  int min_pts = 1;                    ///< DBSCAN core-point neighbourhood size
  double batch_span = 6.0;            ///< seconds of data clustered together

  void validate() const;
};

/// A matrix cell index (sample = time index, channel index).
struct Cell {
  std::size_t sample;
  std::size_t channel;
};

/// All cells with value strictly above the threshold, in row-major scan order.
[[nodiscard]] std::vector<Cell> threshold_exceedances(const StrainBatch& batch, double threshold);

/// DBSCAN labels for a 2-D point set: label[i] >= 0 is the cluster id,
/// -1 marks noise. With min_pts == 1 every point is a core point, so the
/// clusters are exactly the connected components of the epsilon-neighbour graph.
struct ClusterLabels {
  std::vector<int> label;
  int n_clusters = 0;
};

/// Density-based clustering with strict distance inequality (dist < epsilon).
/// A point's neighbourhood includes itself.
[[nodiscard]] ClusterLabels dbscan(const std::vector<std::array<double, 2>>& points, double epsilon,
                                   int min_pts);

/// Threshold + cluster one smoothed log-RMS batch and reduce each cluster to a
/// pick (arithmetic means of member times/positions/amplitudes, in physical
/// units). Picks are ordered by cluster id, which follows discovery order.
[[nodiscard]] std::vector<Pick> extract_picks(const StrainBatch& smoothed,
                                              const PickerConfig& cfg);

/// Split a smoothed batch into cfg.batch_span windows along time and extract
/// picks per window (clusters never span windows). The trailing partial window
/// is processed as-is.
[[nodiscard]] std::vector<Pick> extract_picks_batched(const StrainBatch& smoothed,
                                                      const PickerConfig& cfg);

}  // namespace dastrack
