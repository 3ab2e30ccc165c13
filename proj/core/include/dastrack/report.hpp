#pragma once

#include <filesystem>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

/// One reporting bin (only bins containing at least one confirmed track are
/// materialized). Velocity means cover confirmed car tracks only and are NaN
/// when the bin has no car in that direction.
struct ReportBin {
  double bin_start_s = 0.0;
  std::size_t car_count = 0;
  std::size_t train_count = 0;
  double north_mean_kmh = 0.0;
  double south_mean_kmh = 0.0;
};

struct TrafficReport {
  double bin_minutes = 30.0;
  std::vector<ReportBin> bins;  ///< ascending by bin_start_s
};

/// Aggregate a track-record stream into per-bin traffic statistics.
///
/// A track is reportable once any of its records is confirmed; it is counted
/// in the bin of its first confirmed timestamp (bins anchored at t = 0) under
/// its final class (last record's p_car). Car tracks additionally contribute
/// |mean confirmed velocity| (km/h) to their direction's mean, where positive
/// velocity means northbound.
[[nodiscard]] TrafficReport make_report(const std::vector<TrackRecord>& records,
                                        double bin_minutes = 30.0);

/// CSV export: header bin_start_s,car_count,train_count.
void save_report_counts(const TrafficReport& report, const std::filesystem::path& path);

/// CSV export: header bin_start_s,north_mean_kmh,south_mean_kmh; NaN means are
/// written as empty fields.
void save_report_velocities(const TrafficReport& report, const std::filesystem::path& path);

}  // namespace dastrack
