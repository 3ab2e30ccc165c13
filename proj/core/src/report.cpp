#include "dastrack/report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

namespace dastrack {

namespace {

std::string fmt_double(double v) {
  std::array<char, 40> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

}  // namespace

TrafficReport make_report(const std::vector<TrackRecord>& records, double bin_minutes) {
  if (!(bin_minutes > 0)) throw config_error("bin_minutes must be positive");
  const double bin_s = bin_minutes * 60.0;

  struct TrackInfo {
    bool confirmed = false;
    double confirm_time = 0.0;
    double vel_sum = 0.0;
    std::size_t vel_n = 0;
    double last_t = -std::numeric_limits<double>::infinity();
    double last_p_car = 0.5;
  };
  std::map<long long, TrackInfo> infos;
  for (const TrackRecord& r : records) {
    TrackInfo& info = infos[r.track_id];
    if (r.status == TrackStatus::confirmed) {
      if (!info.confirmed || r.t < info.confirm_time) info.confirm_time = r.t;
      info.confirmed = true;
      info.vel_sum += r.vel_mean;
      ++info.vel_n;
    }
    if (r.t >= info.last_t) {
      info.last_t = r.t;
      info.last_p_car = r.p_car;
    }
  }

  struct BinAccum {
    std::size_t car_count = 0;
    std::size_t train_count = 0;
    double north_sum = 0.0;
    std::size_t north_n = 0;
    double south_sum = 0.0;
    std::size_t south_n = 0;
  };
  std::map<long long, BinAccum> bins;
  for (const auto& [id, info] : infos) {
    if (!info.confirmed) continue;
    BinAccum& bin = bins[static_cast<long long>(std::floor(info.confirm_time / bin_s))];
    const bool is_car = info.last_p_car > 0.5;
    if (is_car) {
      ++bin.car_count;
      const double vel = info.vel_sum / static_cast<double>(info.vel_n);
      const double speed_kmh = std::abs(vel) * 3.6;
      if (vel >= 0) {
        bin.north_sum += speed_kmh;
        ++bin.north_n;
      } else {
        bin.south_sum += speed_kmh;
        ++bin.south_n;
      }
    } else {
      ++bin.train_count;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrafficReport report;
  report.bin_minutes = bin_minutes;
  for (const auto& [index, accum] : bins) {
    ReportBin bin;
    bin.bin_start_s = static_cast<double>(index) * bin_s;
    bin.car_count = accum.car_count;
    bin.train_count = accum.train_count;
    bin.north_mean_kmh =
        accum.north_n == 0 ? nan : accum.north_sum / static_cast<double>(accum.north_n);
    bin.south_mean_kmh =
        accum.south_n == 0 ? nan : accum.south_sum / static_cast<double>(accum.south_n);
    report.bins.push_back(bin);
  }
  return report;
}

void save_report_counts(const TrafficReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "bin_start_s,car_count,train_count\n";
  for (const ReportBin& bin : report.bins) {
    out << fmt_double(bin.bin_start_s) << ',' << bin.car_count << ',' << bin.train_count << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

void save_report_velocities(const TrafficReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "bin_start_s,north_mean_kmh,south_mean_kmh\n";
  for (const ReportBin& bin : report.bins) {
    out << fmt_double(bin.bin_start_s) << ',';
    if (std::isfinite(bin.north_mean_kmh)) out << fmt_double(bin.north_mean_kmh);
    out << ',';
    if (std::isfinite(bin.south_mean_kmh)) out << fmt_double(bin.south_mean_kmh);
    out << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace dastrack
