#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dastrack {

/// Raised when an on-disk artifact (strain file, CSV, JSON) is structurally invalid.
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when file content is structurally fine but the payload is unusable
/// (NaN/Inf cells, truncated data rows).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for invalid configuration values (bad grids, even smoothing spans, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a numeric operation is handed input outside its domain.
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a class-amplitude model cannot be fitted from the given data.
struct fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when hyperparameter tuning cannot produce a usable optimum.
struct tune_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised on filesystem-level failures (unreadable/unwritable paths).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Geometry and sampling metadata for a strain matrix.
///
/// `channel0_position` is the fibre distance (m) of channel 0; channel c sits at
/// channel0_position + c * channel_spacing. Sample s is at time t0 + s * sample_interval.
struct StrainMeta {
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  double channel_spacing = 1.02;   ///< metres between adjacent channels
  double channel0_position = 0.0;  ///< fibre distance of channel 0 (m)
  double sample_interval = 5e-4;   ///< seconds between samples
  double t0 = 0.0;                 ///< absolute time of sample 0 (s)
  bool is_log_rms = false;         ///< true once data is log-RMS rather than raw strain
  double gauge_length = 0.0;       ///< interrogator gauge length (m), informational
};

/// A time-major strain matrix: row s holds all channels at sample s.
///
/// Values are stored as float32 (matching the on-disk format exactly, so
/// save/load round-trips bit-identically); kernels accumulate in double.
struct StrainBatch {
  StrainMeta meta;
  std::vector<float> values;  ///< row-major, size n_samples * n_channels

  [[nodiscard]] float at(std::size_t sample, std::size_t channel) const {
    return values[sample * meta.n_channels + channel];
  }
  float& at(std::size_t sample, std::size_t channel) {
    return values[sample * meta.n_channels + channel];
  }
  [[nodiscard]] double time_at(std::size_t sample) const {
    return meta.t0 + static_cast<double>(sample) * meta.sample_interval;
  }
  [[nodiscard]] double position_at(std::size_t channel) const {
    return meta.channel0_position + static_cast<double>(channel) * meta.channel_spacing;
  }
  [[nodiscard]] double duration() const {
    return static_cast<double>(meta.n_samples) * meta.sample_interval;
  }

  /// Throws data_error if shape and value-vector size disagree or any cell is non-finite.
  void validate() const;
};

enum class ObjectClass { car, train };

enum class Direction { north, south };

[[nodiscard]] std::string to_string(ObjectClass c);
[[nodiscard]] std::string to_string(Direction d);

/// One manually logged passage at the reference site.
struct EventEntry {
  double time = 0.0;  ///< seconds, same clock as strain t0
  ObjectClass cls = ObjectClass::car;
  Direction direction = Direction::north;
  int count = 1;  ///< vehicles in this entry (>= 1)
};

/// Ordered-by-time list of logged passages.
using EventLog = std::vector<EventEntry>;

/// A detection produced by clustering threshold exceedances (or simulated directly).
struct Pick {
  double time = 0.0;           ///< cluster-mean time (s)
  double position = 0.0;       ///< cluster-mean fibre distance (m)
  double log_amplitude = 0.0;  ///< cluster-mean log-RMS amplitude
  int cluster_size = 1;        ///< number of member cells
};

enum class TrackStatus { holding, confirmed, deleted };

[[nodiscard]] std::string to_string(TrackStatus s);

/// One serialized tracker state snapshot (one JSONL line in track output).
struct TrackRecord {
  long long track_id = 0;
  double t = 0.0;
  double pos_mean = 0.0;
  double vel_mean = 0.0;
  double pos_var = 0.0;
  double vel_var = 0.0;
  double p_car = 0.5;
  TrackStatus status = TrackStatus::holding;
};

}  // namespace dastrack
