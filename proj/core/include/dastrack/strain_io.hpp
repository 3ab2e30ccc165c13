#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

/// Spatial sampling interval (m) of a DAS interrogator:
/// delta_tau * c / (2 * n_group), with delta_tau the pulse-delay increment (s),
/// n_group the fibre group refractive index and c the vacuum speed of light (m/s).
[[nodiscard]] double spatial_sampling_interval(double delta_tau_s, double n_group,
                                               double c_mps = 299'792'458.0);

/// Load a complete strain file (text header + float32 little-endian payload).
/// Throws format_error on malformed headers, data_error on truncated or
/// non-finite payloads (naming the first bad row/cell), io_error if unreadable.
[[nodiscard]] StrainBatch load_strain(const std::filesystem::path& path);

/// Write a strain file. Overwrites. Throws io_error on failure.
void save_strain(const StrainBatch& batch, const std::filesystem::path& path);

/// Streaming reader over a strain file: parses the header once, then serves
/// arbitrary sample windows without loading the whole payload.
class StrainFileReader {
 public:
  explicit StrainFileReader(const std::filesystem::path& path);

  [[nodiscard]] const StrainMeta& meta() const { return meta_; }

  /// Read samples [first, first + count) as a batch whose t0 is shifted accordingly.
  /// `count` is clamped to the end of the file; an empty window yields an empty batch.
  [[nodiscard]] StrainBatch read_window(std::size_t first, std::size_t count);

 private:
  std::ifstream stream_;
  StrainMeta meta_;
  std::streamoff payload_offset_ = 0;
};

/// Load a passage log CSV (`time,class,direction,count` with header).
/// Entries are sorted by time on return. Throws format_error with the
/// 1-based line number for unparseable rows or unknown labels.
[[nodiscard]] EventLog load_events(const std::filesystem::path& path);

/// Write a passage log CSV. Throws io_error on failure.
void save_events(const EventLog& events, const std::filesystem::path& path);

/// One pick CSV row: the pick plus the cluster id it came from
/// (ids are file-scoped; simulated picks use the source object id, -1 for clutter).
struct PickRow {
  Pick pick;
  long long cluster_id = 0;
};

/// Write picks as CSV (`time_s,position_m,log_amplitude,cluster_id` with header).
void save_picks(const std::vector<PickRow>& rows, const std::filesystem::path& path);

/// Load a pick CSV. Throws format_error with line numbers on malformed rows.
[[nodiscard]] std::vector<PickRow> load_picks(const std::filesystem::path& path);

/// Append-style writer for track state records as JSON Lines.
void save_track_records(const std::vector<TrackRecord>& records,
                        const std::filesystem::path& path);

/// Load a track-record JSONL file. Throws format_error with line numbers.
[[nodiscard]] std::vector<TrackRecord> load_track_records(const std::filesystem::path& path);

}  // namespace dastrack
