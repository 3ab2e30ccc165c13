#include "dastrack/strain_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dastrack {

namespace {

constexpr const char* k_magic = "dastrain 1";
constexpr const char* k_header_end = "data";

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(what + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text, const std::string& what) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(what + ": cannot parse integer '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

/// Reads the text header of a strain file, leaving the stream at the payload.
StrainMeta read_header(std::ifstream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != k_magic) {
    throw format_error(path.string() + ": missing '" + k_magic + "' signature");
  }
  StrainMeta meta;
  bool seen[8] = {};
  const char* keys[8] = {"n_channels",      "n_samples", "channel_spacing",
                         "channel0_position", "sample_interval", "t0",
                         "is_log_rms",      "gauge_length"};
  while (std::getline(in, line)) {
    std::string_view sv = trim(line);
    if (sv == k_header_end) {
      for (int i = 0; i < 8; ++i) {
        if (!seen[i]) {
          throw format_error(path.string() + ": header is missing key '" + keys[i] + "'");
        }
      }
      if (meta.channel_spacing <= 0 || meta.sample_interval <= 0 || meta.n_channels == 0) {
        throw format_error(path.string() + ": non-positive geometry in header");
      }
      return meta;
    }
    std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw format_error(path.string() + ": malformed header line '" + std::string(sv) + "'");
    }
    std::string_view key = trim(sv.substr(0, eq));
    std::string_view val = trim(sv.substr(eq + 1));
    auto where = [&](const char* k) { return path.string() + ": header key " + k; };
    if (key == "n_channels") {
      meta.n_channels = static_cast<std::size_t>(parse_int(val, where("n_channels")));
      seen[0] = true;
    } else if (key == "n_samples") {
      meta.n_samples = static_cast<std::size_t>(parse_int(val, where("n_samples")));
      seen[1] = true;
    } else if (key == "channel_spacing") {
      meta.channel_spacing = parse_double(val, where("channel_spacing"));
      seen[2] = true;
    } else if (key == "channel0_position") {
      meta.channel0_position = parse_double(val, where("channel0_position"));
      seen[3] = true;
    } else if (key == "sample_interval") {
      meta.sample_interval = parse_double(val, where("sample_interval"));
      seen[4] = true;
    } else if (key == "t0") {
      meta.t0 = parse_double(val, where("t0"));
      seen[5] = true;
    } else if (key == "is_log_rms") {
      long long b = parse_int(val, where("is_log_rms"));
      if (b != 0 && b != 1) throw format_error(path.string() + ": is_log_rms must be 0 or 1");
      meta.is_log_rms = b == 1;
      seen[6] = true;
    } else if (key == "gauge_length") {
      meta.gauge_length = parse_double(val, where("gauge_length"));
      seen[7] = true;
    } else {
      throw format_error(path.string() + ": unknown header key '" + std::string(key) + "'");
    }
  }
  throw format_error(path.string() + ": header not terminated by '" + k_header_end + "' line");
}

float float_from_le(const unsigned char* bytes) {
  std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) |
                    static_cast<std::uint32_t>(bytes[1]) << 8 |
                    static_cast<std::uint32_t>(bytes[2]) << 16 |
                    static_cast<std::uint32_t>(bytes[3]) << 24;
  return std::bit_cast<float>(u);
}

void float_to_le(float f, unsigned char* bytes) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  bytes[0] = static_cast<unsigned char>(u & 0xff);
  bytes[1] = static_cast<unsigned char>((u >> 8) & 0xff);
  bytes[2] = static_cast<unsigned char>((u >> 16) & 0xff);
  bytes[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

}  // namespace

void StrainBatch::validate() const {
  if (values.size() != meta.n_samples * meta.n_channels) {
    throw data_error("strain batch shape mismatch: " + std::to_string(values.size()) +
                     " values for " + std::to_string(meta.n_samples) + "x" +
                     std::to_string(meta.n_channels));
  }
  for (std::size_t s = 0; s < meta.n_samples; ++s) {
    for (std::size_t c = 0; c < meta.n_channels; ++c) {
      if (!std::isfinite(at(s, c))) {
        throw data_error("non-finite strain value at row " + std::to_string(s) + ", col " +
                         std::to_string(c));
      }
    }
  }
}

std::string to_string(ObjectClass c) { return c == ObjectClass::car ? "car" : "train"; }

std::string to_string(Direction d) { return d == Direction::north ? "north" : "south"; }

std::string to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::holding: return "holding";
    case TrackStatus::confirmed: return "confirmed";
    case TrackStatus::deleted: return "deleted";
  }
  return "holding";
}

double spatial_sampling_interval(double delta_tau_s, double n_group, double c_mps) {
  if (delta_tau_s <= 0 || n_group <= 0 || c_mps <= 0) {
    throw domain_error("spatial_sampling_interval: all arguments must be positive");
  }
  return delta_tau_s * c_mps / (2.0 * n_group);
}

StrainFileReader::StrainFileReader(const std::filesystem::path& path)
    : stream_(path, std::ios::binary) {
  if (!stream_) throw io_error("cannot open strain file " + path.string());
  meta_ = read_header(stream_, path);
  payload_offset_ = stream_.tellg();

  stream_.seekg(0, std::ios::end);
  const std::streamoff file_end = stream_.tellg();
  const std::size_t payload_bytes = static_cast<std::size_t>(file_end - payload_offset_);
  const std::size_t expected = meta_.n_samples * meta_.n_channels * 4;
  if (payload_bytes < expected) {
    const std::size_t first_bad_row = payload_bytes / (meta_.n_channels * 4);
    throw data_error(path.string() + ": payload truncated, first incomplete row " +
                     std::to_string(first_bad_row));
  }
  if (payload_bytes > expected) {
    throw data_error(path.string() + ": payload has " + std::to_string(payload_bytes - expected) +
                     " bytes beyond the declared " + std::to_string(meta_.n_samples) + " rows");
  }
}

StrainBatch StrainFileReader::read_window(std::size_t first, std::size_t count) {
  StrainBatch batch;
  batch.meta = meta_;
  if (first >= meta_.n_samples) {
    batch.meta.n_samples = 0;
    batch.meta.t0 = meta_.t0 + static_cast<double>(first) * meta_.sample_interval;
    return batch;
  }
  count = std::min(count, meta_.n_samples - first);
  batch.meta.n_samples = count;
  batch.meta.t0 = meta_.t0 + static_cast<double>(first) * meta_.sample_interval;
  batch.values.resize(count * meta_.n_channels);

  const std::size_t row_bytes = meta_.n_channels * 4;
  std::vector<unsigned char> buf(row_bytes);
  stream_.clear();
  stream_.seekg(payload_offset_ + static_cast<std::streamoff>(first * row_bytes));
  for (std::size_t s = 0; s < count; ++s) {
    if (!stream_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(row_bytes))) {
      throw io_error("read failure at strain row " + std::to_string(first + s));
    }
    for (std::size_t c = 0; c < meta_.n_channels; ++c) {
      const float v = float_from_le(buf.data() + c * 4);
      if (!std::isfinite(v)) {
        throw data_error("non-finite strain value at row " + std::to_string(first + s) +
                         ", col " + std::to_string(c));
      }
      batch.values[s * meta_.n_channels + c] = v;
    }
  }
  return batch;
}

StrainBatch load_strain(const std::filesystem::path& path) {
  StrainFileReader reader(path);
  return reader.read_window(0, reader.meta().n_samples);
}

void save_strain(const StrainBatch& batch, const std::filesystem::path& path) {
  batch.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << k_magic << '\n';
  out << "n_channels=" << batch.meta.n_channels << '\n';
  out << "n_samples=" << batch.meta.n_samples << '\n';
  out << "channel_spacing=" << fmt_double(batch.meta.channel_spacing) << '\n';
  out << "channel0_position=" << fmt_double(batch.meta.channel0_position) << '\n';
  out << "sample_interval=" << fmt_double(batch.meta.sample_interval) << '\n';
  out << "t0=" << fmt_double(batch.meta.t0) << '\n';
  out << "is_log_rms=" << (batch.meta.is_log_rms ? 1 : 0) << '\n';
  out << "gauge_length=" << fmt_double(batch.meta.gauge_length) << '\n';
  out << k_header_end << '\n';

  std::vector<unsigned char> buf(batch.meta.n_channels * 4);
  for (std::size_t s = 0; s < batch.meta.n_samples; ++s) {
    for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
      float_to_le(batch.at(s, c), buf.data() + c * 4);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw io_error("write failure on " + path.string());
}

EventLog load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open event log " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time,class,direction,count") {
    throw format_error(path.string() + ": expected header 'time,class,direction,count'");
  }
  EventLog events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw format_error(where + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    EventEntry e;
    e.time = parse_double(trim(fields[0]), where);
    const std::string cls = lower(trim(fields[1]));
    if (cls == "car") {
      e.cls = ObjectClass::car;
    } else if (cls == "train") {
      e.cls = ObjectClass::train;
    } else {
      throw format_error(where + ": unknown class '" + cls + "'");
    }
    const std::string dir = lower(trim(fields[2]));
    if (dir == "north") {
      e.direction = Direction::north;
    } else if (dir == "south") {
      e.direction = Direction::south;
    } else {
      throw format_error(where + ": unknown direction '" + dir + "'");
    }
    const long long count = parse_int(trim(fields[3]), where);
    if (count < 1) throw format_error(where + ": count must be >= 1");
    e.count = static_cast<int>(count);
    events.push_back(e);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const EventEntry& a, const EventEntry& b) { return a.time < b.time; });
  return events;
}

void save_events(const EventLog& events, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "time,class,direction,count\n";
  for (const EventEntry& e : events) {
    out << fmt_double(e.time) << ',' << to_string(e.cls) << ',' << to_string(e.direction) << ','
        << e.count << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

void save_picks(const std::vector<PickRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "time_s,position_m,log_amplitude,cluster_id\n";
  for (const PickRow& r : rows) {
    out << fmt_double(r.pick.time) << ',' << fmt_double(r.pick.position) << ','
        << fmt_double(r.pick.log_amplitude) << ',' << r.cluster_id << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

std::vector<PickRow> load_picks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open pick file " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time_s,position_m,log_amplitude,cluster_id") {
    throw format_error(path.string() +
                       ": expected header 'time_s,position_m,log_amplitude,cluster_id'");
  }
  std::vector<PickRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw format_error(where + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    PickRow r;
    r.pick.time = parse_double(trim(fields[0]), where);
    r.pick.position = parse_double(trim(fields[1]), where);
    r.pick.log_amplitude = parse_double(trim(fields[2]), where);
    r.cluster_id = parse_int(trim(fields[3]), where);
    if (!std::isfinite(r.pick.time) || !std::isfinite(r.pick.position) ||
        !std::isfinite(r.pick.log_amplitude)) {
      throw data_error(where + ": non-finite pick value");
    }
    rows.push_back(r);
  }
  return rows;
}

void save_track_records(const std::vector<TrackRecord>& records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  for (const TrackRecord& r : records) {
    nlohmann::json j{{"track_id", r.track_id}, {"t", r.t},
                     {"pos_mean", r.pos_mean},  {"vel_mean", r.vel_mean},
                     {"pos_var", r.pos_var},    {"vel_var", r.vel_var},
                     {"p_car", r.p_car},        {"status", to_string(r.status)}};
    out << j.dump() << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

std::vector<TrackRecord> load_track_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open track file " + path.string());
  std::vector<TrackRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw format_error(where + ": invalid JSON object");
    try {
      TrackRecord r;
      r.track_id = j.at("track_id").get<long long>();
      r.t = j.at("t").get<double>();
      r.pos_mean = j.at("pos_mean").get<double>();
      r.vel_mean = j.at("vel_mean").get<double>();
      r.pos_var = j.at("pos_var").get<double>();
      r.vel_var = j.at("vel_var").get<double>();
      r.p_car = j.at("p_car").get<double>();
      const std::string status = j.at("status").get<std::string>();
      if (status == "holding") {
        r.status = TrackStatus::holding;
      } else if (status == "confirmed") {
        r.status = TrackStatus::confirmed;
      } else if (status == "deleted") {
        r.status = TrackStatus::deleted;
      } else {
        throw format_error(where + ": unknown status '" + status + "'");
      }
      records.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw format_error(where + ": " + e.what());
    }
  }
  return records;
}

}  // namespace dastrack
