#include "dastrack/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dastrack {

namespace {

constexpr double k_pi = 3.141592653589793238462643383279502884;
constexpr std::uint32_t k_salt_truth = 0x54525554u;
constexpr std::uint32_t k_salt_picks = 0x5049434bu;
constexpr std::uint32_t k_salt_field = 0x46494c44u;

std::string fmt_double(double v) {
  std::array<char, 40> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

double parse_double_field(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(context + ": bad numeric field '" + s + "'");
  }
  return v;
}

long long parse_int_field(const std::string& s, const std::string& context) {
  long long v = 0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(context + ": bad integer field '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

namespace rng {

Engine::Engine(std::uint64_t seed, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), salt};
  gen_.seed(seq);
}

double Engine::uniform01() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Engine::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * k_pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Engine::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

int Engine::poisson(double lambda) {
  if (!(lambda >= 0)) throw domain_error("poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  int k = 0;
  double log_product = 0.0;
  do {
    ++k;
    log_product += std::log(1.0 - uniform01());
  } while (log_product > -lambda);
  return k - 1;
}

}  // namespace rng

void Scenario::validate() const {
  if (!(duration > 0)) throw config_error("scenario duration must be positive");
  if (!(dt > 0)) throw config_error("scenario dt must be positive");
  if (!(fov_low < fov_high)) throw config_error("scenario fov_low must be below fov_high");
  if (!(p_detect > 0) || !(p_detect <= 1)) {
    throw config_error("scenario p_detect must lie in (0, 1]");
  }
  if (!(clutter_density >= 0)) throw config_error("scenario clutter_density must be >= 0");
  if (!(sigma_q2 >= 0)) throw config_error("scenario sigma_q2 must be >= 0");
  if (!(sigma_r2 > 0)) throw config_error("scenario sigma_r2 must be positive");
  for (const AmplitudeModel& m : {car_amp, train_amp, clutter_amp}) {
    if (!std::isfinite(m.mean) || !(m.var > 0)) {
      throw config_error("scenario amplitude models need finite means and positive variances");
    }
  }
  for (const ObjectSpec& o : objects) {
    if (!(o.speed > 0)) throw config_error("scenario object speeds must be positive");
    if (o.birth_time < 0 || o.birth_time > duration) {
      throw config_error("scenario object birth times must lie within [0, duration]");
    }
    if (o.amplitude && !std::isfinite(*o.amplitude)) {
      throw config_error("scenario object amplitude override must be finite");
    }
  }
  if (!(field.channel_spacing > 0)) throw config_error("field channel_spacing must be positive");
  if (!(field.blob_width_channels > 0) || !(field.blob_duration > 0)) {
    throw config_error("field blob widths must be positive");
  }
  if (!(field.noise_sigma >= 0)) throw config_error("field noise_sigma must be >= 0");
  if (!(field.margin >= 0)) throw config_error("field margin must be >= 0");
  for (const Decoy& d : field.decoys) {
    if (!std::isfinite(d.time) || !std::isfinite(d.position) || !std::isfinite(d.amplitude)) {
      throw config_error("field decoys must be finite");
    }
  }
}

Direction TrueObject::direction() const {
  if (!states.empty() && states.front().velocity < 0) return Direction::south;
  return Direction::north;
}

GroundTruth make_ground_truth(const Scenario& scn) {
  scn.validate();
  rng::Engine eng(scn.seed, k_salt_truth);

  GroundTruth truth;
  truth.t0 = 0.0;
  truth.dt = scn.dt;
  truth.n_steps = static_cast<std::size_t>(std::llround(scn.duration / scn.dt)) + 1;

  // Cholesky factor of Q(sigma_q2) for process-noise sampling.
  const double dt = scn.dt;
  const double sq = std::sqrt(scn.sigma_q2);
  const double l11 = sq * std::sqrt(dt * dt * dt / 3.0);
  const double l21 = l11 > 0 ? sq * sq * (dt * dt / 2.0) / l11 : 0.0;
  const double l22 = sq * std::sqrt(dt) / 2.0;

  for (std::size_t idx = 0; idx < scn.objects.size(); ++idx) {
    const ObjectSpec& spec = scn.objects[idx];
    TrueObject obj;
    obj.object_id = static_cast<int>(idx) + 1;
    obj.cls = spec.cls;

    const std::size_t k0 =
        std::min(static_cast<std::size_t>(std::llround(spec.birth_time / dt)), truth.n_steps - 1);
    double pos = spec.entry == EntrySide::low ? scn.fov_low : scn.fov_high;
    double vel = spec.entry == EntrySide::low ? spec.speed : -spec.speed;
    for (std::size_t k = k0; k < truth.n_steps; ++k) {
      if (pos < scn.fov_low || pos > scn.fov_high) break;
      obj.states.push_back({truth.t0 + static_cast<double>(k) * dt, pos, vel});
      double q1 = 0.0;
      double q2 = 0.0;
      if (scn.sigma_q2 > 0) {
        const double n1 = eng.normal();
        const double n2 = eng.normal();
        q1 = l11 * n1;
        q2 = l21 * n1 + l22 * n2;
      }
      pos += dt * vel + q1;
      vel += q2;
    }
    truth.objects.push_back(std::move(obj));
  }
  return truth;
}

std::vector<Pick> PickSimulation::flatten() const {
  std::vector<Pick> out;
  for (const std::vector<SimulatedPick>& step : picks_per_step) {
    for (const SimulatedPick& sp : step) out.push_back(sp.pick);
  }
  return out;
}

PickSimulation simulate_picks(const Scenario& scn) {
  PickSimulation sim;
  sim.truth = make_ground_truth(scn);
  sim.picks_per_step.resize(sim.truth.n_steps);

  rng::Engine eng(scn.seed, k_salt_picks);
  const double width = scn.fov_high - scn.fov_low;
  const double meas_sd = std::sqrt(scn.sigma_r2);

  // First step index of each object, for alive lookups.
  std::vector<std::size_t> first_step(sim.truth.objects.size(), 0);
  for (std::size_t i = 0; i < sim.truth.objects.size(); ++i) {
    const TrueObject& obj = sim.truth.objects[i];
    first_step[i] = obj.states.empty()
                        ? sim.truth.n_steps
                        : static_cast<std::size_t>(
                              std::llround((obj.states.front().t - sim.truth.t0) / scn.dt));
  }

  for (std::size_t k = 0; k < sim.truth.n_steps; ++k) {
    const double t = sim.truth.t0 + static_cast<double>(k) * scn.dt;
    for (std::size_t i = 0; i < sim.truth.objects.size(); ++i) {
      const TrueObject& obj = sim.truth.objects[i];
      if (k < first_step[i] || k - first_step[i] >= obj.states.size()) continue;
      const TrueState& state = obj.states[k - first_step[i]];
      if (eng.uniform01() >= scn.p_detect) continue;
      const ObjectSpec& spec = scn.objects[i];
      const AmplitudeModel& amp_model = spec.cls == ObjectClass::car ? scn.car_amp : scn.train_amp;
      const double amp_mean = spec.amplitude.value_or(amp_model.mean);
      Pick pick;
      pick.time = t;
      pick.position = state.position + eng.normal(0.0, meas_sd);
      pick.log_amplitude = eng.normal(amp_mean, std::sqrt(amp_model.var));
      pick.cluster_size = 1;
      sim.picks_per_step[k].push_back({pick, obj.object_id});
    }
    const int n_clutter = eng.poisson(scn.clutter_density * width);
    for (int j = 0; j < n_clutter; ++j) {
      Pick pick;
      pick.time = t;
      pick.position = scn.fov_low + eng.uniform01() * width;
      pick.log_amplitude = eng.normal(scn.clutter_amp.mean, std::sqrt(scn.clutter_amp.var));
      pick.cluster_size = 1;
      sim.picks_per_step[k].push_back({pick, -1});
    }
  }
  return sim;
}

StrainBatch simulate_field(const Scenario& scn) {
  const GroundTruth truth = make_ground_truth(scn);
  rng::Engine eng(scn.seed, k_salt_field);

  StrainBatch batch;
  batch.meta.channel_spacing = scn.field.channel_spacing;
  batch.meta.channel0_position = scn.fov_low - scn.field.margin;
  batch.meta.n_channels =
      static_cast<std::size_t>(std::floor((scn.fov_high + scn.field.margin -
                                           batch.meta.channel0_position) /
                                          scn.field.channel_spacing)) +
      1;
  batch.meta.n_samples = truth.n_steps;
  batch.meta.sample_interval = scn.dt;
  batch.meta.t0 = truth.t0;
  batch.meta.is_log_rms = true;
  batch.meta.gauge_length = 0.0;

  const std::size_t nc = batch.meta.n_channels;
  const std::size_t ns = batch.meta.n_samples;
  batch.values.resize(ns * nc);
  for (float& v : batch.values) {
    v = static_cast<float>(scn.field.noise_floor + scn.field.noise_sigma * eng.normal());
  }

  std::vector<float> bumps(ns * nc, 0.0f);
  const double w_c = scn.field.blob_width_channels;
  const double w_s = scn.field.blob_duration / scn.dt;  // sigma in samples
  auto deposit = [&](double time, double position, double amplitude) {
    const double peak = amplitude - scn.field.noise_floor;
    if (!(peak > 0)) return;
    const double c_center = (position - batch.meta.channel0_position) / scn.field.channel_spacing;
    const double s_center = (time - batch.meta.t0) / scn.dt;
    const long long c_lo = std::max(0LL, static_cast<long long>(std::ceil(c_center - 5.0 * w_c)));
    const long long c_hi = std::min(static_cast<long long>(nc) - 1,
                                    static_cast<long long>(std::floor(c_center + 5.0 * w_c)));
    const long long s_lo = std::max(0LL, static_cast<long long>(std::ceil(s_center - 5.0 * w_s)));
    const long long s_hi = std::min(static_cast<long long>(ns) - 1,
                                    static_cast<long long>(std::floor(s_center + 5.0 * w_s)));
    for (long long s = s_lo; s <= s_hi; ++s) {
      const double ds = (static_cast<double>(s) - s_center) / w_s;
      for (long long c = c_lo; c <= c_hi; ++c) {
        const double dc = (static_cast<double>(c) - c_center) / w_c;
        const float b = static_cast<float>(peak * std::exp(-0.5 * (dc * dc + ds * ds)));
        float& cell = bumps[static_cast<std::size_t>(s) * nc + static_cast<std::size_t>(c)];
        cell = std::max(cell, b);
      }
    }
  };

  for (std::size_t i = 0; i < truth.objects.size(); ++i) {
    const ObjectSpec& spec = scn.objects[i];
    const double amp = spec.amplitude.value_or(
        spec.cls == ObjectClass::car ? scn.car_amp.mean : scn.train_amp.mean);
    for (const TrueState& state : truth.objects[i].states) {
      deposit(state.t, state.position, amp);
    }
  }
  for (const Decoy& d : scn.field.decoys) deposit(d.time, d.position, d.amplitude);

  for (std::size_t i = 0; i < batch.values.size(); ++i) batch.values[i] += bumps[i];
  return batch;
}

namespace {

/// Nearest true state of `obj` to time t, if within half a step.
const TrueState* nearest_state(const TrueObject& obj, double t, double half_step) {
  if (obj.states.empty()) return nullptr;
  const auto it = std::lower_bound(
      obj.states.begin(), obj.states.end(), t,
      [](const TrueState& s, double value) { return s.t < value; });
  const TrueState* best = nullptr;
  double best_gap = half_step + 1e-9;
  if (it != obj.states.end() && std::abs(it->t - t) <= best_gap) {
    best = &*it;
    best_gap = std::abs(it->t - t);
  }
  if (it != obj.states.begin()) {
    const TrueState* prev = &*(it - 1);
    if (std::abs(prev->t - t) < best_gap) best = prev;
  }
  return best;
}

}  // namespace

TrackingMetrics score_tracking(const GroundTruth& truth, const std::vector<TrackRecord>& records,
                               double match_distance) {
  struct Series {
    std::vector<double> t;
    std::vector<double> pos;
    std::vector<double> vel;
    double last_p_car = 0.5;
    bool confirmed = false;
  };
  std::map<long long, Series> tracks;
  for (const TrackRecord& r : records) {
    Series& s = tracks[r.track_id];
    s.last_p_car = r.p_car;
    if (r.status == TrackStatus::confirmed) {
      s.confirmed = true;
      s.t.push_back(r.t);
      s.pos.push_back(r.pos_mean);
      s.vel.push_back(r.vel_mean);
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrackingMetrics m;
  m.true_count = truth.objects.size();
  std::vector<const Series*> confirmed;
  for (const auto& [id, s] : tracks) {
    if (s.confirmed) confirmed.push_back(&s);
  }
  m.confirmed_count = confirmed.size();

  // Mean absolute gap of every (confirmed track, object) pair over overlap.
  struct PairGap {
    double gap;
    std::size_t track;
    std::size_t object;
  };
  const double half_step = truth.dt / 2.0;
  std::vector<PairGap> pairs;
  for (std::size_t i = 0; i < confirmed.size(); ++i) {
    for (std::size_t j = 0; j < truth.objects.size(); ++j) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < confirmed[i]->t.size(); ++k) {
        const TrueState* s = nearest_state(truth.objects[j], confirmed[i]->t[k], half_step);
        if (s == nullptr) continue;
        sum += std::abs(confirmed[i]->pos[k] - s->position);
        ++count;
      }
      if (count > 0) pairs.push_back({sum / static_cast<double>(count), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const PairGap& a, const PairGap& b) { return a.gap < b.gap; });

  std::vector<char> track_used(confirmed.size(), 0);
  std::vector<char> object_used(truth.objects.size(), 0);
  std::size_t correct = 0;
  double sq_sum = 0.0;
  std::size_t sq_count = 0;
  double vel_err_sum = 0.0;
  std::vector<double> track_speed_north, true_speed_north;
  std::vector<double> track_speed_south, true_speed_south;

  for (const PairGap& pg : pairs) {
    if (pg.gap > match_distance) break;
    if (track_used[pg.track] || object_used[pg.object]) continue;
    track_used[pg.track] = 1;
    object_used[pg.object] = 1;
    ++m.matched_count;

    const Series& s = *confirmed[pg.track];
    const TrueObject& obj = truth.objects[pg.object];

    const ObjectClass predicted = s.last_p_car > 0.5 ? ObjectClass::car : ObjectClass::train;
    if (predicted == obj.cls) ++correct;

    double track_vel = 0.0;
    for (double v : s.vel) track_vel += v;
    track_vel /= static_cast<double>(s.vel.size());

    double true_vel = 0.0;
    std::size_t overlap = 0;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      const TrueState* st = nearest_state(obj, s.t[k], half_step);
      if (st == nullptr) continue;
      sq_sum += (s.pos[k] - st->position) * (s.pos[k] - st->position);
      ++sq_count;
      true_vel += st->velocity;
      ++overlap;
    }
    true_vel /= static_cast<double>(overlap);

    vel_err_sum += std::abs(track_vel - true_vel);
    if (obj.direction() == Direction::north) {
      track_speed_north.push_back(std::abs(track_vel));
      true_speed_north.push_back(std::abs(true_vel));
    } else {
      track_speed_south.push_back(std::abs(track_vel));
      true_speed_south.push_back(std::abs(true_vel));
    }
  }

  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };

  m.north_pairs = track_speed_north.size();
  m.south_pairs = track_speed_south.size();
  if (m.matched_count == 0) {
    m.class_accuracy = nan;
    m.position_rmse = nan;
    m.velocity_mean_error = nan;
  } else {
    m.class_accuracy = static_cast<double>(correct) / static_cast<double>(m.matched_count);
    m.position_rmse = std::sqrt(sq_sum / static_cast<double>(sq_count));
    m.velocity_mean_error = vel_err_sum / static_cast<double>(m.matched_count);
  }
  m.mean_speed_error_north =
      m.north_pairs == 0 ? nan : std::abs(mean_of(track_speed_north) - mean_of(true_speed_north));
  m.mean_speed_error_south =
      m.south_pairs == 0 ? nan : std::abs(mean_of(track_speed_south) - mean_of(true_speed_south));
  return m;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "object_id,t,position_m,velocity_mps,class\n";
  for (const TrueObject& obj : truth.objects) {
    for (const TrueState& s : obj.states) {
      out << obj.object_id << ',' << fmt_double(s.t) << ',' << fmt_double(s.position) << ','
          << fmt_double(s.velocity) << ',' << to_string(obj.cls) << '\n';
    }
  }
  if (!out) throw io_error("write failure on " + path.string());
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open ground truth " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw format_error(path.string() + ": empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"object_id", "t", "position_m", "velocity_mps", "class"}) {
    throw format_error(path.string() + ": bad header '" + line + "'");
  }

  std::map<long long, TrueObject> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 5) throw format_error(context + ": expected 5 fields");
    const long long id = parse_int_field(f[0], context);
    TrueObject& obj = by_id[id];
    obj.object_id = static_cast<int>(id);
    ObjectClass cls;
    if (f[4] == "car") {
      cls = ObjectClass::car;
    } else if (f[4] == "train") {
      cls = ObjectClass::train;
    } else {
      throw format_error(context + ": unknown class '" + f[4] + "'");
    }
    obj.cls = cls;
    obj.states.push_back(
        {parse_double_field(f[1], context), parse_double_field(f[2], context),
         parse_double_field(f[3], context)});
  }

  GroundTruth truth;
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  double dt_min = std::numeric_limits<double>::infinity();
  for (auto& [id, obj] : by_id) {
    std::sort(obj.states.begin(), obj.states.end(),
              [](const TrueState& a, const TrueState& b) { return a.t < b.t; });
    for (std::size_t k = 0; k < obj.states.size(); ++k) {
      t_min = std::min(t_min, obj.states[k].t);
      t_max = std::max(t_max, obj.states[k].t);
      if (k > 0) {
        const double gap = obj.states[k].t - obj.states[k - 1].t;
        if (gap > 0) dt_min = std::min(dt_min, gap);
      }
    }
    truth.objects.push_back(std::move(obj));
  }
  truth.dt = std::isfinite(dt_min) ? dt_min : 0.2;
  truth.t0 = std::isfinite(t_min) ? t_min : 0.0;
  truth.n_steps = std::isfinite(t_max)
                      ? static_cast<std::size_t>(std::llround((t_max - truth.t0) / truth.dt)) + 1
                      : 0;
  return truth;
}

namespace {

ObjectClass parse_class_label(const std::string& s, const std::string& context) {
  if (s == "car") return ObjectClass::car;
  if (s == "train") return ObjectClass::train;
  throw format_error(context + ": unknown class '" + s + "'");
}

ObjectSpec parse_object_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw format_error("scenario objects entries must be JSON objects");
  ObjectSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "birth_time") {
      spec.birth_time = value.get<double>();
    } else if (key == "entry") {
      const std::string s = value.get<std::string>();
      if (s == "low") {
        spec.entry = EntrySide::low;
      } else if (s == "high") {
        spec.entry = EntrySide::high;
      } else {
        throw format_error("scenario object entry must be 'low' or 'high', got '" + s + "'");
      }
    } else if (key == "speed") {
      spec.speed = value.get<double>();
    } else if (key == "class") {
      spec.cls = parse_class_label(value.get<std::string>(), "scenario object");
    } else if (key == "amplitude") {
      spec.amplitude = value.get<double>();
    } else {
      throw format_error("scenario object: unknown key '" + key + "'");
    }
  }
  return spec;
}

FieldParams parse_field_params(const nlohmann::json& j) {
  if (!j.is_object()) throw format_error("scenario field must be a JSON object");
  FieldParams field;
  for (const auto& [key, value] : j.items()) {
    if (key == "channel_spacing") {
      field.channel_spacing = value.get<double>();
    } else if (key == "blob_width_channels") {
      field.blob_width_channels = value.get<double>();
    } else if (key == "blob_duration") {
      field.blob_duration = value.get<double>();
    } else if (key == "noise_floor") {
      field.noise_floor = value.get<double>();
    } else if (key == "noise_sigma") {
      field.noise_sigma = value.get<double>();
    } else if (key == "margin") {
      field.margin = value.get<double>();
    } else if (key == "decoys") {
      if (!value.is_array()) throw format_error("field decoys must be an array");
      for (const nlohmann::json& dj : value) {
        if (!dj.is_object()) throw format_error("field decoys entries must be JSON objects");
        Decoy d;
        for (const auto& [dkey, dvalue] : dj.items()) {
          if (dkey == "time") {
            d.time = dvalue.get<double>();
          } else if (dkey == "position") {
            d.position = dvalue.get<double>();
          } else if (dkey == "amplitude") {
            d.amplitude = dvalue.get<double>();
          } else {
            throw format_error("field decoy: unknown key '" + dkey + "'");
          }
        }
        field.decoys.push_back(d);
      }
    } else {
      throw format_error("scenario field: unknown key '" + key + "'");
    }
  }
  return field;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw format_error("scenario: invalid JSON object");
  Scenario scn;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") {
        scn.seed = value.get<std::uint64_t>();
      } else if (key == "duration") {
        scn.duration = value.get<double>();
      } else if (key == "dt") {
        scn.dt = value.get<double>();
      } else if (key == "fov_low") {
        scn.fov_low = value.get<double>();
      } else if (key == "fov_high") {
        scn.fov_high = value.get<double>();
      } else if (key == "p_detect") {
        scn.p_detect = value.get<double>();
      } else if (key == "clutter_density") {
        scn.clutter_density = value.get<double>();
      } else if (key == "sigma_q2") {
        scn.sigma_q2 = value.get<double>();
      } else if (key == "sigma_r2") {
        scn.sigma_r2 = value.get<double>();
      } else if (key == "car_amp_mean") {
        scn.car_amp.mean = value.get<double>();
      } else if (key == "car_amp_var") {
        scn.car_amp.var = value.get<double>();
      } else if (key == "train_amp_mean") {
        scn.train_amp.mean = value.get<double>();
      } else if (key == "train_amp_var") {
        scn.train_amp.var = value.get<double>();
      } else if (key == "clutter_amp_mean") {
        scn.clutter_amp.mean = value.get<double>();
      } else if (key == "clutter_amp_var") {
        scn.clutter_amp.var = value.get<double>();
      } else if (key == "objects") {
        if (!value.is_array()) throw format_error("scenario objects must be an array");
        for (const nlohmann::json& oj : value) scn.objects.push_back(parse_object_spec(oj));
      } else if (key == "field") {
        scn.field = parse_field_params(value);
      } else {
        throw format_error("scenario: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("scenario: ") + e.what());
  }
  scn.validate();
  return scn;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const format_error& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

std::string scenario_to_json_string(const Scenario& scn) {
  nlohmann::json objects = nlohmann::json::array();
  for (const ObjectSpec& o : scn.objects) {
    nlohmann::json oj{{"birth_time", o.birth_time},
                      {"entry", o.entry == EntrySide::low ? "low" : "high"},
                      {"speed", o.speed},
                      {"class", to_string(o.cls)}};
    if (o.amplitude) oj["amplitude"] = *o.amplitude;
    objects.push_back(oj);
  }
  nlohmann::json decoys = nlohmann::json::array();
  for (const Decoy& d : scn.field.decoys) {
    decoys.push_back({{"time", d.time}, {"position", d.position}, {"amplitude", d.amplitude}});
  }
  nlohmann::json j{{"seed", scn.seed},
                   {"duration", scn.duration},
                   {"dt", scn.dt},
                   {"fov_low", scn.fov_low},
                   {"fov_high", scn.fov_high},
                   {"p_detect", scn.p_detect},
                   {"clutter_density", scn.clutter_density},
                   {"sigma_q2", scn.sigma_q2},
                   {"sigma_r2", scn.sigma_r2},
                   {"car_amp_mean", scn.car_amp.mean},
                   {"car_amp_var", scn.car_amp.var},
                   {"train_amp_mean", scn.train_amp.mean},
                   {"train_amp_var", scn.train_amp.var},
                   {"clutter_amp_mean", scn.clutter_amp.mean},
                   {"clutter_amp_var", scn.clutter_amp.var},
                   {"objects", objects},
                   {"field",
                    {{"channel_spacing", scn.field.channel_spacing},
                     {"blob_width_channels", scn.field.blob_width_channels},
                     {"blob_duration", scn.field.blob_duration},
                     {"noise_floor", scn.field.noise_floor},
                     {"noise_sigma", scn.field.noise_sigma},
                     {"margin", scn.field.margin},
                     {"decoys", decoys}}}};
  return j.dump(2);
}

void save_scenario(const Scenario& scn, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << scenario_to_json_string(scn) << '\n';
  if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace dastrack
