#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dastrack/classifier.hpp"
#include "dastrack/picker.hpp"
#include "dastrack/preprocess.hpp"
#include "dastrack/report.hpp"
#include "dastrack/simulator.hpp"
#include "dastrack/strain_io.hpp"
#include "dastrack/tracker.hpp"
#include "dastrack/tuner.hpp"
#include "dastrack/types.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dastrack;

// ---------------------------------------------------------------------------
// Config parsing (strict: unknown keys are rejected at every level).

PreprocessConfig parse_preprocess(const json& j) {
  if (!j.is_object()) throw format_error("config: 'preprocess' must be a JSON object");
  PreprocessConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "target_rate") {
      c.target_rate = value.get<double>();
    } else if (key == "antialias_cutoff") {
      c.antialias_cutoff = value.get<double>();
    } else if (key == "band_low") {
      c.band_low = value.get<double>();
    } else if (key == "band_high") {
      c.band_high = value.get<double>();
    } else if (key == "rms_window") {
      c.rms_window = value.get<double>();
    } else if (key == "rms_overlap") {
      c.rms_overlap = value.get<double>();
    } else if (key == "smoothing_kappa") {
      c.smoothing_kappa = value.get<int>();
    } else if (key == "log_floor") {
      c.log_floor = value.get<double>();
    } else {
      throw format_error("config preprocess: unknown key '" + key + "'");
    }
  }
  return c;
}

json preprocess_to_json(const PreprocessConfig& c) {
  return {{"target_rate", c.target_rate},
          {"antialias_cutoff", c.antialias_cutoff},
          {"band_low", c.band_low},
          {"band_high", c.band_high},
          {"rms_window", c.rms_window},
          {"rms_overlap", c.rms_overlap},
          {"smoothing_kappa", c.smoothing_kappa},
          {"log_floor", c.log_floor}};
}

PickerConfig parse_picker(const json& j) {
  if (!j.is_object()) throw format_error("config: 'picker' must be a JSON object");
  PickerConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "amplitude_threshold") {
      c.amplitude_threshold = value.get<double>();
    } else if (key == "epsilon") {
      c.epsilon = value.get<double>();
    } else if (key == "min_pts") {
      c.min_pts = value.get<int>();
    } else if (key == "batch_span") {
      c.batch_span = value.get<double>();
    } else {
      throw format_error("config picker: unknown key '" + key + "'");
    }
  }
  return c;
}

json picker_to_json(const PickerConfig& c) {
  return {{"amplitude_threshold", c.amplitude_threshold},
          {"epsilon", c.epsilon},
          {"min_pts", c.min_pts},
          {"batch_span", c.batch_span}};
}

TrackerConfig parse_tracker(const json& j) {
  if (!j.is_object()) throw format_error("config: 'tracker' must be a JSON object");
  TrackerConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "dt") {
      c.motion.dt = value.get<double>();
    } else if (key == "sigma_q2") {
      c.motion.sigma_q2 = value.get<double>();
    } else if (key == "sigma_r2") {
      c.motion.sigma_r2 = value.get<double>();
    } else if (key == "p_detect") {
      c.p_detect = value.get<double>();
    } else if (key == "clutter_density") {
      c.clutter_density = value.get<double>();
    } else if (key == "fov_low") {
      c.fov_low = value.get<double>();
    } else if (key == "fov_high") {
      c.fov_high = value.get<double>();
    } else if (key == "init_zone") {
      c.init_zone = value.get<double>();
    } else if (key == "init_speed") {
      c.init_speed = value.get<double>();
    } else if (key == "init_pos_var") {
      c.init_pos_var = value.get<double>();
    } else if (key == "init_vel_var") {
      c.init_vel_var = value.get<double>();
    } else if (key == "cov_trace_threshold") {
      c.cov_trace_threshold = value.get<double>();
    } else if (key == "n_init") {
      c.n_init = value.get<int>();
    } else if (key == "gate_probability") {
      c.gate_probability = value.get<double>();
    } else if (key == "da_mode") {
      const std::string s = value.get<std::string>();
      if (s == "joint") {
        c.da_mode = DaMode::joint;
      } else if (s == "per_target") {
        c.da_mode = DaMode::per_target;
      } else {
        throw format_error("config tracker: da_mode must be 'joint' or 'per_target'");
      }
    } else if (key == "hypothesis_cap") {
      c.hypothesis_cap = value.get<std::size_t>();
    } else if (key == "holding_miss_limit") {
      c.holding_miss_limit = value.get<int>();
    } else if (key == "confirmed_miss_limit") {
      c.confirmed_miss_limit = value.get<int>();
    } else {
      throw format_error("config tracker: unknown key '" + key + "'");
    }
  }
  return c;
}

json tracker_to_json(const TrackerConfig& c) {
  return {{"dt", c.motion.dt},
          {"sigma_q2", c.motion.sigma_q2},
          {"sigma_r2", c.motion.sigma_r2},
          {"p_detect", c.p_detect},
          {"clutter_density", c.clutter_density},
          {"fov_low", c.fov_low},
          {"fov_high", c.fov_high},
          {"init_zone", c.init_zone},
          {"init_speed", c.init_speed},
          {"init_pos_var", c.init_pos_var},
          {"init_vel_var", c.init_vel_var},
          {"cov_trace_threshold", c.cov_trace_threshold},
          {"n_init", c.n_init},
          {"gate_probability", c.gate_probability},
          {"da_mode", c.da_mode == DaMode::joint ? "joint" : "per_target"},
          {"hypothesis_cap", c.hypothesis_cap},
          {"holding_miss_limit", c.holding_miss_limit},
          {"confirmed_miss_limit", c.confirmed_miss_limit}};
}

ClassModel parse_class_model(const json& j) {
  if (!j.is_object()) throw format_error("config: 'class_model' must be a JSON object");
  ClassModel c;
  for (const auto& [key, value] : j.items()) {
    if (key == "pi_car") {
      c.pi_car = value.get<double>();
    } else if (key == "alpha_car") {
      c.alpha_car = value.get<double>();
    } else if (key == "tau2_car") {
      c.tau2_car = value.get<double>();
    } else if (key == "alpha_train") {
      c.alpha_train = value.get<double>();
    } else if (key == "tau2_train") {
      c.tau2_train = value.get<double>();
    } else if (key == "use_amplitude_in_da") {
      c.use_amplitude_in_da = value.get<bool>();
    } else {
      throw format_error("config class_model: unknown key '" + key + "'");
    }
  }
  return c;
}

json class_model_to_json(const ClassModel& c) {
  return {{"pi_car", c.pi_car},
          {"alpha_car", c.alpha_car},
          {"tau2_car", c.tau2_car},
          {"alpha_train", c.alpha_train},
          {"tau2_train", c.tau2_train},
          {"use_amplitude_in_da", c.use_amplitude_in_da}};
}

TunerConfig parse_tuner(const json& j, bool* had_preprocess) {
  if (!j.is_object()) throw format_error("config: 'tuner' must be a JSON object");
  TunerConfig c;
  *had_preprocess = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "kappa_grid") {
      c.kappa_grid = value.get<std::vector<int>>();
    } else if (key == "threshold_grid") {
      c.threshold_grid = value.get<std::vector<double>>();
    } else if (key == "epsilon_grid") {
      c.epsilon_grid = value.get<std::vector<double>>();
    } else if (key == "penalty_xi") {
      c.penalty_xi = value.get<double>();
    } else if (key == "reference_channel") {
      c.reference_channel = value.get<std::size_t>();
    } else if (key == "min_pts") {
      c.min_pts = value.get<int>();
    } else if (key == "batch_span") {
      c.batch_span = value.get<double>();
    } else if (key == "preprocess") {
      c.preprocess = parse_preprocess(value);
      *had_preprocess = true;
    } else {
      throw format_error("config tuner: unknown key '" + key + "'");
    }
  }
  return c;
}

json tuner_to_json(const TunerConfig& c) {
  return {{"kappa_grid", c.kappa_grid},
          {"threshold_grid", c.threshold_grid},
          {"epsilon_grid", c.epsilon_grid},
          {"penalty_xi", c.penalty_xi},
          {"reference_channel", c.reference_channel},
          {"min_pts", c.min_pts},
          {"batch_span", c.batch_span},
          {"preprocess", preprocess_to_json(c.preprocess)}};
}

/// Everything a run can configure, resolved from the optional --config file.
struct RunConfig {
  PreprocessConfig preprocess;
  PickerConfig picker;
  TunerConfig tuner;
  TrackerConfig tracker;
  ClassModel class_model;
  std::optional<std::string> class_model_path;
  double bin_minutes = 30.0;
  std::map<std::string, std::string> paths;  ///< input/events/picks/tracks/truth/scenario/out
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

RunConfig parse_run_config(const json& j) {
  RunConfig rc;
  bool tuner_had_preprocess = false;
  bool saw_tuner = false;
  bool saw_class_model = false;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "preprocess") {
        rc.preprocess = parse_preprocess(value);
      } else if (key == "picker") {
        rc.picker = parse_picker(value);
      } else if (key == "tuner") {
        rc.tuner = parse_tuner(value, &tuner_had_preprocess);
        saw_tuner = true;
      } else if (key == "tracker") {
        rc.tracker = parse_tracker(value);
      } else if (key == "class_model") {
        rc.class_model = parse_class_model(value);
        saw_class_model = true;
      } else if (key == "class_model_path") {
        rc.class_model_path = value.get<std::string>();
      } else if (key == "report") {
        if (!value.is_object()) throw format_error("config: 'report' must be a JSON object");
        for (const auto& [rkey, rvalue] : value.items()) {
          if (rkey == "bin_minutes") {
            rc.bin_minutes = rvalue.get<double>();
          } else {
            throw format_error("config report: unknown key '" + rkey + "'");
          }
        }
      } else if (key == "input" || key == "events" || key == "picks" || key == "tracks" ||
                 key == "truth" || key == "scenario" || key == "out") {
        rc.paths[key] = value.get<std::string>();
      } else if (key == "seed") {
        rc.seed = value.get<std::uint64_t>();
      } else if (key == "mode") {
        rc.mode = value.get<std::string>();
      } else {
        throw format_error("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw format_error(std::string("config: ") + e.what());
  }
  if (saw_class_model && rc.class_model_path) {
    throw format_error("config: give either 'class_model' or 'class_model_path', not both");
  }
  // A tuner section without its own preprocess block inherits the top-level one.
  if (!saw_tuner || !tuner_had_preprocess) rc.tuner.preprocess = rc.preprocess;
  return rc;
}

RunConfig load_run_config(const std::string& config_path) {
  if (config_path.empty()) return parse_run_config(json::object());
  std::ifstream in(config_path);
  if (!in) throw io_error("cannot open config " + config_path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw format_error(config_path + ": invalid JSON object");
  }
  try {
    return parse_run_config(j);
  } catch (const format_error& e) {
    throw format_error(config_path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared plumbing.

std::string resolve_path(const std::string& flag_value, const RunConfig& rc,
                         const std::string& key) {
  if (!flag_value.empty()) return flag_value;
  const auto it = rc.paths.find(key);
  if (it != rc.paths.end()) return it->second;
  throw config_error("missing required input: pass --" + key + " or set '" + key +
                     "' in the config file");
}

std::string resolve_optional_path(const std::string& flag_value, const RunConfig& rc,
                                  const std::string& key) {
  if (!flag_value.empty()) return flag_value;
  const auto it = rc.paths.find(key);
  return it != rc.paths.end() ? it->second : std::string{};
}

fs::path resolve_out_dir(const std::string& flag_value, const RunConfig& rc) {
  std::string out = flag_value;
  if (out.empty()) {
    const auto it = rc.paths.find("out");
    out = it != rc.paths.end() ? it->second : ".";
  }
  fs::create_directories(out);
  return out;
}

void write_echo(const fs::path& out_dir, const json& effective) {
  const fs::path path = out_dir / "effective_config.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << effective.dump(2) << '\n';
  if (!out) throw io_error("write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Subcommands.

void cmd_simulate(const RunConfig& rc, const std::string& scenario_flag,
                  const std::string& mode_flag, std::optional<std::uint64_t> seed_flag,
                  const fs::path& out_dir) {
  Scenario scn = load_scenario(resolve_path(scenario_flag, rc, "scenario"));
  if (rc.seed) scn.seed = *rc.seed;
  if (seed_flag) scn.seed = *seed_flag;

  std::string mode = mode_flag.empty() ? rc.mode.value_or("picks") : mode_flag;
  if (mode != "picks" && mode != "field" && mode != "both") {
    throw config_error("mode must be 'picks', 'field' or 'both', got '" + mode + "'");
  }

  write_echo(out_dir, json::parse(scenario_to_json_string(scn)));

  bool truth_written = false;
  if (mode == "picks" || mode == "both") {
    const PickSimulation sim = simulate_picks(scn);
    std::vector<PickRow> rows;
    for (const std::vector<SimulatedPick>& step : sim.picks_per_step) {
      for (const SimulatedPick& sp : step) rows.push_back({sp.pick, sp.origin});
    }
    save_picks(rows, out_dir / "picks.csv");
    save_ground_truth(sim.truth, out_dir / "ground_truth.csv");
    truth_written = true;
  }
  if (mode == "field" || mode == "both") {
    save_strain(simulate_field(scn), out_dir / "field.strain");
    if (!truth_written) save_ground_truth(make_ground_truth(scn), out_dir / "ground_truth.csv");
  }
}

void cmd_extract(const RunConfig& rc, const std::string& input_flag, const fs::path& out_dir) {
  rc.preprocess.validate();
  rc.picker.validate();
  write_echo(out_dir,
             json{{"preprocess", preprocess_to_json(rc.preprocess)},
                  {"picker", picker_to_json(rc.picker)}});

  StrainFileReader reader(resolve_path(input_flag, rc, "input"));
  const StrainMeta& meta = reader.meta();
  const std::size_t window_samples = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(rc.picker.batch_span / meta.sample_interval)));

  std::vector<PickRow> rows;
  long long next_cluster_id = 0;
  for (std::size_t first = 0; first < meta.n_samples; first += window_samples) {
    StrainBatch batch = reader.read_window(first, window_samples);
    if (!batch.meta.is_log_rms) {
      // A trailing window too short for a single RMS frame can yield no picks.
      if (static_cast<double>(batch.meta.n_samples) * batch.meta.sample_interval <
          rc.preprocess.rms_window) {
        continue;
      }
      batch = log_rms_pipeline(batch, rc.preprocess);
    }
    batch = smooth_channels(batch, rc.preprocess.smoothing_kappa);
    const std::vector<Pick> picks = extract_picks(batch, rc.picker);
    for (const Pick& p : picks) rows.push_back({p, next_cluster_id++});
  }
  save_picks(rows, out_dir / "picks.csv");
}

void cmd_tune(const RunConfig& rc, const std::string& input_flag, const std::string& events_flag,
              const fs::path& out_dir) {
  write_echo(out_dir, json{{"tuner", tuner_to_json(rc.tuner)}});
  const StrainBatch batch = load_strain(resolve_path(input_flag, rc, "input"));
  const EventLog events = load_events(resolve_path(events_flag, rc, "events"));
  const TuneResult result = tune(batch, events, rc.tuner);

  const fs::path result_path = out_dir / "tune_result.json";
  std::ofstream out(result_path, std::ios::trunc);
  if (!out) throw io_error("cannot open " + result_path.string() + " for writing");
  out << json{{"best_kappa", result.best_kappa},
              {"best_threshold", result.best_threshold},
              {"best_epsilon", result.best_epsilon},
              {"objective", result.objective}}
             .dump(2)
      << '\n';
  if (!out) throw io_error("write failure on " + result_path.string());
  save_surface(result, out_dir / "surface.csv");
}

void cmd_track(const RunConfig& rc, const std::string& picks_flag, const std::string& truth_flag,
               const fs::path& out_dir) {
  const ClassModel model =
      rc.class_model_path ? load_class_model(*rc.class_model_path) : rc.class_model;
  json echo{{"tracker", tracker_to_json(rc.tracker)}, {"class_model", class_model_to_json(model)}};
  if (rc.class_model_path) echo["class_model_path"] = *rc.class_model_path;
  write_echo(out_dir, echo);

  const std::vector<PickRow> rows = load_picks(resolve_path(picks_flag, rc, "picks"));
  std::vector<Pick> picks;
  picks.reserve(rows.size());
  for (const PickRow& r : rows) picks.push_back(r.pick);

  std::vector<TrackRecord> records;
  if (!picks.empty()) {
    double t_min = picks.front().time;
    double t_max = picks.front().time;
    for (const Pick& p : picks) {
      t_min = std::min(t_min, p.time);
      t_max = std::max(t_max, p.time);
    }
    const double dt = rc.tracker.motion.dt;
    const double t_start = std::floor(t_min / dt + 1e-9) * dt;  // align to the t = 0 grid
    records = run_tracker(picks, rc.tracker, model, t_start, t_max);
  }
  save_track_records(records, out_dir / "tracks.jsonl");

  const std::string truth_path = resolve_optional_path(truth_flag, rc, "truth");
  if (!truth_path.empty()) {
    const TrackingMetrics m = score_tracking(load_ground_truth(truth_path), records);
    const fs::path metrics_path = out_dir / "metrics.json";
    std::ofstream out(metrics_path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + metrics_path.string() + " for writing");
    out << json{{"true_count", m.true_count},
                {"confirmed_count", m.confirmed_count},
                {"matched_count", m.matched_count},
                {"class_accuracy", m.class_accuracy},
                {"position_rmse", m.position_rmse},
                {"velocity_mean_error", m.velocity_mean_error},
                {"north_pairs", m.north_pairs},
                {"south_pairs", m.south_pairs},
                {"mean_speed_error_north", m.mean_speed_error_north},
                {"mean_speed_error_south", m.mean_speed_error_south}}
               .dump(2)
        << '\n';
    if (!out) throw io_error("write failure on " + metrics_path.string());
  }
}

void cmd_report(const RunConfig& rc, const std::string& tracks_flag, const fs::path& out_dir) {
  write_echo(out_dir, json{{"report", {{"bin_minutes", rc.bin_minutes}}}});
  const std::vector<TrackRecord> records =
      load_track_records(resolve_path(tracks_flag, rc, "tracks"));
  const TrafficReport report = make_report(records, rc.bin_minutes);
  save_report_counts(report, out_dir / "counts.csv");
  save_report_velocities(report, out_dir / "velocities.csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAS railway traffic pipeline: simulate, extract, tune, track, report"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_flag;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_flag, "Output directory (default '.')");

  std::string scenario_flag, mode_flag;
  std::uint64_t seed_value = 0;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  sim->add_option("--scenario", scenario_flag, "Scenario JSON file");
  sim->add_option("--mode", mode_flag, "picks | field | both (default picks)");
  CLI::Option* seed_opt = sim->add_option("--seed", seed_value, "Override the scenario seed");

  std::string input_flag;
  CLI::App* extract = app.add_subcommand("extract", "Strain file -> picks CSV");
  extract->add_option("--input", input_flag, "Strain file");

  std::string events_flag;
  CLI::App* tune_cmd = app.add_subcommand("tune", "Grid-search picking hyperparameters");
  tune_cmd->add_option("--input", input_flag, "Strain file");
  tune_cmd->add_option("--events", events_flag, "Passage log CSV");

  std::string picks_flag, truth_flag;
  CLI::App* track = app.add_subcommand("track", "Picks CSV -> tracks JSONL");
  track->add_option("--picks", picks_flag, "Picks CSV");
  track->add_option("--truth", truth_flag, "Ground-truth CSV (writes metrics.json)");

  std::string tracks_flag;
  CLI::App* report = app.add_subcommand("report", "Tracks JSONL -> traffic report CSVs");
  report->add_option("--tracks", tracks_flag, "Tracks JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig rc = load_run_config(config_path);
    const fs::path out_dir = resolve_out_dir(out_flag, rc);
    if (sim->parsed()) {
      std::optional<std::uint64_t> seed_flag;
      if (seed_opt->count() > 0) seed_flag = seed_value;
      cmd_simulate(rc, scenario_flag, mode_flag, seed_flag, out_dir);
    } else if (extract->parsed()) {
      cmd_extract(rc, input_flag, out_dir);
    } else if (tune_cmd->parsed()) {
      cmd_tune(rc, input_flag, events_flag, out_dir);
    } else if (track->parsed()) {
      cmd_track(rc, picks_flag, truth_flag, out_dir);
    } else if (report->parsed()) {
      cmd_report(rc, tracks_flag, out_dir);
    }
    return 0;
  } catch (const domain_error& e) {
    std::cerr << "dastrack: internal error: " << e.what() << '\n';
    return 3;
  } catch (const format_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const data_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const config_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const fit_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const tune_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const io_error& e) {
    std::cerr << "dastrack: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dastrack: internal error: " << e.what() << '\n';
    return 3;
  }
}
