#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dastrack/picker.hpp"
#include "dastrack/preprocess.hpp"
#include "dastrack/types.hpp"

namespace dastrack {

/// Grid-search specification for (smoothing span kappa, threshold A, DBSCAN epsilon).
struct TunerConfig {
  std::vector<int> kappa_grid = {31};
  std::vector<double> threshold_grid = {-8.8};
  std::vector<double> epsilon_grid = {0.05};
  double penalty_xi = 10.0;          ///< weight of | |P| - |E| | in the objective
  std::size_t reference_channel = 0; ///< channel of the manual log site
  PreprocessConfig preprocess;       ///< used when the batch is raw strain
  int min_pts = 1;                   ///< DBSCAN min_pts during tuning
  double batch_span = 6.0;           ///< seconds per picking window

  void validate(std::size_t n_channels) const;
};

/// One evaluated grid point.
struct SurfaceCell {
  int kappa;
  double threshold;
  double epsilon;
  double score;
};

struct TuneResult {
  int best_kappa = 0;
  double best_threshold = 0.0;
  double best_epsilon = 0.0;
  double objective = 0.0;
  std::vector<SurfaceCell> surface;  ///< every grid point, in evaluation order
};

/// Symmetric Hausdorff distance between two 1-D point sets:
/// max(sup_p inf_e |p-e|, sup_e inf_p |p-e|). Either set empty -> +infinity.
[[nodiscard]] double hausdorff(std::span<const double> p, std::span<const double> e);

/// hausdorff(p, e) + xi * | |p| - |e| |; empty p (or e) -> +infinity.
[[nodiscard]] double penalized_objective(std::span<const double> p, std::span<const double> e,
                                         double xi);

/// Grid search minimizing the penalized objective between pick times near the
/// reference channel and logged event times. The batch may be raw strain (the
/// log-RMS chain runs once per picking window, cached across grid points) or
/// already log-RMS. Ties break lexicographically on (threshold, epsilon, kappa).
/// Throws tune_error when every grid point produces an empty pick set.
[[nodiscard]] TuneResult tune(const StrainBatch& batch, const EventLog& events,
                              const TunerConfig& cfg);

/// Write the objective surface as CSV (`kappa,A,epsilon,score`).
void save_surface(const TuneResult& result, const std::filesystem::path& path);

}  // namespace dastrack
