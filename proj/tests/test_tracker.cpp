#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "dastrack/jpda.hpp"
#include "dastrack/kalman.hpp"
#include "dastrack/tracker.hpp"
#include "dastrack/types.hpp"

using namespace dastrack;

namespace {

Pick pick_at(double t, double pos, double amp = -8.0) {
  Pick p;
  p.time = t;
  p.position = pos;
  p.log_amplitude = amp;
  p.cluster_size = 1;
  return p;
}

}  // namespace

TEST_CASE("motion model matrices") {
  MotionModel m;  // dt 0.2, sigma_q2 1
  const Eigen::Matrix2d g = m.transition();
  CHECK(g(0, 0) == 1.0);
  CHECK(g(0, 1) == doctest::Approx(0.2));
  CHECK(g(1, 0) == 0.0);
  CHECK(g(1, 1) == 1.0);

  const Eigen::Matrix2d q = m.process_noise();
  CHECK(q(0, 0) == doctest::Approx(0.2 * 0.2 * 0.2 / 3.0).epsilon(1e-12));  // 0.0026667
  CHECK(q(0, 1) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(q(1, 0) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(q(1, 1) == doctest::Approx(0.2).epsilon(1e-12));

  SUBCASE("scaling by sigma_q2") {
    MotionModel m2 = m;
    m2.sigma_q2 = 4.0;
    CHECK(m2.process_noise()(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("validation") {
    MotionModel bad = m;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = m;
    bad.sigma_r2 = -1.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
  }
}

TEST_CASE("kalman predict and update hand example") {
  MotionModel m;
  m.dt = 1.0;
  m.sigma_q2 = 0.0;  // pure deterministic motion for the hand numbers
  m.sigma_r2 = 1.0;

  GaussianState s;
  s.mean << 0.0, 0.0;
  s.cov = Eigen::Matrix2d::Identity();

  SUBCASE("update pulls halfway when prior and noise variances are equal") {
    const GaussianState u = kf_update(s, 1.0, m);
    // S = 1 + 1 = 2, K = (0.5, 0); mean -> (0.5, 0).
    CHECK(u.mean(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u.mean(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(u.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u.cov(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u.cov(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("predict moves the mean by velocity and grows covariance") {
    GaussianState v;
    v.mean << 10.0, 2.0;
    v.cov << 3.0, 1.0, 1.0, 2.0;
    const GaussianState p = kf_predict(v, m);
    CHECK(p.mean(0) == doctest::Approx(12.0));
    CHECK(p.mean(1) == doctest::Approx(2.0));
    // G P G' with dt 1: [[3+1+1+2, 1+2],[1+2, 2]] = [[7,3],[3,2]].
    CHECK(p.cov(0, 0) == doctest::Approx(7.0));
    CHECK(p.cov(0, 1) == doctest::Approx(3.0));
    CHECK(p.cov(1, 1) == doctest::Approx(2.0));
  }
  SUBCASE("innovation variance") {
    CHECK(innovation_variance(s, m) == doctest::Approx(2.0));
  }
}

TEST_CASE("kalman update agrees with a dense-grid Bayes oracle") {
  // Position marginal of the updated state must match pointwise Bayes on a grid.
  MotionModel m;
  m.sigma_r2 = 15.0;
  GaussianState prior;
  prior.mean << 4000.0, 8.0;
  prior.cov << 10.0, 1.5, 1.5, 2.0;
  const double z = 4004.0;

  const GaussianState post = kf_update(prior, z, m);

  // Grid over position; prior position marginal is N(4000, 10).
  const double lo = 3980.0, hi = 4030.0;
  const int n = 20001;
  const double step = (hi - lo) / (n - 1);
  double w_sum = 0.0, x_sum = 0.0, xx_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * step;
    const double w = gaussian_pdf(x, prior.mean(0), prior.cov(0, 0)) *
                     gaussian_pdf(z, x, m.sigma_r2);
    w_sum += w;
    x_sum += w * x;
    xx_sum += w * x * x;
  }
  const double mean = x_sum / w_sum;
  const double var = xx_sum / w_sum - mean * mean;
  CHECK(post.mean(0) == doctest::Approx(mean).epsilon(1e-6));
  CHECK(post.cov(0, 0) == doctest::Approx(var).epsilon(1e-6));
}

TEST_CASE("chi-square gate quantile") {
  CHECK(chi2_quantile_1dof(0.99) == doctest::Approx(6.634896601).epsilon(1e-9));
  CHECK(chi2_quantile_1dof(0.95) == doctest::Approx(3.841458821).epsilon(1e-8));
  CHECK(std::isinf(chi2_quantile_1dof(1.0)));
  // Quantile of the square of a standard normal: consistency with the normal.
  const double q90 = normal_quantile(0.95);  // two-sided 90%
  CHECK(chi2_quantile_1dof(0.90) == doctest::Approx(q90 * q90).epsilon(1e-12));
}

TEST_CASE("gate admits measurements inside the 99% ellipse only") {
  MotionModel m;  // sigma_r2 15
  GaussianState pred;
  pred.mean << 4000.0, 8.0;
  pred.cov << 1.0, 0.0, 0.0, 2.0;  // S = 15 + 1 = 16
  // Radius = sqrt(6.6349 * 16) = 10.3033.
  const std::vector<double> zs = {4000.0 + 10.29, 4000.0 + 10.31, 4000.0 - 10.29,
                                  4000.0 - 10.31, 4000.0};
  const std::vector<int> in = gate(pred, zs, m, 0.99);
  CHECK(in == std::vector<int>{0, 2, 4});

  SUBCASE("gate_probability 1 disables gating") {
    const std::vector<int> all = gate(pred, zs, m, 1.0);
    CHECK(all == std::vector<int>{0, 1, 2, 3, 4});
  }
  SUBCASE("empty measurement list") {
    CHECK(gate(pred, {}, m, 0.99).empty());
  }
}

namespace {

/// Brute-force validity filter: every map from tracks to {0..m} such that
/// nonzero entries are pairwise distinct and each entry is gated.
std::vector<AssociationHypothesis> brute_force_das(const AssociationInput& in) {
  const std::size_t n = in.gated.size();
  std::vector<AssociationHypothesis> out;
  std::vector<int> assign(n, 0);
  // Odometer over 0..m per track, then filter.
  const int m = static_cast<int>(in.n_measurements);
  while (true) {
    // Validity: nonzero pairwise distinct and gated for its track.
    bool valid = true;
    for (std::size_t i = 0; i < n && valid; ++i) {
      if (assign[i] == 0) continue;
      const auto& g = in.gated[i];
      if (std::find(g.begin(), g.end(), assign[i] - 1) == g.end()) valid = false;
      for (std::size_t j = i + 1; j < n && valid; ++j)
        if (assign[j] == assign[i]) valid = false;
    }
    if (valid) {
      AssociationHypothesis h;
      h.assignment = assign;
      h.weight = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] == 0) {
          h.weight *= in.miss_term;
        } else {
          const auto& g = in.gated[i];
          const std::size_t k = static_cast<std::size_t>(
              std::find(g.begin(), g.end(), assign[i] - 1) - g.begin());
          h.weight *= in.det_term[i][k];
        }
      }
      out.push_back(std::move(h));
    }
    // Increment odometer.
    std::size_t pos = 0;
    while (pos < n && ++assign[pos] > m) {
      assign[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return out;
}

/// Marginals from explicit hypotheses.
std::vector<std::vector<double>> marginals_from(const std::vector<AssociationHypothesis>& hyps,
                                                const AssociationInput& in) {
  std::vector<std::vector<double>> beta(in.gated.size());
  for (std::size_t i = 0; i < in.gated.size(); ++i)
    beta[i].assign(1 + in.gated[i].size(), 0.0);
  double total = 0.0;
  for (const auto& h : hyps) total += h.weight;
  for (const auto& h : hyps) {
    for (std::size_t i = 0; i < h.assignment.size(); ++i) {
      if (h.assignment[i] == 0) {
        beta[i][0] += h.weight / total;
      } else {
        const auto& g = in.gated[i];
        const std::size_t k = static_cast<std::size_t>(
            std::find(g.begin(), g.end(), h.assignment[i] - 1) - g.begin());
        beta[i][1 + k] += h.weight / total;
      }
    }
  }
  return beta;
}

}  // namespace

TEST_CASE("joint enumeration counts on fixed topologies") {
  AssociationInput in;
  in.miss_term = 0.1;

  SUBCASE("one track, one gated pick: 2 hypotheses") {
    in.gated = {{0}};
    in.det_term = {{2.0}};
    in.n_measurements = 1;
    const auto hyps = enumerate_valid_das(in, 1000);
    REQUIRE(hyps.has_value());
    CHECK(hyps->size() == 2);
  }
  SUBCASE("one track, two gated picks: 3 hypotheses") {
    in.gated = {{0, 1}};
    in.det_term = {{2.0, 3.0}};
    in.n_measurements = 2;
    const auto hyps = enumerate_valid_das(in, 1000);
    REQUIRE(hyps.has_value());
    CHECK(hyps->size() == 3);
  }
  SUBCASE("two tracks sharing two picks: 7 hypotheses") {
    in.gated = {{0, 1}, {0, 1}};
    in.det_term = {{2.0, 3.0}, {4.0, 5.0}};
    in.n_measurements = 2;
    const auto hyps = enumerate_valid_das(in, 1000);
    REQUIRE(hyps.has_value());
    // (0,0) (1,0) (2,0) (0,1) (0,2) (1,2) (2,1)
    CHECK(hyps->size() == 7);
    // No hypothesis shares a measurement.
    for (const auto& h : *hyps) {
      if (h.assignment[0] != 0) CHECK(h.assignment[0] != h.assignment[1]);
    }
  }
  SUBCASE("cap exceeded yields nullopt") {
    in.gated = {{0, 1}, {0, 1}};
    in.det_term = {{2.0, 3.0}, {4.0, 5.0}};
    in.n_measurements = 2;
    CHECK_FALSE(enumerate_valid_das(in, 6).has_value());
  }
}

TEST_CASE("association probabilities match brute force on random scenarios") {
  std::mt19937 gen(31);
  std::uniform_int_distribution<int> n_tracks_dist(1, 3);
  std::uniform_int_distribution<int> n_meas_dist(0, 4);
  std::uniform_real_distribution<double> term(0.05, 20.0);
  std::bernoulli_distribution in_gate(0.7);

  for (int trial = 0; trial < 200; ++trial) {
    AssociationInput in;
    const int n = n_tracks_dist(gen);
    const int m = n_meas_dist(gen);
    in.n_measurements = static_cast<std::size_t>(m);
    in.miss_term = 0.1;
    in.gated.resize(static_cast<std::size_t>(n));
    in.det_term.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        if (in_gate(gen)) {
          in.gated[static_cast<std::size_t>(i)].push_back(j);
          in.det_term[static_cast<std::size_t>(i)].push_back(term(gen));
        }
      }
    }

    const AssociationResult got = association_probabilities(in, DaMode::joint, 100000);
    CHECK_FALSE(got.used_fallback);
    const auto want = marginals_from(brute_force_das(in), in);

    REQUIRE(got.beta.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      REQUIRE(got.beta[i].size() == want[i].size());
      double row = 0.0;
      for (std::size_t k = 0; k < want[i].size(); ++k) {
        CHECK(got.beta[i][k] == doctest::Approx(want[i][k]).epsilon(1e-12).scale(1.0));
        row += got.beta[i][k];
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-track beta hand example") {
  // phi(0; 0, 16) = 0.0997356, P_D = 0.9, lambda = 0.005:
  // det = 0.9 * 0.0997356 / 0.005 = 17.9524; miss = 0.1.
  MotionModel m;  // sigma_r2 15
  GaussianState pred;
  pred.mean << 4000.0, 8.0;
  pred.cov << 1.0, 0.0, 0.0, 2.0;
  const std::vector<double> zs = {4000.0};
  std::vector<std::vector<int>> gated = {{0}};
  const AssociationInput in =
      make_association_input(std::span(&pred, 1), zs, gated, m, 0.9, 0.005);
  CHECK(in.det_term[0][0] == doctest::Approx(17.95240).epsilon(1e-5));

  const AssociationResult r = association_probabilities(in, DaMode::joint, 1000);
  CHECK(r.beta[0][0] == doctest::Approx(0.005540).epsilon(1e-3));
  CHECK(r.beta[0][1] == doctest::Approx(0.994460).epsilon(1e-5));
}

TEST_CASE("per-target mode normalizes rows independently") {
  AssociationInput in;
  in.gated = {{0}, {0}};
  in.det_term = {{9.9}, {9.9}};
  in.miss_term = 0.1;
  in.n_measurements = 1;

  const AssociationResult per = association_probabilities(in, DaMode::per_target, 1000);
  // Each row: (0.1, 9.9) / 10 = (0.01, 0.99) -- the shared pick is double-counted.
  CHECK(per.beta[0][1] == doctest::Approx(0.99));
  CHECK(per.beta[1][1] == doctest::Approx(0.99));

  const AssociationResult joint = association_probabilities(in, DaMode::joint, 1000);
  // Joint: hypotheses (0,0)=0.01, (1,0)=0.99, (0,1)=0.99 -> beta_det = 0.4975 each.
  CHECK(joint.beta[0][1] == doctest::Approx(0.99 / 1.99).epsilon(1e-12));
  CHECK(joint.beta[1][1] == doctest::Approx(0.99 / 1.99).epsilon(1e-12));

  SUBCASE("tiny cap forces fallback inside association_probabilities") {
    const AssociationResult fb = association_probabilities(in, DaMode::joint, 2);
    CHECK(fb.used_fallback);
    CHECK(fb.beta[0][1] == doctest::Approx(0.99));
  }
}

TEST_CASE("jpda update with degenerate beta equals the kalman update") {
  MotionModel m;
  GaussianState pred;
  pred.mean << 4000.0, 8.0;
  pred.cov << 10.0, 1.5, 1.5, 2.0;
  const double z = 4004.0;

  const std::vector<double> zs = {z};
  const std::vector<double> beta = {0.0, 1.0};
  const GaussianState jp = jpda_update(pred, zs, beta, m);
  const GaussianState kf = kf_update(pred, z, m);
  CHECK(jp.mean(0) == doctest::Approx(kf.mean(0)).epsilon(1e-14));
  CHECK(jp.mean(1) == doctest::Approx(kf.mean(1)).epsilon(1e-14));
  CHECK(jp.cov(0, 0) == doctest::Approx(kf.cov(0, 0)).epsilon(1e-14));
  CHECK(jp.cov(1, 1) == doctest::Approx(kf.cov(1, 1)).epsilon(1e-14));

  SUBCASE("all-miss beta returns the prediction unchanged") {
    const std::vector<double> miss = {1.0};
    const GaussianState same = jpda_update(pred, {}, miss, m);
    CHECK(same.mean(0) == pred.mean(0));
    CHECK(same.cov(0, 0) == pred.cov(0, 0));
  }
}

TEST_CASE("jpda update matches the mixture moments oracle") {
  // The JPDA estimate is the moment match of the mixture {miss -> predicted,
  // hit j -> kf_update(z_j)} weighted by beta.
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> zoff(-8.0, 8.0);
  std::uniform_real_distribution<double> bw(0.05, 1.0);

  MotionModel m;
  for (int trial = 0; trial < 100; ++trial) {
    GaussianState pred;
    pred.mean << 4000.0 + zoff(gen), 8.0;
    pred.cov << 12.0, 2.0, 2.0, 3.0;

    const int n_meas = 1 + (trial % 3);
    std::vector<double> zs(static_cast<std::size_t>(n_meas));
    for (double& z : zs) z = 4000.0 + zoff(gen);
    std::vector<double> beta(1 + zs.size());
    double sum = 0.0;
    for (double& b : beta) {
      b = bw(gen);
      sum += b;
    }
    for (double& b : beta) b /= sum;

    const GaussianState got = jpda_update(pred, zs, beta, m);

    // Oracle: explicit mixture of the component posteriors.
    std::vector<GaussianState> comp;
    comp.push_back(pred);
    for (double z : zs) comp.push_back(kf_update(pred, z, m));
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < comp.size(); ++k) mean += beta[k] * comp[k].mean;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < comp.size(); ++k) {
      const Eigen::Vector2d d = comp[k].mean - mean;
      cov += beta[k] * (comp[k].cov + d * d.transpose());
    }

    for (int r = 0; r < 2; ++r) {
      CHECK(got.mean(r) == doctest::Approx(mean(r)).epsilon(1e-9));
      for (int c = 0; c < 2; ++c)
        CHECK(got.cov(r, c) == doctest::Approx(cov(r, c)).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("initiation zones, means, velocities and suppression") {
  TrackerConfig cfg;  // fov 3963..4167, zone 60, init_speed 10
  ClassModel cm;
  const double t = 12.0;

  SUBCASE("low-zone picks average and move north") {
    const std::vector<Pick> picks = {pick_at(t, 3970.0), pick_at(t, 3980.0)};
    const auto cands = init_candidates(picks, cfg, cm, t);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].state.mean(0) == doctest::Approx(3975.0));
    CHECK(cands[0].state.mean(1) == doctest::Approx(10.0));
    CHECK(cands[0].state.cov(0, 0) == doctest::Approx(10.0));
    CHECK(cands[0].state.cov(1, 1) == doctest::Approx(2.0));
    CHECK(cands[0].state.cov(0, 1) == doctest::Approx(0.0));
    CHECK(cands[0].status == TrackStatus::holding);
    CHECK(cands[0].update_count == 0);
    CHECK(cands[0].birth_time == doctest::Approx(t));
    CHECK(cands[0].direction_hint == Direction::north);
  }
  SUBCASE("high-zone picks move south") {
    const std::vector<Pick> picks = {pick_at(t, 4160.0)};
    const auto cands = init_candidates(picks, cfg, cm, t);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].state.mean(0) == doctest::Approx(4160.0));
    CHECK(cands[0].state.mean(1) == doctest::Approx(-10.0));
    CHECK(cands[0].direction_hint == Direction::south);
  }
  SUBCASE("both zones can fire on the same step") {
    const std::vector<Pick> picks = {pick_at(t, 3970.0), pick_at(t, 4160.0)};
    const auto cands = init_candidates(picks, cfg, cm, t);
    CHECK(cands.size() == 2);
  }
  SUBCASE("mid-field picks never initiate") {
    const std::vector<Pick> picks = {pick_at(t, 4065.0)};
    CHECK(init_candidates(picks, cfg, cm, t).empty());
  }
  SUBCASE("zone boundaries are inclusive") {
    const std::vector<Pick> at_edge = {pick_at(t, 3963.0 + 60.0)};
    CHECK(init_candidates(at_edge, cfg, cm, t).size() == 1);
    const std::vector<Pick> past_edge = {pick_at(t, 3963.0 + 60.0 + 0.01)};
    CHECK(init_candidates(past_edge, cfg, cm, t).empty());
  }
  SUBCASE("an existing track whose gate covers the zone mean suppresses it") {
    const std::vector<Pick> picks = {pick_at(t, 3975.0)};
    GaussianState near;
    near.mean << 3975.0, 10.0;
    near.cov << 1.0, 0.0, 0.0, 2.0;  // S = 16, radius ~10.3
    CHECK(init_candidates(picks, cfg, cm, t, std::span(&near, 1)).empty());

    GaussianState far;
    far.mean << 4100.0, 10.0;
    far.cov = near.cov;
    CHECK(init_candidates(picks, cfg, cm, t, std::span(&far, 1)).size() == 1);
  }
}

TEST_CASE("tracker lifecycle: holding -> confirmed -> deleted") {
  TrackerConfig cfg;
  cfg.p_detect = 0.9;
  cfg.clutter_density = 0.005;
  cfg.n_init = 5;
  ClassModel cm;

  Tracker tracker(cfg, cm, 0.0);
  CHECK(tracker.current_time() == doctest::Approx(0.0));

  // Feed an object entering the low zone at 10 m/s, one pick per step, no clutter.
  double pos = 3970.0;
  std::vector<TrackStatus> seen;
  std::vector<TrackRecord> last;
  for (int k = 0; k < 12; ++k) {
    const double t = 0.2 * k;
    last = tracker.step({pick_at(t, pos)});
    REQUIRE(last.size() == 1);
    seen.push_back(last[0].status);
    pos += 10.0 * 0.2;
  }
  // Born on step 0 with update_count 0 (its birth picks do not count), so
  // confirmation lands once five subsequent steps have fused a pick.
  CHECK(seen[0] == TrackStatus::holding);
  CHECK(seen[4] == TrackStatus::holding);
  CHECK(seen[5] == TrackStatus::confirmed);
  CHECK(seen[11] == TrackStatus::confirmed);
  CHECK(last[0].pos_mean == doctest::Approx(pos - 2.0).epsilon(1e-3));
  CHECK(last[0].vel_mean == doctest::Approx(10.0).epsilon(0.15));

  SUBCASE("starving the tracker deletes by trace growth at the predicted step") {
    // Count steps until deletion; compare against an explicit predict-only loop.
    GaussianState s;
    s.mean << last[0].pos_mean, last[0].vel_mean;
    s.cov << last[0].pos_var, 0.0, 0.0, last[0].vel_var;
    // Recover the cross term from the tracker's own state.
    s.cov(0, 1) = s.cov(1, 0) = tracker.tracks().at(0).state.cov(0, 1);

    MotionModel m;  // defaults match cfg.motion
    int expect_steps = 0;
    GaussianState probe = s;
    while (true) {
      ++expect_steps;
      probe = kf_predict(probe, m);
      if (probe.cov.trace() > cfg.cov_trace_threshold) break;
      REQUIRE(expect_steps < 200);
    }

    int steps = 0;
    while (true) {
      ++steps;
      const auto recs = tracker.step({});
      REQUIRE(recs.size() == 1);
      if (recs[0].status == TrackStatus::deleted) break;
      REQUIRE(steps < 200);
    }
    CHECK(steps == expect_steps);
    CHECK(tracker.tracks().empty());
  }

  SUBCASE("a track leaving the field of view is deleted") {
    // Keep feeding picks marching past the high edge.
    int guard = 0;
    while (true) {
      const double t = tracker.current_time();
      const auto recs = tracker.step({pick_at(t, pos)});
      REQUIRE(recs.size() == 1);
      if (recs[0].status == TrackStatus::deleted) {
        CHECK(pos > cfg.fov_high - 10.0);
        break;
      }
      pos += 10.0 * 0.2;
      REQUIRE(++guard < 200);
    }
  }
}

TEST_CASE("holding miss limit reaps unfed candidates") {
  TrackerConfig cfg;
  cfg.holding_miss_limit = 2;
  ClassModel cm;
  Tracker tracker(cfg, cm, 0.0);

  auto first = tracker.step({pick_at(0.0, 3970.0)});
  REQUIRE(first.size() == 1);
  CHECK(first[0].status == TrackStatus::holding);

  auto second = tracker.step({});  // miss 1
  REQUIRE(second.size() == 1);
  CHECK(second[0].status == TrackStatus::holding);

  auto third = tracker.step({});  // miss 2 -> deleted this step
  REQUIRE(third.size() == 1);
  CHECK(third[0].status == TrackStatus::deleted);
  CHECK(tracker.tracks().empty());
}

TEST_CASE("confirmed miss limit bounds coasting after the object disappears") {
  TrackerConfig cfg;
  cfg.confirmed_miss_limit = 4;
  cfg.cov_trace_threshold = 1e9;  // isolate the miss rule from the trace rule
  ClassModel cm;
  Tracker tracker(cfg, cm, 0.0);

  double pos = 3990.0;
  for (int k = 0; k < 8; ++k) {
    tracker.step({pick_at(0.2 * k, pos)});
    pos += 2.0;
  }
  REQUIRE(tracker.tracks().size() == 1);
  REQUIRE(tracker.tracks()[0].status == TrackStatus::confirmed);

  int steps = 0;
  while (!tracker.tracks().empty()) {
    tracker.step({});
    REQUIRE(++steps < 50);
  }
  CHECK(steps == 4);
}

TEST_CASE("duplicate candidates sharing one object's picks stay unconfirmed") {
  // Two holding tracks: one on the object, one offset. Joint association
  // starves the offset track, so only one confirms.
  TrackerConfig cfg;
  cfg.holding_miss_limit = 2;
  ClassModel cm;
  Tracker tracker(cfg, cm, 0.0);

  // Step 0: two picks in the low zone -> a single candidate at their mean;
  // we instead force two separated candidates via distinct steps.
  tracker.step({pick_at(0.0, 3968.0)});
  tracker.step({pick_at(0.2, 3986.0), pick_at(0.2, 3970.0)});
  // Both zones... low zone mean suppressed only if gated; after two steps we
  // have at least one extra candidate when the second initiation fired.
  const std::size_t n_candidates = tracker.tracks().size();

  // Now feed a single object from 3988 northward; at most one track confirms.
  double pos = 3988.0;
  for (int k = 2; k < 30; ++k) {
    tracker.step({pick_at(0.2 * k, pos)});
    pos += 10.0 * 0.2;
  }
  int confirmed = 0;
  for (const Track& trk : tracker.tracks())
    if (trk.status == TrackStatus::confirmed) ++confirmed;
  CHECK(confirmed <= 1);
  CHECK(n_candidates >= 1);
}

TEST_CASE("run_tracker buckets picks onto the step grid") {
  TrackerConfig cfg;
  ClassModel cm;

  std::vector<Pick> picks;
  double pos = 3970.0;
  for (int k = 0; k < 40; ++k) {
    picks.push_back(pick_at(0.2 * k, pos));
    pos += 10.0 * 0.2;
  }
  const auto records = run_tracker(picks, cfg, cm, 0.0, 0.2 * 39);
  REQUIRE_FALSE(records.empty());

  // Exactly one track id; once confirmed it stays confirmed to the end.
  std::set<long long> ids;
  bool confirmed_seen = false;
  for (const TrackRecord& r : records) {
    ids.insert(r.track_id);
    if (r.status == TrackStatus::confirmed) confirmed_seen = true;
  }
  CHECK(ids.size() == 1);
  CHECK(confirmed_seen);

  // Records cover the step grid (no duplicates per step for one track).
  std::set<long long> times;
  for (const TrackRecord& r : records)
    times.insert(std::llround(r.t / 0.2));
  CHECK(times.size() == records.size());

  SUBCASE("empty pick list yields no records") {
    CHECK(run_tracker({}, cfg, cm, 0.0, 1.0).empty());
  }
}

TEST_CASE("tracker config validation") {
  TrackerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("fov order") {
    cfg.fov_low = cfg.fov_high;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SUBCASE("p_detect range") {
    cfg.p_detect = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SUBCASE("zone must fit the field of view") {
    cfg.init_zone = 1000.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SUBCASE("n_init positive") {
    cfg.n_init = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
  SUBCASE("gate probability in (0, 1]") {
    cfg.gate_probability = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
  }
}
