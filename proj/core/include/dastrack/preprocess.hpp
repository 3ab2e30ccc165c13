#pragma once

#include <span>
#include <vector>

#include "dastrack/types.hpp"

namespace dastrack {

/// Parameters for the raw-strain-to-log-RMS chain.
struct PreprocessConfig {
  double target_rate = 1000.0;      ///< Hz after resampling
  double antialias_cutoff = 400.0;  ///< Hz, lowpass applied before decimation
  double band_low = 15.0;           ///< Hz, bandpass lower edge
  double band_high = 150.0;         ///< Hz, bandpass upper edge
  double rms_window = 0.4;          ///< s, RMS window length
  double rms_overlap = 0.5;         ///< fraction of window shared by neighbours
  int smoothing_kappa = 31;         ///< channels in the moving average (odd)
  double log_floor = -30.0;         ///< clamp for log of tiny RMS values

  /// Throws config_error on out-of-range values.
  void validate() const;
};

/// Decimate to cfg.target_rate after an anti-alias lowpass at cfg.antialias_cutoff.
/// Identity when the batch is already at target rate; the input rate must be an
/// integer multiple of the target rate (config_error otherwise).
[[nodiscard]] StrainBatch resample(const StrainBatch& batch, const PreprocessConfig& cfg);

/// Subtract the per-channel least-squares line over time.
/// Throws domain_error when the batch has fewer than 2 samples.
[[nodiscard]] StrainBatch detrend(const StrainBatch& batch);

/// Zero-phase Butterworth bandpass (order-4 prototype, applied forward-backward)
/// between cfg.band_low and cfg.band_high. Edges must satisfy
/// 0 < low < high < nyquist for the batch's own sample rate.
[[nodiscard]] StrainBatch bandpass(const StrainBatch& batch, const PreprocessConfig& cfg);

/// Rolling RMS over windows of cfg.rms_window seconds with cfg.rms_overlap overlap.
/// Output sample s covers input window [s*hop, s*hop + window); its timestamp is
/// the window centre. Windows that do not fit completely are dropped.
[[nodiscard]] StrainBatch rolling_rms(const StrainBatch& batch, const PreprocessConfig& cfg);

/// Natural log of every cell, clamped below at `floor`. Marks the batch log-RMS.
/// Throws domain_error on negative input cells.
[[nodiscard]] StrainBatch log_transform(const StrainBatch& batch, double floor = -30.0);

/// Moving average across `kappa` adjacent channels at fixed time, truncated at
/// the array edges. `kappa` must be odd and <= n_channels; kappa == 1 is identity.
[[nodiscard]] StrainBatch smooth_channels(const StrainBatch& batch, int kappa);

/// Full chain raw strain -> log-RMS (resample, detrend, bandpass, rolling RMS,
/// log). Channel smoothing is *not* applied; callers choose kappa separately.
[[nodiscard]] StrainBatch log_rms_pipeline(const StrainBatch& raw, const PreprocessConfig& cfg);

namespace detail {

/// One second-order IIR section (direct form II transposed coefficients,
/// denominator normalized to {1, a1, a2}).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Cascaded-biquad digital Butterworth bandpass via the bilinear transform.
/// `order` is the lowpass-prototype order (even); the bandpass has 2*order poles.
[[nodiscard]] std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz,
                                                       double sample_rate_hz);

/// Cascaded-biquad digital Butterworth lowpass (even order).
[[nodiscard]] std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz,
                                                      double sample_rate_hz);

/// Zero-phase filtering: odd-reflection padding, forward pass, backward pass.
/// Each pass seeds every section with its steady-state response to the first sample.
[[nodiscard]] std::vector<double> filtfilt(std::span<const double> x,
                                           const std::vector<Biquad>& sections);

/// |H(e^{i 2 pi f / fs})| of a biquad cascade, for tests and demos.
[[nodiscard]] double cascade_gain(const std::vector<Biquad>& sections, double freq_hz,
                                  double sample_rate_hz);

}  // namespace detail

}  // namespace dastrack
