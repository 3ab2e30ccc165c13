#include "dastrack/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace dastrack {

void PreprocessConfig::validate() const {
  if (!(target_rate > 0)) throw config_error("target_rate must be positive");
  if (!(antialias_cutoff > 0) || !(antialias_cutoff < target_rate / 2)) {
    throw config_error("antialias_cutoff must lie in (0, target_rate/2)");
  }
  if (!(band_low > 0) || !(band_low < band_high) || !(band_high < target_rate / 2)) {
    throw config_error("bandpass edges must satisfy 0 < low < high < target_rate/2");
  }
  if (!(rms_window > 0)) throw config_error("rms_window must be positive");
  if (!(rms_overlap >= 0) || !(rms_overlap < 1)) throw config_error("rms_overlap must lie in [0, 1)");
  if (smoothing_kappa < 1 || smoothing_kappa % 2 == 0) {
    throw config_error("smoothing_kappa must be odd and >= 1");
  }
  if (!std::isfinite(log_floor)) throw config_error("log_floor must be finite");
}

namespace detail {

namespace {

using cplx = std::complex<double>;

/// Left-half-plane poles of the analog Butterworth prototype with Im > 0,
/// i.e. one representative per conjugate pair. `order` must be even.
std::vector<cplx> prototype_upper_poles(int order) {
  if (order < 2 || order % 2 != 0) throw config_error("filter order must be even and >= 2");
  std::vector<cplx> poles;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double prewarp(double freq_hz, double fs) {
  return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs);
}

cplx bilinear_pole(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

Biquad section_for_pole_pair(cplx z, double b0, double b1, double b2) {
  if (std::abs(z) >= 1.0) throw domain_error("unstable filter section");
  return Biquad{b0, b1, b2, -2.0 * z.real(), std::norm(z)};
}

/// Direct form II transposed single-section pass, seeded with the section's
/// steady-state response to a constant input of `level`.
void run_section(std::vector<double>& x, const Biquad& s, double level) {
  const double hs = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double s1 = (hs - s.b0) * level;
  double s2 = (s.b2 - s.a2 * hs) * level;
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + s1;
    s1 = s.b1 * in - s.a1 * out + s2;
    s2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

void run_cascade(std::vector<double>& x, const std::vector<Biquad>& sections) {
  if (x.empty()) return;
  double level = x.front();
  for (const Biquad& s : sections) {
    const double hs = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    run_section(x, s, level);
    level *= hs;
  }
}

}  // namespace

std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz,
                                         double sample_rate_hz) {
  if (!(0 < low_hz && low_hz < high_hz && high_hz < sample_rate_hz / 2)) {
    throw config_error("bandpass edges must satisfy 0 < low < high < nyquist");
  }
  const double fs = sample_rate_hz;
  const double w1 = prewarp(low_hz, fs);
  const double w2 = prewarp(high_hz, fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<Biquad> sections;
  double denom = 1.0;  // product of |2fs - s|^2 over upper-half analog poles
  for (const cplx& p : prototype_upper_poles(order)) {
    const cplx a = 0.5 * bw * p;
    const cplx disc = std::sqrt(a * a - w0sq);
    for (const cplx& s : {a + disc, a - disc}) {
      denom *= std::norm(2.0 * fs - s);
      sections.push_back(section_for_pole_pair(bilinear_pole(s, fs), 1.0, 0.0, -1.0));
    }
  }
  const double k_d = std::pow(bw * 2.0 * fs, order) / denom;
  const double g = std::pow(k_d, 1.0 / static_cast<double>(sections.size()));
  for (Biquad& s : sections) {
    s.b0 *= g;
    s.b2 *= g;
  }
  return sections;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz) {
  if (!(0 < cutoff_hz && cutoff_hz < sample_rate_hz / 2)) {
    throw config_error("lowpass cutoff must satisfy 0 < cutoff < nyquist");
  }
  const double fs = sample_rate_hz;
  const double wc = prewarp(cutoff_hz, fs);

  std::vector<Biquad> sections;
  double denom = 1.0;
  for (const cplx& p : prototype_upper_poles(order)) {
    const cplx s = wc * p;
    denom *= std::norm(2.0 * fs - s);
    sections.push_back(section_for_pole_pair(bilinear_pole(s, fs), 1.0, 2.0, 1.0));
  }
  const double k_d = std::pow(wc, order) / denom;
  const double g = std::pow(k_d, 1.0 / static_cast<double>(sections.size()));
  for (Biquad& s : sections) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sections;
}

std::vector<double> filtfilt(std::span<const double> x, const std::vector<Biquad>& sections) {
  const std::size_t n = x.size();
  std::vector<double> result(x.begin(), x.end());
  if (n < 4 || sections.empty()) return result;

  std::size_t pad = 3 * (2 * sections.size() + 1);
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  run_cascade(ext, sections);
  std::reverse(ext.begin(), ext.end());
  run_cascade(ext, sections);
  std::reverse(ext.begin(), ext.end());

  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n), result.begin());
  return result;
}

double cascade_gain(const std::vector<Biquad>& sections, double freq_hz, double sample_rate_hz) {
  const cplx w = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  cplx h = 1.0;
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * w + s.b2 * w * w) / (1.0 + s.a1 * w + s.a2 * w * w);
  }
  return std::abs(h);
}

}  // namespace detail

namespace {

/// Pull one channel into a double buffer.
std::vector<double> channel_series(const StrainBatch& b, std::size_t c) {
  std::vector<double> x(b.meta.n_samples);
  for (std::size_t s = 0; s < b.meta.n_samples; ++s) x[s] = b.at(s, c);
  return x;
}

}  // namespace

StrainBatch resample(const StrainBatch& batch, const PreprocessConfig& cfg) {
  cfg.validate();
  const double in_rate = 1.0 / batch.meta.sample_interval;
  const double ratio = in_rate / cfg.target_rate;
  const long factor = std::lround(ratio);
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio) {
    throw config_error("input rate " + std::to_string(in_rate) +
                       " Hz is not an integer multiple of target rate");
  }
  if (factor == 1) return batch;
  if (!(cfg.antialias_cutoff < in_rate / 2)) {
    throw config_error("antialias_cutoff must be below the input nyquist");
  }

  const auto sections = detail::butterworth_lowpass(4, cfg.antialias_cutoff, in_rate);
  StrainBatch out;
  out.meta = batch.meta;
  out.meta.sample_interval = batch.meta.sample_interval * static_cast<double>(factor);
  out.meta.n_samples =
      (batch.meta.n_samples + static_cast<std::size_t>(factor) - 1) / static_cast<std::size_t>(factor);
  out.values.resize(out.meta.n_samples * out.meta.n_channels);
  for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
    const auto filtered = detail::filtfilt(channel_series(batch, c), sections);
    for (std::size_t s = 0; s < out.meta.n_samples; ++s) {
      out.at(s, c) = static_cast<float>(filtered[s * static_cast<std::size_t>(factor)]);
    }
  }
  return out;
}

StrainBatch detrend(const StrainBatch& batch) {
  const std::size_t n = batch.meta.n_samples;
  if (n < 2) throw domain_error("detrend needs at least 2 samples per channel");
  StrainBatch out = batch;
  const double xbar = (static_cast<double>(n) - 1.0) / 2.0;
  double sxx = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double d = static_cast<double>(s) - xbar;
    sxx += d * d;
  }
  for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
    double ybar = 0.0;
    for (std::size_t s = 0; s < n; ++s) ybar += batch.at(s, c);
    ybar /= static_cast<double>(n);
    double sxy = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      sxy += (static_cast<double>(s) - xbar) * (batch.at(s, c) - ybar);
    }
    const double slope = sxy / sxx;
    for (std::size_t s = 0; s < n; ++s) {
      out.at(s, c) =
          static_cast<float>(batch.at(s, c) - (ybar + slope * (static_cast<double>(s) - xbar)));
    }
    // Remove the float-rounding residue of the stored values; a constant is
    // still within the fitted-line space.
    double rbar = 0.0;
    for (std::size_t s = 0; s < n; ++s) rbar += out.at(s, c);
    rbar /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      out.at(s, c) = static_cast<float>(out.at(s, c) - rbar);
    }
  }
  return out;
}

StrainBatch bandpass(const StrainBatch& batch, const PreprocessConfig& cfg) {
  const double fs = 1.0 / batch.meta.sample_interval;
  if (!(cfg.band_low > 0) || !(cfg.band_low < cfg.band_high) || !(cfg.band_high < fs / 2)) {
    throw config_error("bandpass edges must satisfy 0 < low < high < nyquist of the batch");
  }
  const auto sections = detail::butterworth_bandpass(4, cfg.band_low, cfg.band_high, fs);
  StrainBatch out = batch;
  for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
    const auto filtered = detail::filtfilt(channel_series(batch, c), sections);
    for (std::size_t s = 0; s < batch.meta.n_samples; ++s) {
      out.at(s, c) = static_cast<float>(filtered[s]);
    }
  }
  return out;
}

StrainBatch rolling_rms(const StrainBatch& batch, const PreprocessConfig& cfg) {
  cfg.validate();
  const double fs = 1.0 / batch.meta.sample_interval;
  const long win_l = std::lround(cfg.rms_window * fs);
  if (win_l < 1) throw config_error("rms_window shorter than one sample");
  const std::size_t win = static_cast<std::size_t>(win_l);
  const long hop_l = std::lround(static_cast<double>(win) * (1.0 - cfg.rms_overlap));
  const std::size_t hop = static_cast<std::size_t>(std::max(1L, hop_l));

  StrainBatch out;
  out.meta = batch.meta;
  out.meta.sample_interval = static_cast<double>(hop) * batch.meta.sample_interval;
  out.meta.t0 =
      batch.meta.t0 + (static_cast<double>(win) - 1.0) / 2.0 * batch.meta.sample_interval;
  out.meta.n_samples =
      batch.meta.n_samples >= win ? (batch.meta.n_samples - win) / hop + 1 : 0;
  out.values.resize(out.meta.n_samples * out.meta.n_channels);
  for (std::size_t j = 0; j < out.meta.n_samples; ++j) {
    const std::size_t start = j * hop;
    for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
      double acc = 0.0;
      for (std::size_t s = start; s < start + win; ++s) {
        const double v = batch.at(s, c);
        acc += v * v;
      }
      out.at(j, c) = static_cast<float>(std::sqrt(acc / static_cast<double>(win)));
    }
  }
  return out;
}

StrainBatch log_transform(const StrainBatch& batch, double floor) {
  StrainBatch out = batch;
  for (std::size_t s = 0; s < batch.meta.n_samples; ++s) {
    for (std::size_t c = 0; c < batch.meta.n_channels; ++c) {
      const double v = batch.at(s, c);
      if (v < 0) {
        throw domain_error("log_transform: negative value at row " + std::to_string(s) +
                           ", col " + std::to_string(c));
      }
      out.at(s, c) = static_cast<float>(std::max(std::log(v), floor));
    }
  }
  out.meta.is_log_rms = true;
  return out;
}

StrainBatch smooth_channels(const StrainBatch& batch, int kappa) {
  if (kappa < 1 || kappa % 2 == 0 ||
      static_cast<std::size_t>(kappa) > batch.meta.n_channels) {
    throw config_error("smoothing span must be odd, >= 1 and <= n_channels");
  }
  if (kappa == 1) return batch;
  const std::size_t nc = batch.meta.n_channels;
  const std::size_t half = static_cast<std::size_t>(kappa) / 2;
  StrainBatch out = batch;
  std::vector<double> prefix(nc + 1);
  for (std::size_t s = 0; s < batch.meta.n_samples; ++s) {
    prefix[0] = 0.0;
    for (std::size_t c = 0; c < nc; ++c) prefix[c + 1] = prefix[c] + batch.at(s, c);
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t lo = c >= half ? c - half : 0;
      const std::size_t hi = std::min(c + half, nc - 1);
      const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
      out.at(s, c) = static_cast<float>(mean);
    }
  }
  return out;
}

StrainBatch log_rms_pipeline(const StrainBatch& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  if (raw.meta.is_log_rms) throw domain_error("log_rms_pipeline: input is already log-RMS");
  StrainBatch b = resample(raw, cfg);
  b = detrend(b);
  b = bandpass(b, cfg);
  b = rolling_rms(b, cfg);
  return log_transform(b, cfg.log_floor);
}

}  // namespace dastrack
