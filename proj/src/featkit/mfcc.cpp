#include "awe/featkit.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "awe/error.hpp"

namespace awe::featkit {

FeatureSequence::FeatureSequence(std::vector<double> data, std::size_t dim, double frame_shift)
    : data_(std::move(data)), dim_(dim), frame_shift_(frame_shift) {
  if (dim == 0 || data_.size() % dim != 0)
    throw ShapeMismatch("feature data length is not a multiple of the dimension");
  num_frames_ = data_.size() / dim;
}

std::size_t MfccConfig::frame_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(frame_length * sample_rate));
}

std::size_t MfccConfig::shift_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(frame_shift * sample_rate));
}

void MfccConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw InvalidConfig("sample rate must be positive");
  if (frame_shift <= 0 || frame_shift > frame_length)
    throw InvalidConfig("frame shift must be positive and no longer than the frame");
  if (frame_samples(sample_rate) == 0 || shift_samples(sample_rate) == 0)
    throw InvalidConfig("frame or shift rounds to zero samples");
  if (n_fft < frame_samples(sample_rate)) throw InvalidConfig("n_fft shorter than a frame");
  if (preemph < 0.0 || preemph >= 1.0) throw InvalidConfig("preemphasis must lie in [0, 1)");
  if (log_floor <= 0.0) throw InvalidConfig("log floor must be positive");
  if (n_mels == 0 || n_ceps == 0 || n_ceps > n_mels)
    throw InvalidConfig("need 0 < n_ceps <= n_mels");
  double nyquist = sample_rate / 2.0;
  double top = high_freq > 0 ? high_freq : nyquist;
  if (top > nyquist) throw InvalidConfig("highest mel edge above Nyquist");
  if (low_freq < 0 || low_freq >= top) throw InvalidConfig("bad mel frequency range");
}

Waveform preemphasize(const Waveform& w, double alpha) {
  if (alpha < 0.0 || alpha >= 1.0) throw InvalidConfig("preemphasis must lie in [0, 1)");
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate};
  if (w.samples.empty()) return out;
  out.samples[0] = w.samples[0];
  for (std::size_t n = 1; n < w.samples.size(); ++n)
    out.samples[n] = w.samples[n] - alpha * w.samples[n - 1];
  return out;
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> win(n, 1.0);
  if (n == 1) return win;
  for (std::size_t i = 0; i < n; ++i)
    win[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n - 1));
  return win;
}

std::vector<std::vector<double>> frame_signal(const Waveform& w, const MfccConfig& cfg) {
  const std::size_t len = w.samples.size();
  const std::size_t flen = cfg.frame_samples(w.sample_rate);
  const std::size_t shift = cfg.shift_samples(w.sample_rate);
  if (flen == 0 || shift == 0) throw InvalidConfig("frame or shift rounds to zero samples");
  if (len < flen)
    throw SignalTooShort("signal of " + std::to_string(len) + " samples is shorter than one " +
                         std::to_string(flen) + "-sample frame");
  const std::size_t count = 1 + (len - flen) / shift;
  const auto win = hamming_window(flen);
  std::vector<std::vector<double>> frames(count, std::vector<double>(flen));
  for (std::size_t f = 0; f < count; ++f) {
    const double* src = w.samples.data() + f * shift;
    for (std::size_t i = 0; i < flen; ++i) frames[f][i] = src[i] * win[i];
  }
  return frames;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filterbank(const MfccConfig& cfg, int sample_rate) {
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double top = cfg.high_freq > 0 ? cfg.high_freq : sample_rate / 2.0;
  const double mel_lo = hz_to_mel(cfg.low_freq);
  const double mel_hi = hz_to_mel(top);
  const double step = (mel_hi - mel_lo) / static_cast<double>(cfg.n_mels + 1);

  std::vector<double> fb(cfg.n_mels * bins, 0.0);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = mel_lo + step * m;
    const double center = left + step;
    const double right = center + step;
    for (std::size_t k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / cfg.n_fft);
      double weight = 0.0;
      if (mel > left && mel <= center)
        weight = (mel - left) / (center - left);
      else if (mel > center && mel < right)
        weight = (right - mel) / (right - center);
      fb[m * bins + k] = weight;
    }
  }
  return fb;
}

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace

FeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg) {
  cfg.validate(w.sample_rate);
  const auto frames = frame_signal(preemphasize(w, cfg.preemph), cfg);
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const auto fb = mel_filterbank(cfg, w.sample_rate);

  std::vector<double> in(cfg.n_fft, 0.0);
  std::vector<fftw_complex> spec(bins);
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(cfg.n_fft), in.data(), spec.data(),
                                    FFTW_ESTIMATE));
  }

  // Orthonormal DCT-II basis, n_ceps x n_mels.
  std::vector<double> dct(cfg.n_ceps * cfg.n_mels);
  const double n = static_cast<double>(cfg.n_mels);
  for (std::size_t i = 0; i < cfg.n_ceps; ++i) {
    const double scale = i == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t j = 0; j < cfg.n_mels; ++j)
      dct[i * cfg.n_mels + j] =
          scale * std::cos(std::numbers::pi * i * (static_cast<double>(j) + 0.5) / n);
  }

  FeatureSequence out(frames.size(), cfg.n_ceps, cfg.frame_shift);
  std::vector<double> power(bins), logmel(cfg.n_mels);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::fill(in.begin(), in.end(), 0.0);
    std::copy(frames[f].begin(), frames[f].end(), in.begin());
    fftw_execute_dft_r2c(plan.get(), in.data(), spec.data());
    for (std::size_t k = 0; k < bins; ++k)
      power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      const double* row = fb.data() + m * bins;
      for (std::size_t k = 0; k < bins; ++k) e += row[k] * power[k];
      logmel[m] = std::log(std::max(e, cfg.log_floor));
    }
    auto frame = out.frame(f);
    for (std::size_t i = 0; i < cfg.n_ceps; ++i) {
      double c = 0.0;
      const double* row = dct.data() + i * cfg.n_mels;
      for (std::size_t j = 0; j < cfg.n_mels; ++j) c += row[j] * logmel[j];
      frame[i] = c;
    }
    if (!cfg.use_c0) {
      double energy = 0.0;
      for (double s : frames[f]) energy += s * s;
      frame[0] = std::log(std::max(energy, cfg.log_floor));
    }
  }
  return out;
}

FeatureSequence cmvn(const FeatureSequence& f) {
  constexpr double kVarianceFloor = 1e-8;
  const std::size_t T = f.num_frames(), D = f.dim();
  FeatureSequence out(T, D, f.frame_shift());
  for (std::size_t d = 0; d < D; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += f(t, d);
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (std::size_t t = 0; t < T; ++t) var += (f(t, d) - mean) * (f(t, d) - mean);
    var /= static_cast<double>(T);
    const double inv_sd = 1.0 / std::sqrt(std::max(var, kVarianceFloor));
    for (std::size_t t = 0; t < T; ++t) out(t, d) = (f(t, d) - mean) * inv_sd;
  }
  return out;
}

FeatureSequence slice_segment(const FeatureSequence& f, std::size_t start, std::size_t end) {
  if (start >= end || end > f.num_frames())
    throw OutOfRange("slice [" + std::to_string(start) + ", " + std::to_string(end) +
                     ") outside sequence of " + std::to_string(f.num_frames()) + " frames");
  const auto src = f.data().subspan(start * f.dim(), (end - start) * f.dim());
  return FeatureSequence(std::vector<double>(src.begin(), src.end()), f.dim(), f.frame_shift());
}

}  // namespace awe::featkit
