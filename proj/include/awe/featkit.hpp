#pragma once

// Frame-level acoustic features: MFCC front end, CMVN and segment slicing.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace awe::featkit {

struct Waveform {
  std::vector<double> samples;  // 16-bit PCM scale
  int sample_rate = 16000;
};

// T x D row-major matrix of frame vectors.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(std::size_t num_frames, std::size_t dim, double frame_shift = 0.01)
      : data_(num_frames * dim, 0.0), num_frames_(num_frames), dim_(dim),
        frame_shift_(frame_shift) {}
  FeatureSequence(std::vector<double> data, std::size_t dim, double frame_shift = 0.01);

  std::size_t num_frames() const { return num_frames_; }
  std::size_t dim() const { return dim_; }
  double frame_shift() const { return frame_shift_; }
  bool empty() const { return num_frames_ == 0; }

  std::span<double> frame(std::size_t t) { return {data_.data() + t * dim_, dim_}; }
  std::span<const double> frame(std::size_t t) const {
    return {data_.data() + t * dim_, dim_};
  }
  double& operator()(std::size_t t, std::size_t d) { return data_[t * dim_ + d]; }
  double operator()(std::size_t t, std::size_t d) const { return data_[t * dim_ + d]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const FeatureSequence& other) const = default;

 private:
  std::vector<double> data_;
  std::size_t num_frames_ = 0;
  std::size_t dim_ = 0;
  double frame_shift_ = 0.01;
};

struct MfccConfig {
  double frame_length = 0.025;  // seconds
  double frame_shift = 0.010;   // seconds
  std::size_t n_fft = 512;
  std::size_t n_mels = 24;
  std::size_t n_ceps = 13;
  double preemph = 0.97;
  double log_floor = 1e-10;
  double low_freq = 0.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  bool use_c0 = true;      // c0 as first coefficient; otherwise log frame energy

  std::size_t frame_samples(int sample_rate) const;
  std::size_t shift_samples(int sample_rate) const;
  // Throws InvalidConfig when the config cannot be used at this rate.
  void validate(int sample_rate) const;
};

Waveform preemphasize(const Waveform& w, double alpha);

// Hamming-windowed frames, 1 + floor((len - frame) / shift) of them.
std::vector<std::vector<double>> frame_signal(const Waveform& w, const MfccConfig& cfg);

// Hamming window of length n.
std::vector<double> hamming_window(std::size_t n);

// Triangular mel filters as an n_mels x (n_fft/2 + 1) row-major matrix.
std::vector<double> mel_filterbank(const MfccConfig& cfg, int sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

FeatureSequence mfcc(const Waveform& w, const MfccConfig& cfg = {});

// Per-utterance mean and variance normalization of every coefficient.
FeatureSequence cmvn(const FeatureSequence& f);

// Frames [start, end). Throws OutOfRange unless 0 <= start < end <= T.
FeatureSequence slice_segment(const FeatureSequence& f, std::size_t start, std::size_t end);

// 16-bit little-endian PCM, mono.
Waveform read_wav(const std::string& path);
void write_wav(const Waveform& w, const std::string& path);
// Headerless float32 little-endian samples.
Waveform read_raw_float(const std::string& path, int sample_rate);

}  // namespace awe::featkit
