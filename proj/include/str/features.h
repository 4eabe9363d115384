#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "str/audio.h"

namespace str {

/// Row-major T x dim matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct FeatureOptions {
  int sample_rate = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int n_mels = 80;
  int fft_size = 512;
  double low_freq = 20.0;
  double high_freq = 0.0; // <= 0 means Nyquist
  double energy_floor = 1e-10;
  double preemphasis = 0.0;
  double dither = 0.0;
  std::uint64_t dither_seed = 0;
};

std::size_t window_samples(const FeatureOptions& options);
std::size_t hop_samples(const FeatureOptions& options);

/// 1 + (n - window) / hop for n >= window, else 0.
std::size_t num_frames(std::size_t n_samples, const FeatureOptions& options);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Hann window, zero padding to `fft_size`, power spectrum, triangular HTK-mel
/// filters, natural log of the floored energy. Holds an FFTW plan, so one
/// instance per thread.
class LogMelExtractor {
 public:
  explicit LogMelExtractor(FeatureOptions options = {});
  ~LogMelExtractor();
  LogMelExtractor(const LogMelExtractor&) = delete;
  LogMelExtractor& operator=(const LogMelExtractor&) = delete;

  FeatureMatrix compute(std::span<const double> samples) const;
  FeatureMatrix compute(const Waveform& wave) const;

  const FeatureOptions& options() const noexcept { return options_; }
  // n_mels x (fft_size / 2 + 1)
  const std::vector<std::vector<double>>& filters() const noexcept { return filters_; }

 private:
  struct Fft;

  FeatureOptions options_;
  std::vector<double> window_;
  std::vector<std::vector<double>> filters_;
  std::unique_ptr<Fft> fft_;
};

FeatureMatrix logmel(const Waveform& wave, const FeatureOptions& options = {});

/// Per-dimension mean removal, and variance scaling where the variance
/// exceeds 1e-8.
FeatureMatrix cmvn(const FeatureMatrix& features);

// Binary layout: "STRFEAT\0", uint32 T, uint32 dim, then T*dim little-endian
// float32 values, row-major.
void write_features(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

} // namespace str
