#include "str/features.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "str/error.h"

namespace str {

namespace {

// FFTW's planner is not thread-safe; execution with distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr char kFeatureMagic[8] = {'S', 'T', 'R', 'F', 'E', 'A', 'T', '\0'};

} // namespace

struct LogMelExtractor::Fft {
  explicit Fft(int n) : size(n) {
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

std::size_t window_samples(const FeatureOptions& options) {
  return static_cast<std::size_t>(
      seconds_to_samples(options.frame_length_ms / 1000.0, options.sample_rate));
}

std::size_t hop_samples(const FeatureOptions& options) {
  return static_cast<std::size_t>(
      seconds_to_samples(options.frame_shift_ms / 1000.0, options.sample_rate));
}

std::size_t num_frames(std::size_t n_samples, const FeatureOptions& options) {
  const std::size_t window = window_samples(options);
  if (n_samples < window) {
    return 0;
  }
  return 1 + (n_samples - window) / hop_samples(options);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

LogMelExtractor::LogMelExtractor(FeatureOptions options) : options_(options) {
  const std::size_t window = window_samples(options_);
  if (options_.sample_rate <= 0 || options_.n_mels <= 0 || window == 0 ||
      hop_samples(options_) == 0 || static_cast<std::size_t>(options_.fft_size) < window) {
    throw Error(ErrorCode::InvalidConfig, "inconsistent feature options");
  }
  const double nyquist = options_.sample_rate / 2.0;
  const double high = options_.high_freq > 0.0 ? options_.high_freq : nyquist;
  if (options_.low_freq < 0.0 || high > nyquist || options_.low_freq >= high) {
    throw Error(ErrorCode::InvalidConfig, "mel frequency range outside [0, Nyquist]");
  }

  window_.resize(window);
  for (std::size_t i = 0; i < window; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(window - 1));
  }

  const int n_bins = options_.fft_size / 2 + 1;
  const double mel_low = hz_to_mel(options_.low_freq);
  const double mel_high = hz_to_mel(high);
  const double delta = (mel_high - mel_low) / (options_.n_mels + 1);
  filters_.assign(static_cast<std::size_t>(options_.n_mels),
                  std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (int m = 0; m < options_.n_mels; ++m) {
    const double left = mel_low + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * options_.sample_rate / options_.fft_size);
      if (mel <= left || mel >= right) {
        continue;
      }
      filters_[m][k] = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
    }
  }
  fft_ = std::make_unique<Fft>(options_.fft_size);
}

LogMelExtractor::~LogMelExtractor() = default;

FeatureMatrix LogMelExtractor::compute(std::span<const double> samples) const {
  const std::size_t window = window_.size();
  if (samples.size() < window) {
    throw Error(ErrorCode::TooShort, std::to_string(samples.size()) + " samples, need " +
                                         std::to_string(window));
  }
  const std::size_t hop = hop_samples(options_);
  const std::size_t frames = num_frames(samples.size(), options_);
  const auto n_bins = static_cast<std::size_t>(options_.fft_size / 2 + 1);
  FeatureMatrix out(frames, static_cast<std::size_t>(options_.n_mels));

  std::mt19937_64 rng(options_.dither_seed);
  std::normal_distribution<double> gauss;
  std::vector<double> frame(window);
  std::vector<double> power(n_bins);

  for (std::size_t t = 0; t < frames; ++t) {
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(t * hop), window, frame.begin());
    if (options_.dither > 0.0) {
      for (double& x : frame) {
        x += options_.dither * gauss(rng);
      }
    }
    if (options_.preemphasis > 0.0) {
      for (std::size_t i = window - 1; i > 0; --i) {
        frame[i] -= options_.preemphasis * frame[i - 1];
      }
      frame[0] -= options_.preemphasis * frame[0];
    }
    std::memset(fft_->in, 0, sizeof(double) * static_cast<std::size_t>(fft_->size));
    for (std::size_t i = 0; i < window; ++i) {
      fft_->in[i] = frame[i] * window_[i];
    }
    fftw_execute(fft_->plan);
    for (std::size_t k = 0; k < n_bins; ++k) {
      power[k] = fft_->out[k][0] * fft_->out[k][0] + fft_->out[k][1] * fft_->out[k][1];
    }
    auto row = out.row(t);
    for (std::size_t m = 0; m < filters_.size(); ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) {
        energy += filters_[m][k] * power[k];
      }
      row[m] = std::log(std::max(energy, options_.energy_floor));
    }
  }
  return out;
}

FeatureMatrix LogMelExtractor::compute(const Waveform& wave) const {
  if (wave.sample_rate != options_.sample_rate) {
    throw Error(ErrorCode::RateMismatch, "waveform is " + std::to_string(wave.sample_rate) +
                                             " Hz, extractor expects " +
                                             std::to_string(options_.sample_rate));
  }
  std::vector<double> samples(wave.samples.begin(), wave.samples.end());
  return compute(samples);
}

FeatureMatrix logmel(const Waveform& wave, const FeatureOptions& options) {
  FeatureOptions opts = options;
  opts.sample_rate = wave.sample_rate;
  return LogMelExtractor(opts).compute(wave);
}

FeatureMatrix cmvn(const FeatureMatrix& features) {
  const std::size_t rows = features.rows();
  const std::size_t cols = features.cols();
  FeatureMatrix out = features;
  if (rows == 0) {
    return out;
  }
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      mean += features(r, c);
    }
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = features(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows);
    const double scale = var > 1e-8 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      out(r, c) = (features(r, c) - mean) * scale;
    }
  }
  return out;
}

void write_features(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::vector<char> bytes(16 + features.data().size() * 4);
  std::memcpy(bytes.data(), kFeatureMagic, 8);
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      bytes[at + static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
  };
  put32(8, static_cast<std::uint32_t>(features.rows()));
  put32(12, static_cast<std::uint32_t>(features.cols()));
  std::size_t at = 16;
  for (double v : features.data()) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, 4);
    put32(at, bits);
    at += 4;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto get32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
  };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kFeatureMagic, 8) != 0) {
    throw Error(ErrorCode::CorruptHeader, path.string() + " is not a feature file");
  }
  const std::size_t rows = get32(8);
  const std::size_t cols = get32(12);
  if (bytes.size() != 16 + rows * cols * 4) {
    throw Error(ErrorCode::CorruptHeader, path.string() + " has the wrong payload size");
  }
  FeatureMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::uint32_t bits = get32(16 + 4 * (r * cols + c));
      float f = 0.0F;
      std::memcpy(&f, &bits, 4);
      m(r, c) = f;
    }
  }
  return m;
}

} // namespace str
