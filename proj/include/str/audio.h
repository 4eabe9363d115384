#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "str/augmenter.h"
#include "str/corpus.h"

namespace str {

/// Mono 16-bit PCM.
struct Waveform {
  std::vector<std::int16_t> samples;
  int sample_rate = 0;

  bool operator==(const Waveform&) const = default;
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::uint64_t n_samples = 0;
  std::uint64_t data_offset = 0;
};

struct SegmentRef {
  std::string utterance_id;
  std::int64_t start_sample = 0;
  std::int64_t end_sample = 0; // exclusive

  std::int64_t length() const { return end_sample - start_sample; }
  bool operator==(const SegmentRef&) const = default;
};

/// Header only; does not require the payload to be present.
WavInfo read_wav_info(const std::filesystem::path& path);

Waveform read_wav(const std::filesystem::path& path);
Waveform read_wav_bytes(std::span<const std::uint8_t> bytes);

void write_wav(const Waveform& wave, const std::filesystem::path& path);
std::vector<std::uint8_t> wav_bytes(const Waveform& wave);

/// The only place seconds become sample indices: t * sr rounded half away
/// from zero, with products within 1e-7 of a half treated as exact halves.
std::int64_t seconds_to_samples(double seconds, int sample_rate);

std::vector<SegmentRef> segment_refs(const AugmentedExample& example, int sample_rate);

struct MaterializeOptions {
  double junction_silence_ms = 0.0;
};

/// Concatenates the example's slices in order. Samples are copied verbatim;
/// the only added samples are the optional zero-valued junction gaps.
Waveform materialize(const AugmentedExample& example, const Corpus& corpus,
                     const MaterializeOptions& options = {});

} // namespace str
