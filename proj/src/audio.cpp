#include "str/audio.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "str/error.h"

namespace str {

namespace fs = std::filesystem;

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

bool read_exact(std::istream& in, std::uint8_t* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

// Walks the RIFF chunks up to the start of the data chunk and leaves the
// stream positioned at the first sample.
WavInfo parse_header(std::istream& in) {
  std::uint8_t riff[12];
  if (!read_exact(in, riff, 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::CorruptHeader, "not a RIFF/WAVE file");
  }
  WavInfo info;
  bool have_fmt = false;
  std::uint16_t block_align = 0;
  std::uint64_t offset = 12;
  while (true) {
    std::uint8_t chunk[8];
    if (!read_exact(in, chunk, 8)) {
      throw Error(ErrorCode::CorruptHeader, "no data chunk");
    }
    offset += 8;
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) {
        throw Error(ErrorCode::CorruptHeader, "fmt chunk too small");
      }
      std::vector<std::uint8_t> fmt(size + (size & 1));
      if (!read_exact(in, fmt.data(), fmt.size())) {
        throw Error(ErrorCode::CorruptHeader, "truncated fmt chunk");
      }
      offset += fmt.size();
      std::uint16_t format = le16(fmt.data());
      info.channels = le16(fmt.data() + 2);
      info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      block_align = le16(fmt.data() + 12);
      info.bits_per_sample = le16(fmt.data() + 14);
      if (format == kFormatExtensible) {
        if (size < 40) {
          throw Error(ErrorCode::CorruptHeader, "extensible fmt chunk too small");
        }
        format = le16(fmt.data() + 24); // first two bytes of the sub-format GUID
      }
      if (format != kFormatPcm) {
        throw Error(ErrorCode::UnsupportedFormat, "format tag " + std::to_string(format));
      }
      if (info.channels != 1) {
        throw Error(ErrorCode::UnsupportedFormat, std::to_string(info.channels) + " channels");
      }
      if (info.bits_per_sample != 16) {
        throw Error(ErrorCode::UnsupportedFormat,
                    std::to_string(info.bits_per_sample) + " bits per sample");
      }
      if (info.sample_rate <= 0 || block_align != 2) {
        throw Error(ErrorCode::CorruptHeader, "inconsistent fmt fields");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) {
        throw Error(ErrorCode::CorruptHeader, "data chunk before fmt chunk");
      }
      if (size % block_align != 0) {
        throw Error(ErrorCode::CorruptHeader, "data size is not a whole number of samples");
      }
      info.n_samples = size / block_align;
      info.data_offset = offset;
      return info;
    } else {
      const std::uint64_t skip = size + (size & 1);
      in.seekg(static_cast<std::streamoff>(skip), std::ios::cur);
      if (!in) {
        throw Error(ErrorCode::CorruptHeader, "truncated chunk");
      }
      offset += skip;
    }
  }
}

Waveform read_payload(std::istream& in, const WavInfo& info) {
  Waveform wave;
  wave.sample_rate = info.sample_rate;
  std::vector<std::uint8_t> raw(info.n_samples * 2);
  if (!read_exact(in, raw.data(), raw.size())) {
    throw Error(ErrorCode::CorruptHeader, "payload shorter than the header claims");
  }
  wave.samples.resize(info.n_samples);
  for (std::size_t i = 0; i < info.n_samples; ++i) {
    wave.samples[i] = static_cast<std::int16_t>(le16(raw.data() + 2 * i));
  }
  return wave;
}

} // namespace

WavInfo read_wav_info(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  try {
    return parse_header(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Waveform read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  try {
    const WavInfo info = parse_header(in);
    return read_payload(in, info);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Waveform read_wav_bytes(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        std::ios::binary);
  const WavInfo info = parse_header(in);
  return read_payload(in, info);
}

std::vector<std::uint8_t> wav_bytes(const Waveform& wave) {
  if (wave.sample_rate <= 0) {
    throw Error(ErrorCode::UnsupportedFormat, "sample rate must be positive");
  }
  const auto data_size = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);
  for (std::int16_t s : wave.samples) {
    put16(out, static_cast<std::uint16_t>(s));
  }
  return out;
}

void write_wav(const Waveform& wave, const fs::path& path) {
  const auto bytes = wav_bytes(wave);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
}

std::int64_t seconds_to_samples(double seconds, int sample_rate) {
  const double x = seconds * static_cast<double>(sample_rate);
  const double floor_x = std::floor(x);
  // Times are decimal strings; 0.5 ticks that binary arithmetic nudges to
  // 0.49999... must still round away from zero.
  if (std::abs((x - floor_x) - 0.5) < 1e-7) {
    return static_cast<std::int64_t>(x >= 0.0 ? floor_x + 1.0 : floor_x);
  }
  return std::llround(x);
}

std::vector<SegmentRef> segment_refs(const AugmentedExample& example, int sample_rate) {
  std::vector<SegmentRef> refs;
  refs.reserve(example.segments.size());
  for (const auto& s : example.segments) {
    refs.push_back({s.utterance_id, seconds_to_samples(s.t_start, sample_rate),
                    seconds_to_samples(s.t_end, sample_rate)});
  }
  return refs;
}

Waveform materialize(const AugmentedExample& example, const Corpus& corpus,
                     const MaterializeOptions& options) {
  std::map<std::string, Waveform, std::less<>> sources;
  Waveform out;
  for (std::size_t i = 0; i < example.segments.size(); ++i) {
    const Segment& seg = example.segments[i];
    auto it = sources.find(seg.utterance_id);
    if (it == sources.end()) {
      const Utterance* utt = corpus.find(seg.utterance_id);
      if (utt == nullptr) {
        throw Error(ErrorCode::InconsistentInputs, "segment source " + seg.utterance_id +
                                                       " is not in the corpus");
      }
      it = sources.emplace(seg.utterance_id, read_wav(corpus.resolve_audio(*utt))).first;
    }
    const Waveform& src = it->second;
    if (out.sample_rate == 0) {
      out.sample_rate = src.sample_rate;
    } else if (out.sample_rate != src.sample_rate) {
      throw Error(ErrorCode::RateMismatch, seg.utterance_id + " is " +
                                               std::to_string(src.sample_rate) + " Hz, expected " +
                                               std::to_string(out.sample_rate));
    }
    const std::int64_t start = seconds_to_samples(seg.t_start, src.sample_rate);
    const std::int64_t end = seconds_to_samples(seg.t_end, src.sample_rate);
    const auto n = static_cast<std::int64_t>(src.samples.size());
    if (start < 0 || end > n || start >= end) {
      throw Error(ErrorCode::SegmentOutOfBounds,
                  seg.utterance_id + " [" + std::to_string(start) + ", " + std::to_string(end) +
                      ") of " + std::to_string(n) + " samples");
    }
    if (i > 0 && options.junction_silence_ms > 0.0) {
      const auto gap = seconds_to_samples(options.junction_silence_ms / 1000.0, out.sample_rate);
      out.samples.insert(out.samples.end(), static_cast<std::size_t>(gap), 0);
    }
    out.samples.insert(out.samples.end(), src.samples.begin() + start, src.samples.begin() + end);
  }
  return out;
}

} // namespace str
