#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "str/error.h"
#include "str/features.h"
#include "support.h"

using namespace str;

namespace {

Waveform noise(std::size_t n, std::uint32_t seed, int amplitude = 3000) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(-amplitude, amplitude);
  Waveform w;
  w.sample_rate = 16000;
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(static_cast<std::int16_t>(d(rng)));
  return w;
}

// Direct O(N^2) DFT of one Hann-windowed frame followed by the same mel
// triangles, written without the library's filterbank code.
std::vector<double> slow_logmel_frame(const std::vector<double>& frame) {
  const int n_fft = 512;
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_bins, 0.0);
  for (int k = 0; k < n_bins; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / (frame.size() - 1.0));
      acc += frame[i] * w * std::polar(1.0, -2 * std::numbers::pi * k * i / n_fft);
    }
    power[k] = std::norm(acc);
  }
  auto mel = [](double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); };
  const double lo = mel(20.0);
  const double hi = mel(8000.0);
  const double step = (hi - lo) / 81.0;
  std::vector<double> out(80);
  for (int m = 0; m < 80; ++m) {
    const double l = lo + m * step;
    const double c = l + step;
    const double r = c + step;
    double e = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = mel(k * 16000.0 / n_fft);
      if (f > l && f < r) e += power[k] * (f <= c ? (f - l) / (c - l) : (r - f) / (r - c));
    }
    out[m] = std::log(std::max(e, 1e-10));
  }
  return out;
}

} // namespace

TEST(FrameCount, Examples) {
  const FeatureOptions o;
  EXPECT_EQ(window_samples(o), 400u);
  EXPECT_EQ(hop_samples(o), 160u);
  EXPECT_EQ(num_frames(400, o), 1u);
  EXPECT_EQ(num_frames(560, o), 1u + (560u - 400u) / 160u);
  EXPECT_EQ(num_frames(560, o), 2u);
  EXPECT_EQ(num_frames(399, o), 0u);
}

TEST(Logmel, ShapeAndTooShort) {
  const auto f = logmel(noise(560, 1));
  EXPECT_EQ(f.rows(), 2u);
  EXPECT_EQ(f.cols(), 80u);
  try {
    logmel(noise(399, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
}

TEST(Logmel, SilenceHitsFloor) {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(1600, 0);
  const auto f = logmel(w);
  for (double v : f.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(Logmel, MatchesSlowReference) {
  const Waveform w = noise(400, 4);
  const auto f = logmel(w);
  const std::vector<double> frame(w.samples.begin(), w.samples.end());
  const auto ref = slow_logmel_frame(frame);
  for (int m = 0; m < 80; ++m) EXPECT_NEAR(f(0, m), ref[m], 1e-6) << m;
}

TEST(Logmel, ScaleCovariance) {
  const Waveform x = noise(4000, 2, 1000);
  Waveform x2 = x;
  for (auto& s : x2.samples) s = static_cast<std::int16_t>(2 * s);
  const auto a = logmel(x);
  const auto b = logmel(x2);
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    ASSERT_NEAR(b.data()[i] - a.data()[i], std::log(4.0), 1e-5);
  }
}

TEST(Logmel, RateMismatch) {
  FeatureOptions o;
  o.sample_rate = 8000;
  const LogMelExtractor ex(o);
  try {
    ex.compute(noise(800, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateMismatch);
  }
}

TEST(Cmvn, Moments) {
  std::mt19937 rng(8);
  std::normal_distribution<double> g(3.0, 5.0);
  FeatureMatrix m(57, 80);
  for (auto& v : m.data()) v = g(rng);
  const auto n = cmvn(m);
  for (std::size_t c = 0; c < 80; ++c) {
    double mean = 0, sq = 0;
    for (std::size_t r = 0; r < 57; ++r) mean += n(r, c);
    mean /= 57;
    for (std::size_t r = 0; r < 57; ++r) sq += (n(r, c) - mean) * (n(r, c) - mean);
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_LT(std::abs(sq / 57 - 1.0), 1e-6);
  }
}

TEST(Cmvn, ConstantDimensionAndSingleFrame) {
  FeatureMatrix m(4, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    m(r, 0) = 7.0;
    m(r, 1) = static_cast<double>(r);
  }
  const auto n = cmvn(m);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_DOUBLE_EQ(n(r, 0), 0.0);
  FeatureMatrix one(1, 3);
  one(0, 0) = 1;
  one(0, 1) = -4;
  one(0, 2) = 9;
  const auto single = cmvn(one);
  for (double v : single.data()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(FeatureFile, RoundTrip) {
  test::TempDir dir;
  const auto f = logmel(noise(2000, 3));
  write_features(f, dir / "x.feat");
  const auto bytes = test::read_bytes(dir / "x.feat");
  EXPECT_EQ(bytes.size(), 16 + f.rows() * 80 * 4);
  const auto back = read_features(dir / "x.feat");
  ASSERT_EQ(back.rows(), f.rows());
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    EXPECT_EQ(back.data()[i], static_cast<double>(static_cast<float>(f.data()[i])));
  }
}

TEST(FeatureFile, BadMagic) {
  test::TempDir dir;
  test::write_file(dir / "x.feat", "NOTAFEAT00000000");
  try {
    read_features(dir / "x.feat");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptHeader);
  }
}
