#pragma once

// PCM clips, 16-bit WAV I/O, resampling and log-mel summary features.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/io.hpp"

namespace qb {

inline constexpr int pipeline_rate = 16000;

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = pipeline_rate;
  int label = 0;
  std::string id;
  std::string provenance;  // empty for clean clips; trigger description for poisoned ones
};

/// Linear-interpolation resampling; output length round(n * to / from).
inline std::vector<double> resample_linear(std::span<const double> x, int from_rate, int to_rate) {
  require(from_rate > 0 && to_rate > 0, "sample rates must be positive");
  if (from_rate == to_rate || x.empty()) return {x.begin(), x.end()};
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * to_rate / static_cast<double>(from_rate)));
  std::vector<double> y(std::max<std::size_t>(n_out, 1));
  const double ratio = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= x.size()) {
      y[i] = x.back();
      continue;
    }
    const double w = pos - static_cast<double>(k);
    y[i] = (1.0 - w) * x[k] + w * x[k + 1];
  }
  return y;
}

// ---------------------------------------------------------------------------
// WAV (RIFF, PCM 16-bit little-endian)

namespace detail {

inline std::uint32_t read_u32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

inline std::uint16_t read_u16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

/// Decodes a 16-bit PCM WAV image. Multi-channel input is averaged to mono.
inline AudioClip decode_wav(const std::string& bytes, const std::string& id = {}) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw InvalidInput("not a RIFF/WAVE file: " + id);
  int channels = 0;
  int rate = 0;
  int bits = 0;
  std::size_t data_at = 0;
  std::size_t data_len = 0;
  for (std::size_t at = 12; at + 8 <= bytes.size();) {
    const std::string tag = bytes.substr(at, 4);
    const std::size_t len = detail::read_u32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (tag == "fmt ") {
      if (len < 16 || body + 16 > bytes.size()) throw InvalidInput("truncated fmt chunk: " + id);
      if (detail::read_u16(bytes, body) != 1) throw InvalidInput("only PCM WAV is supported: " + id);
      channels = detail::read_u16(bytes, body + 2);
      rate = static_cast<int>(detail::read_u32(bytes, body + 4));
      bits = detail::read_u16(bytes, body + 14);
    } else if (tag == "data") {
      data_at = body;
      data_len = std::min(len, bytes.size() - body);
    }
    at = body + len + (len & 1);
  }
  if (bits != 16) throw InvalidInput("only 16-bit PCM WAV is supported: " + id);
  if (channels < 1 || rate <= 0 || data_at == 0) throw InvalidInput("WAV missing fmt or data chunk: " + id);
  const std::size_t frames = data_len / (2 * static_cast<std::size_t>(channels));
  AudioClip clip;
  clip.id = id;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(detail::read_u16(bytes, data_at + 2 * (f * channels + c)));
      acc += raw / 32768.0;
    }
    clip.samples[f] = acc / channels;
  }
  return clip;
}

inline std::string encode_wav(const AudioClip& clip) {
  require(clip.sample_rate > 0, "WAV sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::string b;
  b.reserve(44 + 2 * n);
  b += "RIFF";
  detail::put_u32(b, 36 + 2 * n);
  b += "WAVEfmt ";
  detail::put_u32(b, 16);
  detail::put_u16(b, 1);
  detail::put_u16(b, 1);
  detail::put_u32(b, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32(b, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16(b, 2);
  detail::put_u16(b, 16);
  b += "data";
  detail::put_u32(b, 2 * n);
  for (double s : clip.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    detail::put_u16(b, static_cast<std::uint16_t>(q));
  }
  return b;
}

/// Reads a WAV file and brings it to the pipeline rate.
inline AudioClip read_wav(const std::filesystem::path& path, int target_rate = pipeline_rate) {
  AudioClip clip = decode_wav(io::read_file(path), path.string());
  if (clip.sample_rate != target_rate) {
    clip.samples = resample_linear(clip.samples, clip.sample_rate, target_rate);
    clip.sample_rate = target_rate;
  }
  for (auto& s : clip.samples) s = std::clamp(s, -1.0, 1.0);
  return clip;
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  io::write_file_atomic(path, encode_wav(clip));
}

// ---------------------------------------------------------------------------
// Spectral features

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  require(n > 0 && (n & (n - 1)) == 0, "fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k)
    twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = twiddle[k * stride];
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct FeatureConfig {
  std::size_t window = 1024;
  std::size_t hop = 512;
  std::size_t bands = 64;
  double f_min = 0.0;
  double f_max = 8000.0;
  int sample_rate = pipeline_rate;
  double floor = 1e-10;
};

struct FeatureVector {
  std::vector<double> values;  // band means then band standard deviations
  bool padded = false;         // clip was shorter than one window
};

/// Periodic Hann STFT -> triangular HTK-mel filterbank -> log energy, summarized
/// over time by per-band mean and standard deviation.
class MelFeatures {
 public:
  explicit MelFeatures(FeatureConfig cfg = {}) : cfg_(cfg) {
    require(cfg_.window >= 2 && (cfg_.window & (cfg_.window - 1)) == 0, "window must be a power of two");
    require(cfg_.hop >= 1 && cfg_.bands >= 1 && cfg_.f_max > cfg_.f_min, "invalid feature configuration");
    hann_.resize(cfg_.window);
    for (std::size_t i = 0; i < cfg_.window; ++i)
      hann_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / cfg_.window);
    const std::size_t bins = cfg_.window / 2 + 1;
    edges_.resize(cfg_.bands + 2);
    const double m_lo = hz_to_mel(cfg_.f_min);
    const double m_hi = hz_to_mel(cfg_.f_max);
    for (std::size_t i = 0; i < edges_.size(); ++i)
      edges_[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(cfg_.bands + 1));
    weights_.assign(cfg_.bands, std::vector<double>(bins, 0.0));
    for (std::size_t b = 0; b < cfg_.bands; ++b) {
      const double lo = edges_[b], mid = edges_[b + 1], hi = edges_[b + 2];
      for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * cfg_.sample_rate / static_cast<double>(cfg_.window);
        double w = 0.0;
        if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
        else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
        weights_[b][k] = w;
      }
      std::size_t first = 0;
      while (first < bins && weights_[b][first] == 0.0) ++first;
      std::size_t last = bins;
      while (last > first && weights_[b][last - 1] == 0.0) --last;
      support_.emplace_back(first, last);
    }
  }

  const FeatureConfig& config() const noexcept { return cfg_; }
  /// Band edge frequencies in Hz; band b spans edges[b] .. edges[b + 2], peaking at edges[b + 1].
  const std::vector<double>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return 2 * cfg_.bands; }

  /// Log-mel energies, one row per frame.
  std::vector<std::vector<double>> log_mel(std::span<const double> x, bool* padded = nullptr) const {
    std::vector<double> buf(x.begin(), x.end());
    const bool short_clip = buf.size() < cfg_.window;
    if (short_clip) buf.resize(cfg_.window, 0.0);
    if (padded) *padded = short_clip;
    const std::size_t frames = 1 + (buf.size() - cfg_.window) / cfg_.hop;
    const std::size_t bins = cfg_.window / 2 + 1;
    std::vector<std::vector<double>> out(frames, std::vector<double>(cfg_.bands));
    std::vector<std::complex<double>> spec(cfg_.window);
    std::vector<double> power(bins);
    for (std::size_t f = 0; f < frames; ++f) {
      const std::size_t start = f * cfg_.hop;
      for (std::size_t i = 0; i < cfg_.window; ++i) spec[i] = {buf[start + i] * hann_[i], 0.0};
      fft(spec);
      for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
      for (std::size_t b = 0; b < cfg_.bands; ++b) {
        double e = 0.0;
        for (std::size_t k = support_[b].first; k < support_[b].second; ++k) e += weights_[b][k] * power[k];
        out[f][b] = std::log(cfg_.floor + e);
      }
    }
    return out;
  }

  FeatureVector operator()(const AudioClip& clip) const {
    require(clip.sample_rate == cfg_.sample_rate, "clip must be at the pipeline sample rate");
    require(!clip.samples.empty(), "clip is empty: " + clip.id);
    FeatureVector fv;
    const auto frames = log_mel(clip.samples, &fv.padded);
    const std::size_t nb = cfg_.bands;
    fv.values.assign(2 * nb, 0.0);
    const double n = static_cast<double>(frames.size());
    // offsets from the first frame, so constant bands come out exact
    for (const auto& row : frames)
      for (std::size_t b = 0; b < nb; ++b) fv.values[b] += row[b] - frames[0][b];
    for (std::size_t b = 0; b < nb; ++b) fv.values[b] = frames[0][b] + fv.values[b] / n;
    for (const auto& row : frames)
      for (std::size_t b = 0; b < nb; ++b) {
        const double d = row[b] - fv.values[b];
        fv.values[nb + b] += d * d;
      }
    for (std::size_t b = 0; b < nb; ++b) fv.values[nb + b] = std::sqrt(fv.values[nb + b] / n);
    return fv;
  }

 private:
  FeatureConfig cfg_;
  std::vector<double> hann_;
  std::vector<double> edges_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::pair<std::size_t, std::size_t>> support_;  // nonzero bin range per band
};

inline const MelFeatures& default_features() {
  static const MelFeatures instance{};
  return instance;
}

inline FeatureVector extract_features(const AudioClip& clip) { return default_features()(clip); }

}  // namespace qb
