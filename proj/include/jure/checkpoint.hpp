#pragma once

// Binary checkpoint container (all integers u64 and reals IEEE-754 binary64,
// little-endian):
//
//   magic      8 bytes  "JURECKPT"
//   version    1 byte   kCheckpointVersion
//   C H K n_blocks           u64 ×4
//   zero_init_output         u64 (0/1)
//   norm mean[C] std[C]      f64 ×2C
//   score median, iqr        f64 ×2
//   w_amp w_diff w_trend w_corr  f64 ×4, trend_window u64
//   window                   u64
//   config text              u64 length, then that many bytes
//   n_params                 u64
//   params                   f64 × n_params, declaration order
//
// Anything after the payload, or a payload shorter than the header implies,
// is rejected.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/model.hpp"
#include "jure/scoring.hpp"

namespace jure {

inline constexpr std::uint8_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'J', 'U', 'R', 'E', 'C', 'K', 'P', 'T'};

enum class LoadFailure { malformed, version_mismatch, inconsistent_dimensions, truncated };

inline const char* to_string(LoadFailure f) {
  switch (f) {
    case LoadFailure::malformed: return "malformed checkpoint";
    case LoadFailure::version_mismatch: return "checkpoint version mismatch";
    case LoadFailure::inconsistent_dimensions: return "checkpoint dimensions inconsistent with payload";
    case LoadFailure::truncated: return "truncated checkpoint";
  }
  return "checkpoint error";
}

class CheckpointError : public Error {
 public:
  CheckpointError(LoadFailure reason, const std::string& detail)
      : Error(ErrorKind::load, std::string(to_string(reason)) + ": " + detail), reason_(reason) {}
  LoadFailure reason() const noexcept { return reason_; }

 private:
  LoadFailure reason_;
};

/// A trained network with everything scoring needs.
struct Checkpoint {
  JuReNet<double> net;
  bool zero_init_output = true;
  NormStats norm;
  ScoreStats score_stats;
  ScoreWeights weights;
  std::size_t window = 100;
  std::string config;  // resolved run configuration, informational
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  void text(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text() {
    const auto n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw CheckpointError(LoadFailure::truncated, "needed " + std::to_string(n) +
                                                        " more bytes at offset " + std::to_string(pos_));
    }
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize(const Checkpoint& ck) {
  const auto& s = ck.net.shape();
  require_dims(ck.norm.mean.size() == s.channels && ck.norm.std.size() == s.channels,
               "checkpoint: normalization statistics do not match channel count");
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u8(kCheckpointVersion);
  w.u64(s.channels);
  w.u64(s.hidden);
  w.u64(s.kernel);
  w.u64(s.blocks);
  w.u64(ck.zero_init_output ? 1 : 0);
  for (double v : ck.norm.mean) w.f64(v);
  for (double v : ck.norm.std) w.f64(v);
  w.f64(ck.score_stats.median);
  w.f64(ck.score_stats.iqr);
  w.f64(ck.weights.amp);
  w.f64(ck.weights.diff);
  w.f64(ck.weights.trend);
  w.f64(ck.weights.corr);
  w.u64(ck.weights.trend_window);
  w.u64(ck.window);
  w.text(ck.config);
  w.u64(ck.net.parameter_count());
  for (const auto* p : ck.net.parameters()) {
    for (double v : p->value.values()) w.f64(v);
  }
  return w.bytes();
}

inline Checkpoint deserialize(const std::string& bytes) {
  if (bytes.size() < kCheckpointMagic.size() ||
      !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw CheckpointError(LoadFailure::malformed, "bad magic");
  }
  detail::ByteReader r(bytes);
  for (std::size_t i = 0; i < kCheckpointMagic.size(); ++i) r.u8();
  const auto version = r.u8();
  if (version != kCheckpointVersion) {
    throw CheckpointError(LoadFailure::version_mismatch, "file version " + std::to_string(version) +
                                                             ", expected " +
                                                             std::to_string(kCheckpointVersion));
  }
  ModelShape shape;
  shape.channels = r.u64();
  shape.hidden = r.u64();
  shape.kernel = r.u64();
  shape.blocks = r.u64();
  constexpr std::uint64_t kSane = 1u << 20;
  if (shape.channels == 0 || shape.hidden == 0 || shape.blocks == 0 || shape.kernel % 2 == 0 ||
      shape.channels > kSane || shape.hidden > kSane || shape.kernel > kSane || shape.blocks > kSane) {
    throw CheckpointError(LoadFailure::malformed, "invalid dimension header");
  }
  Checkpoint ck;
  const auto zero_init = r.u64();
  if (zero_init > 1) throw CheckpointError(LoadFailure::malformed, "invalid init flag");
  ck.zero_init_output = zero_init == 1;
  ck.norm.mean.resize(shape.channels);
  ck.norm.std.resize(shape.channels);
  ck.norm.constant.resize(shape.channels);
  for (auto& v : ck.norm.mean) v = r.f64();
  for (std::size_t c = 0; c < shape.channels; ++c) {
    ck.norm.std[c] = r.f64();
    ck.norm.constant[c] = ck.norm.std[c] == 0.0;
  }
  ck.score_stats.median = r.f64();
  ck.score_stats.iqr = r.f64();
  ck.weights.amp = r.f64();
  ck.weights.diff = r.f64();
  ck.weights.trend = r.f64();
  ck.weights.corr = r.f64();
  ck.weights.trend_window = r.u64();
  ck.window = r.u64();
  ck.config = r.text();
  const auto n_params = r.u64();
  const auto expected = parameter_count_formula(shape);
  if (n_params != expected) {
    throw CheckpointError(LoadFailure::inconsistent_dimensions,
                          "header declares " + std::to_string(n_params) + " parameters, dimensions imply " +
                              std::to_string(expected));
  }
  if (r.remaining() != 8 * n_params) {
    if (r.remaining() < 8 * n_params) {
      throw CheckpointError(LoadFailure::truncated, "payload holds " + std::to_string(r.remaining() / 8) +
                                                        " of " + std::to_string(n_params) + " values");
    }
    throw CheckpointError(LoadFailure::inconsistent_dimensions, "trailing bytes after payload");
  }
  ck.net = JuReNet<double>::init(shape, 0, true);
  for (auto* p : ck.net.parameters()) {
    for (auto& v : p->value.values()) v = r.f64();
  }
  return ck;
}

/// Writes through a temporary file so a failed write leaves no partial
/// checkpoint behind.
inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string bytes = serialize(ck);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot write checkpoint '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::data, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorKind::data, "cannot move checkpoint into place at '" + path + "'");
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace jure
