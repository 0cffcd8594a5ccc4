#pragma once

// Pixel tensors, error types and the seeded stream contract shared by every
// other header in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vsraug {

enum class ErrorKind {
  invalid_argument,
  io,
  format,
  unsupported_version,
  numeric,
  config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::invalid_argument: return "invalid-argument";
  case ErrorKind::io: return "io-error";
  case ErrorKind::format: return "format-error";
  case ErrorKind::unsupported_version: return "unsupported-version";
  case ErrorKind::numeric: return "numeric-error";
  case ErrorKind::config: return "config-error";
  }
  return "unknown";
}

/// Library error. `module` names the component that raised it so the CLI can
/// print module-qualified codes such as `degrade.invalid-argument`.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string module, const std::string &message)
      : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string &module() const noexcept { return module_; }
  std::string code() const { return module_ + "." + std::string(to_string(kind_)); }

private:
  ErrorKind kind_;
  std::string module_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string module, const std::string &message) {
  throw Error(kind, std::move(module), message);
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Planar image: `channels` planes of `height` x `width`, row-major per plane.
///
/// Values are nominally in [0,1]. The constructor does not clamp; operations
/// that promise a [0,1] result clamp on their way out. The toy restorer is the
/// one producer of unclamped frames (its output must stay linear).
class Frame {
public:
  Frame() = default;
  Frame(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : c_(channels), h_(height), w_(width), data_(channels * height * width, fill) {}
  Frame(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
      : c_(channels), h_(height), w_(width), data_(std::move(data)) {
    if (data_.size() != c_ * h_ * w_) {
      fail(ErrorKind::invalid_argument, "core",
           "frame data length " + std::to_string(data_.size()) + " != c*h*w = " +
               std::to_string(c_ * h_ * w_));
    }
  }

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return h_ * w_; }

  double &operator()(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * h_ + y) * w_ + x]; }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * h_ + y) * w_ + x]; }

  std::span<double> plane(std::size_t c) { return {data_.data() + c * h_ * w_, h_ * w_}; }
  std::span<const double> plane(std::size_t c) const { return {data_.data() + c * h_ * w_, h_ * w_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double> &values() noexcept { return data_; }
  const std::vector<double> &values() const noexcept { return data_; }

  bool same_shape(const Frame &o) const noexcept { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  void clamp() {
    for (double &v : data_) v = clamp01(v);
  }

  bool operator==(const Frame &) const = default;

  /// Copies the `h` x `w` window whose top-left corner is (x, y).
  Frame crop(std::size_t x, std::size_t y, std::size_t h, std::size_t w) const {
    if (x + w > w_ || y + h > h_) fail(ErrorKind::invalid_argument, "core", "crop window outside frame");
    Frame out(c_, h, w);
    for (std::size_t c = 0; c < c_; ++c)
      for (std::size_t r = 0; r < h; ++r)
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>((c * h_ + y + r) * w_ + x), w, &out(c, r, 0));
    return out;
  }

private:
  std::size_t c_ = 0;
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<double> data_;
};

/// An ordered clip of frames sharing one (c, h, w).
class VideoSequence {
public:
  VideoSequence() = default;
  explicit VideoSequence(std::vector<Frame> frames) : frames_(std::move(frames)) { validate(); }
  VideoSequence(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : frames_(n, Frame(c, h, w, fill)) {
    validate();
  }

  std::size_t size() const noexcept { return frames_.size(); }
  std::size_t channels() const { return frames_.front().channels(); }
  std::size_t height() const { return frames_.front().height(); }
  std::size_t width() const { return frames_.front().width(); }
  std::size_t element_count() const { return size() * frames_.front().size(); }

  Frame &operator[](std::size_t i) { return frames_[i]; }
  const Frame &operator[](std::size_t i) const { return frames_[i]; }
  std::vector<Frame> &frames() noexcept { return frames_; }
  const std::vector<Frame> &frames() const noexcept { return frames_; }

  auto begin() { return frames_.begin(); }
  auto end() { return frames_.end(); }
  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

  bool same_shape(const VideoSequence &o) const {
    return size() == o.size() && frames_.front().same_shape(o.frames_.front());
  }

  bool operator==(const VideoSequence &) const = default;

private:
  void validate() const {
    if (frames_.empty()) fail(ErrorKind::invalid_argument, "core", "video sequence needs at least one frame");
    for (const Frame &f : frames_)
      if (!f.same_shape(frames_.front()))
        fail(ErrorKind::format, "core", "frames of a video sequence must share (c,h,w)");
  }

  std::vector<Frame> frames_;
};

// ---------------------------------------------------------------------------
// Seeded streams
//
// derive_stream mixes a 64-bit seed with a hash of the lane tags through the
// SplitMix64 finalizer; draws come from xorshift64*. Both are pinned so that
// any implementation reproduces the same pipeline bit for bit:
//
//   tag_hash = FNV-1a-64(purpose bytes)
//   for v in (video, frame, patch): tag_hash = mix64(tag_hash ^ mix64(v + golden))
//   state    = mix64(seed ^ mix64(tag_hash)); if state == 0: state = golden
//   next:    x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
//   uniform: (next >> 11) * 2^-53
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

struct StreamTags {
  std::string purpose;
  std::uint64_t video = 0;
  std::uint64_t frame = 0;
  std::uint64_t patch = 0;

  std::uint64_t hash() const noexcept {
    std::uint64_t h = fnv1a64(purpose);
    for (std::uint64_t v : {video, frame, patch}) h = mix64(h ^ mix64(v + kGolden));
    return h;
  }
};

class RngStream {
public:
  explicit RngStream(std::uint64_t state) noexcept : state_(state == 0 ? kGolden : state) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform real in [0,1) with 53 random bits.
  double next_uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, k); unbiased (multiply-shift with rejection).
  std::size_t next_choice(std::size_t k) {
    if (k == 0) fail(ErrorKind::invalid_argument, "core", "next_choice needs k >= 1");
    const auto bound = static_cast<std::uint64_t>(k);
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      const unsigned __int128 m = static_cast<unsigned __int128>(r) * bound;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::size_t>(m >> 64);
    }
  }

  /// Uniform real in [lo, hi].
  double next_range(double lo, double hi) noexcept { return lo + (hi - lo) * next_uniform(); }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double next_gaussian() noexcept {
    const double u1 = 1.0 - next_uniform(); // (0,1]
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t state() const noexcept { return state_; }
  bool operator==(const RngStream &) const = default;

private:
  std::uint64_t state_;
};

inline RngStream derive_stream(std::uint64_t seed, const StreamTags &tags) noexcept {
  return RngStream(mix64(seed ^ mix64(tags.hash())));
}

inline RngStream derive_stream(std::uint64_t seed, std::string purpose, std::uint64_t video = 0,
                               std::uint64_t frame = 0, std::uint64_t patch = 0) {
  return derive_stream(seed, StreamTags{std::move(purpose), video, frame, patch});
}

/// Sub-seed for a nested stage: the next 64-bit word of a derived stream.
inline std::uint64_t derive_seed(std::uint64_t seed, const StreamTags &tags) noexcept {
  RngStream s = derive_stream(seed, tags);
  return s.next_u64();
}

inline double max_abs_diff(const Frame &a, const Frame &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs_diff(const VideoSequence &a, const VideoSequence &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs_diff(a[i], b[i]));
  return m;
}

} // namespace vsraug
