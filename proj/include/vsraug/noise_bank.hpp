#pragma once

#include "vsraug/core.hpp"

#include <cstdint>
#include <vector>

namespace vsraug {

/// Acceptance thresholds for window sequences, on the [0,1] pixel scale.
struct NoiseThresholds {
  double sigma = 0.01;      // per-window variance must stay below this
  double mu = 0.05;         // per-window mean must stay above this
  double sigma_var = 1e-5;  // bound on the variance of the per-window variances
  double sigma_mean = 1e-4; // bound on the variance of the per-window means

  void validate() const {
    if (!(sigma >= 0 && mu >= 0 && sigma_var >= 0 && sigma_mean >= 0))
      fail(ErrorKind::invalid_argument, "noise_extract", "noise thresholds must be >= 0");
  }
  bool operator==(const NoiseThresholds &) const = default;
};

/// One accepted window sequence. The payload is stored as float32 (the bank's
/// on-disk precision) in frame-major, channel-major, row-major order.
struct NoiseEntry {
  std::vector<float> data;
  std::uint64_t video_id = 0;
  std::size_t x = 0;
  std::size_t y = 0;
  std::vector<double> means;
  std::vector<double> variances;

  bool operator==(const NoiseEntry &) const = default;
};

/// Offline collection of noise sequences sharing (n, c, h, w).
struct NoiseBank {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<NoiseEntry> entries;
  NoiseThresholds thresholds;
  bool zero_mean = false;

  std::size_t entry_values() const noexcept { return n * c * h * w; }
  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  void validate() const {
    for (const NoiseEntry &e : entries)
      if (e.data.size() != entry_values())
        fail(ErrorKind::invalid_argument, "io", "noise bank entry size does not match bank dims");
  }

  /// Widen entry `i` into a clip.
  VideoSequence sequence(std::size_t i) const {
    const NoiseEntry &e = entries.at(i);
    std::vector<Frame> frames;
    frames.reserve(n);
    const std::size_t stride = c * h * w;
    for (std::size_t f = 0; f < n; ++f) {
      std::vector<double> values(e.data.begin() + f * stride, e.data.begin() + (f + 1) * stride);
      frames.emplace_back(c, h, w, std::move(values));
    }
    return VideoSequence(std::move(frames));
  }

  bool operator==(const NoiseBank &) const = default;
};

} // namespace vsraug
