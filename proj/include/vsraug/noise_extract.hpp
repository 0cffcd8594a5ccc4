#pragma once

// Sequential noise extraction: tile a clip into window sequences that stay at
// a fixed spatial position across all frames, and keep the ones that are flat
// and temporally steady enough to be treated as pure sensor noise.

#include "vsraug/core.hpp"
#include "vsraug/noise_bank.hpp"

#include <optional>

namespace vsraug {

struct WindowSize {
  std::size_t h = 64;
  std::size_t w = 64;
  bool operator==(const WindowSize &) const = default;
};

/// A window at a fixed origin, tracked across every frame of a clip.
struct WindowSequence {
  std::size_t x = 0;
  std::size_t y = 0;
  WindowSize size;
  std::vector<Frame> windows; // one per frame

  std::size_t length() const noexcept { return windows.size(); }
};

struct SequenceStats {
  std::vector<double> means;
  std::vector<double> variances;
  double var_of_variances = 0.0;
  double var_of_means = 0.0;
};

/// Population mean and variance (divide by count) of a span.
inline std::pair<double, double> mean_variance(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double shift = values.front();
  double sum = 0.0;
  for (double v : values) sum += v - shift;
  const double mean = shift + sum / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return {mean, acc / static_cast<double>(values.size())};
}

/// Origins of the window grid in row-major order. Stride defaults to the
/// window size (non-overlapping tiling); any right/bottom remainder is dropped.
inline std::vector<std::pair<std::size_t, std::size_t>>
window_origins(std::size_t frame_h, std::size_t frame_w, WindowSize win, std::optional<WindowSize> stride = {}) {
  if (win.h == 0 || win.w == 0) fail(ErrorKind::invalid_argument, "noise_extract", "window dims must be >= 1");
  if (win.h > frame_h || win.w > frame_w)
    fail(ErrorKind::invalid_argument, "noise_extract",
         "window " + std::to_string(win.h) + "x" + std::to_string(win.w) + " larger than frame " +
             std::to_string(frame_h) + "x" + std::to_string(frame_w));
  const WindowSize step = stride.value_or(win);
  if (step.h == 0 || step.w == 0) fail(ErrorKind::invalid_argument, "noise_extract", "stride must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> origins;
  for (std::size_t y = 0; y + win.h <= frame_h; y += step.h)
    for (std::size_t x = 0; x + win.w <= frame_w; x += step.w) origins.emplace_back(x, y);
  return origins;
}

inline std::vector<WindowSequence> tile_windows(const VideoSequence &video, WindowSize win,
                                                std::optional<WindowSize> stride = {}) {
  std::vector<WindowSequence> out;
  for (auto [x, y] : window_origins(video.height(), video.width(), win, stride)) {
    WindowSequence ws{x, y, win, {}};
    ws.windows.reserve(video.size());
    for (const Frame &f : video) ws.windows.push_back(f.crop(x, y, win.h, win.w));
    out.push_back(std::move(ws));
  }
  return out;
}

inline SequenceStats sequence_stats(const WindowSequence &ws) {
  SequenceStats s;
  s.means.reserve(ws.length());
  s.variances.reserve(ws.length());
  for (const Frame &w : ws.windows) {
    auto [m, v] = mean_variance(w.data());
    s.means.push_back(m);
    s.variances.push_back(v);
  }
  s.var_of_variances = mean_variance(s.variances).second;
  s.var_of_means = mean_variance(s.means).second;
  return s;
}

/// Conjunction of the four predicates: every window flat (variance < sigma)
/// and bright enough (mean > mu), and both per-window statistics steady over
/// time (their variances within sigma_var and sigma_mean).
inline bool accept_sequence(const SequenceStats &stats, const NoiseThresholds &thr) {
  for (double v : stats.variances)
    if (!(v < thr.sigma)) return false;
  for (double m : stats.means)
    if (!(m > thr.mu)) return false;
  return stats.var_of_variances <= thr.sigma_var && stats.var_of_means <= thr.sigma_mean;
}

struct ExtractOptions {
  std::optional<WindowSize> stride;
  bool zero_mean = false; // store each window minus its own mean
  std::uint64_t video_id = 0;
};

inline NoiseBank extract_noise_bank(const VideoSequence &video, WindowSize win, const NoiseThresholds &thr,
                                    const ExtractOptions &opt = {}) {
  thr.validate();
  NoiseBank bank;
  bank.n = video.size();
  bank.c = video.channels();
  bank.h = win.h;
  bank.w = win.w;
  bank.thresholds = thr;
  bank.zero_mean = opt.zero_mean;
  for (const WindowSequence &ws : tile_windows(video, win, opt.stride)) {
    SequenceStats stats = sequence_stats(ws);
    if (!accept_sequence(stats, thr)) continue;
    NoiseEntry e;
    e.video_id = opt.video_id;
    e.x = ws.x;
    e.y = ws.y;
    e.data.reserve(bank.entry_values());
    for (std::size_t j = 0; j < ws.length(); ++j) {
      const double offset = opt.zero_mean ? stats.means[j] : 0.0;
      for (double v : ws.windows[j].data()) e.data.push_back(static_cast<float>(v - offset));
    }
    e.means = std::move(stats.means);
    e.variances = std::move(stats.variances);
    bank.entries.push_back(std::move(e));
  }
  return bank;
}

/// Append the entries of `other` (dims must agree, or `into` must be empty).
inline void merge_banks(NoiseBank &into, const NoiseBank &other) {
  if (into.entries.empty() && into.n == 0) {
    into = other;
    return;
  }
  if (into.n != other.n || into.c != other.c || into.h != other.h || into.w != other.w)
    fail(ErrorKind::invalid_argument, "noise_extract", "cannot merge banks with different dims");
  into.entries.insert(into.entries.end(), other.entries.begin(), other.entries.end());
}

} // namespace vsraug
