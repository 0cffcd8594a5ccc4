#pragma once

// Deterministic synthetic content: test frames with natural-image-like
// structure, the half-flat/half-texture extraction fixture, moving clips for
// the toy trainer, and flat noisy footage to harvest noise sequences from.

#include "vsraug/core.hpp"

#include <numbers>

namespace vsraug::synthetic {

/// Smooth gradients, a few soft blobs, a hard edge and some fine texture, plus
/// mild sensor noise. Content is shifted by (dx, dy) pixels so that
/// consecutive calls with growing offsets form a panning clip.
inline Frame natural_frame(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed, double dx = 0.0,
                           double dy = 0.0, double noise = 0.01) {
  RngStream layout = derive_stream(seed, "synthetic.layout");
  struct Blob {
    double x, y, r, amp;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 5; ++i)
    blobs.push_back({layout.next_uniform(), layout.next_uniform(), 0.08 + 0.2 * layout.next_uniform(),
                     layout.next_range(-0.35, 0.35)});
  const double fx = layout.next_range(6.0, 14.0), fy = layout.next_range(6.0, 14.0);
  const double edge = layout.next_range(0.3, 0.7);
  std::vector<double> tint(c);
  for (double &t : tint) t = layout.next_range(0.8, 1.2);
  const double pi = std::numbers::pi;

  Frame out(c, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double u = (static_cast<double>(x) + dx) / static_cast<double>(w);
      const double v = (static_cast<double>(y) + dy) / static_cast<double>(h);
      double base = 0.35 + 0.25 * u + 0.15 * v;
      for (const Blob &b : blobs) {
        const double d2 = (u - b.x) * (u - b.x) + (v - b.y) * (v - b.y);
        base += b.amp * std::exp(-d2 / (2.0 * b.r * b.r));
      }
      if (u > edge) base += 0.12;
      base += 0.05 * std::sin(2.0 * pi * fx * u) * std::sin(2.0 * pi * fy * v);
      for (std::size_t ch = 0; ch < c; ++ch) out(ch, y, x) = base * tint[ch];
    }
  if (noise > 0) {
    RngStream n = derive_stream(seed, "synthetic.noise", 0, static_cast<std::uint64_t>(std::llround(dx * 1000 + dy)));
    for (double &v : out.data()) v += noise * n.next_gaussian();
  }
  out.clamp();
  return out;
}

/// A clip panning one pixel per frame across a natural frame.
inline VideoSequence panning_clip(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed,
                                  double noise = 0.0) {
  std::vector<Frame> frames;
  for (std::size_t f = 0; f < n; ++f) frames.push_back(natural_frame(c, h, w, seed, static_cast<double>(f), 0.5 * f, noise));
  return VideoSequence(std::move(frames));
}

/// Left half (columns < w/2): flat 0.5 plus Gaussian noise of std `noise_std`.
/// Right half: a one-pixel 0/1 checkerboard (window variance 0.25).
inline VideoSequence half_flat_video(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double noise_std,
                                     std::uint64_t seed) {
  std::vector<Frame> frames;
  for (std::size_t f = 0; f < n; ++f) {
    Frame fr(c, h, w);
    RngStream rng = derive_stream(seed, "synthetic.half_flat", 0, f);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          fr(ch, y, x) = x < w / 2 ? clamp01(0.5 + noise_std * rng.next_gaussian()) : static_cast<double>((x + y) % 2);
    frames.push_back(std::move(fr));
  }
  return VideoSequence(std::move(frames));
}

/// Uniformly textured clip: every window is a 0/1 checkerboard.
inline VideoSequence texture_video(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  std::vector<Frame> frames;
  for (std::size_t f = 0; f < n; ++f) {
    Frame fr(c, h, w);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) fr(ch, y, x) = static_cast<double>((x + y + f) % 2);
    frames.push_back(std::move(fr));
  }
  return VideoSequence(std::move(frames));
}

/// Flat footage: each `tile` x `tile` block holds its own grey level, and every
/// frame adds fresh Gaussian sensor noise of std `noise_std`.
inline VideoSequence flat_noise_video(std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::size_t tile,
                                      double noise_std, std::uint64_t seed) {
  RngStream levels = derive_stream(seed, "synthetic.flat_levels");
  const std::size_t ty = (h + tile - 1) / tile, tx = (w + tile - 1) / tile;
  std::vector<double> level(ty * tx);
  for (double &l : level) l = levels.next_range(0.25, 0.75);
  std::vector<Frame> frames;
  for (std::size_t f = 0; f < n; ++f) {
    Frame fr(c, h, w);
    RngStream rng = derive_stream(seed, "synthetic.flat_noise", 0, f);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          fr(ch, y, x) = clamp01(level[(y / tile) * tx + x / tile] + noise_std * rng.next_gaussian());
    frames.push_back(std::move(fr));
  }
  return VideoSequence(std::move(frames));
}

} // namespace vsraug::synthetic
