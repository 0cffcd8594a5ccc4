#pragma once

// NegMix: convex mixing of a noise sequence into a clip, followed by a
// patch-wise random central rotation (negative augmentation).

#include "vsraug/core.hpp"

#include <nlohmann/json.hpp>

namespace vsraug {

/// The eleven admissible rotation probabilities 0.0, 0.1, ..., 1.0.
inline constexpr std::size_t kProbabilityGridSize = 11;

inline double grid_probability(std::size_t index) { return static_cast<double>(index) / 10.0; }

inline bool on_probability_grid(double p) {
  return p >= 0.0 && p <= 1.0 && std::abs(p * 10.0 - std::round(p * 10.0)) < 1e-9;
}

/// Draw P uniformly from the eleven-value grid.
inline double sample_grid_probability(RngStream &stream) {
  return grid_probability(stream.next_choice(kProbabilityGridSize));
}

struct NegMixConfig {
  double m = 0.5;               // noise weight
  double p = 0.5;               // rotation probability
  std::size_t patch_scale = 4;  // patches per side
  bool temporal_lock = false;   // one decision per spatial site, shared by all frames
  std::uint64_t video_id = 0;   // lane tag for the per-patch streams

  void validate() const {
    if (!(m >= 0.0 && m <= 1.0)) fail(ErrorKind::invalid_argument, "negmix", "m must be in [0,1]");
    if (!on_probability_grid(p)) fail(ErrorKind::invalid_argument, "negmix", "p must be one of 0.0, 0.1, ..., 1.0");
    if (patch_scale == 0) fail(ErrorKind::invalid_argument, "negmix", "patch scale must be >= 1");
  }
};

struct PatchDecision {
  std::size_t frame = 0;
  std::size_t site = 0; // row-major index in the s x s patch grid
  double p = 0.0;       // the patch's own uniform draw
  bool rotate = false;  // p <= P
  int angle = 0;        // quarter turns counter-clockwise, 0..3

  bool operator==(const PatchDecision &) const = default;
};

struct NegResult {
  VideoSequence video;
  std::vector<PatchDecision> decisions;
};

/// Elementwise M * nsq + (1 - M) * v.
inline VideoSequence mix_noise(const VideoSequence &v, const VideoSequence &nsq, double m) {
  if (!v.same_shape(nsq)) fail(ErrorKind::invalid_argument, "negmix", "noise sequence shape differs from clip shape");
  if (!(m >= 0.0 && m <= 1.0)) fail(ErrorKind::invalid_argument, "negmix", "m must be in [0,1]");
  VideoSequence out = v;
  for (std::size_t f = 0; f < v.size(); ++f) {
    auto dst = out[f].data();
    auto a = v[f].data();
    auto b = nsq[f].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = clamp01(m * b[i] + (1.0 - m) * a[i]);
  }
  return out;
}

inline std::size_t patch_side(std::size_t h, std::size_t w, std::size_t s) {
  if (s == 0 || h % s != 0 || w % s != 0)
    fail(ErrorKind::invalid_argument, "negmix",
         "frame " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by patch scale " + std::to_string(s));
  if (h / s != w / s) fail(ErrorKind::invalid_argument, "negmix", "patches must be square (h/s == w/s)");
  return h / s;
}

/// Split into n * s^2 square patches, frame-major then row-major grid order.
inline std::vector<Frame> partition(const VideoSequence &v, std::size_t s) {
  const std::size_t d = patch_side(v.height(), v.width(), s);
  std::vector<Frame> patches;
  patches.reserve(v.size() * s * s);
  for (const Frame &f : v)
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t c = 0; c < s; ++c) patches.push_back(f.crop(c * d, r * d, d, d));
  return patches;
}

/// Inverse of partition.
inline VideoSequence assemble(std::span<const Frame> patches, std::size_t n, std::size_t s) {
  if (patches.size() != n * s * s || patches.empty())
    fail(ErrorKind::invalid_argument, "negmix", "patch count does not match n * s^2");
  const std::size_t d = patches.front().height(), ch = patches.front().channels();
  VideoSequence out(n, ch, d * s, d * s);
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t site = 0; site < s * s; ++site) {
      const Frame &p = patches[f * s * s + site];
      const std::size_t oy = (site / s) * d, ox = (site % s) * d;
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t y = 0; y < d; ++y)
          for (std::size_t x = 0; x < d; ++x) out[f](c, oy + y, ox + x) = p(c, y, x);
    }
  return out;
}

/// Counter-clockwise rotation by k quarter turns: one turn maps
/// out[i][j] = in[j][d-1-i].
inline Frame rotate_patch(const Frame &patch, int k) {
  if (patch.height() != patch.width()) fail(ErrorKind::invalid_argument, "negmix", "rotation needs a square patch");
  k = ((k % 4) + 4) % 4;
  if (k == 0) return patch;
  const std::size_t d = patch.height();
  Frame out(patch.channels(), d, d);
  for (std::size_t c = 0; c < patch.channels(); ++c)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        switch (k) {
        case 1: out(c, i, j) = patch(c, j, d - 1 - i); break;
        case 2: out(c, i, j) = patch(c, d - 1 - i, d - 1 - j); break;
        default: out(c, i, j) = patch(c, d - 1 - j, i); break;
        }
      }
  return out;
}

/// Per-patch decisions for a clip of n frames. Each patch (or each spatial
/// site, under temporal lock) draws p then an angle from its own stream, so
/// decisions do not depend on evaluation order.
inline std::vector<PatchDecision> draw_decisions(std::size_t n, const NegMixConfig &cfg, std::uint64_t seed) {
  const std::size_t sites = cfg.patch_scale * cfg.patch_scale;
  std::vector<PatchDecision> out;
  out.reserve(n * sites);
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t site = 0; site < sites; ++site) {
      RngStream rng = derive_stream(seed, "negmix.patch", cfg.video_id, cfg.temporal_lock ? 0 : f, site);
      PatchDecision d;
      d.frame = f;
      d.site = site;
      d.p = rng.next_uniform();
      d.angle = static_cast<int>(rng.next_choice(4));
      d.rotate = cfg.p > 0.0 && d.p <= cfg.p;
      out.push_back(d);
    }
  return out;
}

/// Rotate every flagged patch in place, using `angle_sign` = +1 to apply and
/// -1 to undo the recorded angles.
inline VideoSequence apply_decisions(const VideoSequence &v, std::span<const PatchDecision> decisions,
                                     std::size_t s, int angle_sign = 1) {
  const std::size_t d = patch_side(v.height(), v.width(), s);
  VideoSequence out = v;
  for (const PatchDecision &dec : decisions) {
    if (!dec.rotate || dec.angle % 4 == 0) continue;
    if (dec.frame >= v.size() || dec.site >= s * s)
      fail(ErrorKind::invalid_argument, "negmix", "decision refers to a patch outside the clip");
    const std::size_t oy = (dec.site / s) * d, ox = (dec.site % s) * d;
    const Frame rotated = rotate_patch(v[dec.frame].crop(ox, oy, d, d), angle_sign * dec.angle);
    Frame &dst = out[dec.frame];
    for (std::size_t c = 0; c < dst.channels(); ++c)
      for (std::size_t y = 0; y < d; ++y)
        for (std::size_t x = 0; x < d; ++x) dst(c, oy + y, ox + x) = rotated(c, y, x);
  }
  return out;
}

inline VideoSequence invert_decisions(const VideoSequence &v, std::span<const PatchDecision> decisions, std::size_t s) {
  return apply_decisions(v, decisions, s, -1);
}

/// Negative augmentation of a clip. P = 0 returns the input unchanged.
inline NegResult neg_augment(const VideoSequence &v, const NegMixConfig &cfg, RngStream &stream) {
  cfg.validate();
  patch_side(v.height(), v.width(), cfg.patch_scale);
  NegResult r{v, draw_decisions(v.size(), cfg, stream.next_u64())};
  r.video = apply_decisions(v, r.decisions, cfg.patch_scale);
  return r;
}

/// Neg(M * nsq + (1 - M) * v, P) with one decision set.
inline NegResult negmix(const VideoSequence &v, const VideoSequence &nsq, const NegMixConfig &cfg, RngStream &stream) {
  cfg.validate();
  return neg_augment(mix_noise(v, nsq, cfg.m), cfg, stream);
}

inline nlohmann::json decisions_to_json(std::span<const PatchDecision> decisions, const NegMixConfig &cfg) {
  nlohmann::json list = nlohmann::json::array();
  for (const PatchDecision &d : decisions)
    list.push_back({{"frame", d.frame}, {"site", d.site}, {"p", d.p}, {"rotate", d.rotate}, {"angle", d.angle}});
  return {{"m", cfg.m},
          {"p", cfg.p},
          {"patch_scale", cfg.patch_scale},
          {"temporal_lock", cfg.temporal_lock},
          {"decisions", list}};
}

inline std::vector<PatchDecision> decisions_from_json(const nlohmann::json &j) {
  std::vector<PatchDecision> out;
  try {
    for (const auto &d : j.at("decisions"))
      out.push_back({d.at("frame").get<std::size_t>(), d.at("site").get<std::size_t>(), d.at("p").get<double>(),
                     d.at("rotate").get<bool>(), d.at("angle").get<int>()});
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::format, "negmix", std::string("bad decision json: ") + e.what());
  }
  return out;
}

} // namespace vsraug
