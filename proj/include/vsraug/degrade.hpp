#pragma once

// Classical degradation kernels (blur, resize, noise, JPEG artifacts) and the
// randomly parameterized chains that turn a high-resolution clip into its
// low-resolution training input.

#include "vsraug/core.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <numbers>
#include <optional>

namespace vsraug {

// ---------------------------------------------------------------------------
// Border handling
// ---------------------------------------------------------------------------

/// Reflect-101 index (`dcb|abcd|cba`), valid for any offset.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<std::ptrdiff_t>(n)) return n - 1;
  return static_cast<std::size_t>(i);
}

// ---------------------------------------------------------------------------
// Gaussian blur
// ---------------------------------------------------------------------------

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma). Centre tap at index radius.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0 || !std::isfinite(sigma)) fail(ErrorKind::invalid_argument, "degrade", "blur sigma must be >= 0");
  if (sigma == 0) return {1.0};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double &v : k) v /= sum;
  return k;
}

/// Separable correlation with an odd-length kernel along rows then columns,
/// reflect-101 borders. Output is not clamped.
inline Frame convolve_separable(const Frame &in, std::span<const double> kx, std::span<const double> ky) {
  const std::size_t h = in.height(), w = in.width();
  const auto rx = static_cast<std::ptrdiff_t>(kx.size() / 2);
  const auto ry = static_cast<std::ptrdiff_t>(ky.size() / 2);
  Frame tmp(in.channels(), h, w);
  Frame out(in.channels(), h, w);
  for (std::size_t c = 0; c < in.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t t = -rx; t <= rx; ++t)
          acc += kx[static_cast<std::size_t>(t + rx)] * in(c, y, reflect_index(static_cast<std::ptrdiff_t>(x) + t, w));
        tmp(c, y, x) = acc;
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t t = -ry; t <= ry; ++t)
          acc += ky[static_cast<std::size_t>(t + ry)] * tmp(c, reflect_index(static_cast<std::ptrdiff_t>(y) + t, h), x);
        out(c, y, x) = acc;
      }
  }
  return out;
}

/// Adjoint of convolve_separable: scatters `grad` back onto the input grid.
inline Frame convolve_separable_adjoint(const Frame &grad, std::span<const double> kx, std::span<const double> ky) {
  const std::size_t h = grad.height(), w = grad.width();
  const auto rx = static_cast<std::ptrdiff_t>(kx.size() / 2);
  const auto ry = static_cast<std::ptrdiff_t>(ky.size() / 2);
  Frame tmp(grad.channels(), h, w);
  Frame out(grad.channels(), h, w);
  for (std::size_t c = 0; c < grad.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::ptrdiff_t t = -ry; t <= ry; ++t)
          tmp(c, reflect_index(static_cast<std::ptrdiff_t>(y) + t, h), x) += ky[static_cast<std::size_t>(t + ry)] * grad(c, y, x);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::ptrdiff_t t = -rx; t <= rx; ++t)
          out(c, y, reflect_index(static_cast<std::ptrdiff_t>(x) + t, w)) += kx[static_cast<std::size_t>(t + rx)] * tmp(c, y, x);
  }
  return out;
}

inline Frame gaussian_blur(const Frame &frame, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  if (k.size() == 1) return frame;
  Frame out = convolve_separable(frame, k, k);
  out.clamp();
  return out;
}

// ---------------------------------------------------------------------------
// Resize
// ---------------------------------------------------------------------------

enum class ResizeMethod { nearest, bilinear, bicubic };

inline std::string_view to_string(ResizeMethod m) {
  switch (m) {
  case ResizeMethod::nearest: return "nearest";
  case ResizeMethod::bilinear: return "bilinear";
  case ResizeMethod::bicubic: return "bicubic";
  }
  return "bicubic";
}

inline ResizeMethod parse_resize_method(std::string_view s) {
  if (s == "nearest") return ResizeMethod::nearest;
  if (s == "bilinear") return ResizeMethod::bilinear;
  if (s == "bicubic") return ResizeMethod::bicubic;
  fail(ErrorKind::invalid_argument, "degrade", "unknown resize method '" + std::string(s) + "'");
}

/// Keys cubic convolution kernel with a = -0.5.
inline double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

/// Interpolation taps for one output coordinate.
struct ResampleTaps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

/// Half-pixel-centred sampling (src = (dst + 0.5) * in/out - 0.5) with
/// clamp-to-edge borders; no antialiasing on downscale.
inline std::vector<ResampleTaps> resample_taps(std::size_t in, std::size_t out, ResizeMethod method) {
  std::vector<ResampleTaps> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    ResampleTaps &t = taps[d];
    const double src = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    switch (method) {
    case ResizeMethod::nearest: {
      const auto i = static_cast<std::ptrdiff_t>(std::floor((static_cast<double>(d) + 0.5) * ratio));
      t.index.push_back(clamp_index(i, in));
      t.weight.push_back(1.0);
      break;
    }
    case ResizeMethod::bilinear: {
      const double f = std::floor(src);
      const double frac = src - f;
      const auto i = static_cast<std::ptrdiff_t>(f);
      t.index = {clamp_index(i, in), clamp_index(i + 1, in)};
      t.weight = {1.0 - frac, frac};
      break;
    }
    case ResizeMethod::bicubic: {
      const double f = std::floor(src);
      const double frac = src - f;
      const auto i = static_cast<std::ptrdiff_t>(f);
      for (std::ptrdiff_t k = -1; k <= 2; ++k) {
        t.index.push_back(clamp_index(i + k, in));
        t.weight.push_back(cubic_weight(frac - static_cast<double>(k)));
      }
      break;
    }
    }
  }
  return taps;
}

/// Separable resample to an explicit size. Output is not clamped.
inline Frame resample(const Frame &in, std::size_t out_h, std::size_t out_w, ResizeMethod method) {
  if (out_h == 0 || out_w == 0) fail(ErrorKind::invalid_argument, "degrade", "resize output dims must be >= 1");
  const auto tx = resample_taps(in.width(), out_w, method);
  const auto ty = resample_taps(in.height(), out_h, method);
  Frame tmp(in.channels(), in.height(), out_w);
  Frame out(in.channels(), out_h, out_w);
  for (std::size_t c = 0; c < in.channels(); ++c) {
    for (std::size_t y = 0; y < in.height(); ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tx[x].index.size(); ++k) acc += tx[x].weight[k] * in(c, y, tx[x].index[k]);
        tmp(c, y, x) = acc;
      }
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ty[y].index.size(); ++k) acc += ty[y].weight[k] * tmp(c, ty[y].index[k], x);
        out(c, y, x) = acc;
      }
  }
  return out;
}

/// Adjoint of resample: maps an output-grid gradient to the input grid.
inline Frame resample_adjoint(const Frame &grad, std::size_t in_h, std::size_t in_w, ResizeMethod method) {
  const auto tx = resample_taps(in_w, grad.width(), method);
  const auto ty = resample_taps(in_h, grad.height(), method);
  Frame tmp(grad.channels(), in_h, grad.width());
  Frame out(grad.channels(), in_h, in_w);
  for (std::size_t c = 0; c < grad.channels(); ++c) {
    for (std::size_t y = 0; y < grad.height(); ++y)
      for (std::size_t x = 0; x < grad.width(); ++x)
        for (std::size_t k = 0; k < ty[y].index.size(); ++k) tmp(c, ty[y].index[k], x) += ty[y].weight[k] * grad(c, y, x);
    for (std::size_t y = 0; y < in_h; ++y)
      for (std::size_t x = 0; x < grad.width(); ++x)
        for (std::size_t k = 0; k < tx[x].index.size(); ++k) out(c, y, tx[x].index[k]) += tx[x].weight[k] * tmp(c, y, x);
  }
  return out;
}

inline std::size_t scaled_dim(std::size_t dim, double scale) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(dim) * scale));
}

inline Frame resize_to(const Frame &frame, std::size_t out_h, std::size_t out_w, ResizeMethod method) {
  Frame out = resample(frame, out_h, out_w, method);
  out.clamp();
  return out;
}

/// Output dims are round(dim * scale).
inline Frame resize(const Frame &frame, double scale, ResizeMethod method) {
  if (!(scale > 0) || !std::isfinite(scale)) fail(ErrorKind::invalid_argument, "degrade", "resize scale must be > 0");
  const std::size_t oh = scaled_dim(frame.height(), scale), ow = scaled_dim(frame.width(), scale);
  if (oh == 0 || ow == 0) fail(ErrorKind::invalid_argument, "degrade", "resize would produce an empty frame");
  return resize_to(frame, oh, ow, method);
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { gaussian, poisson };

/// Poisson variate: multiplication method below mean 30, otherwise Hormann's
/// transformed rejection (PTRS).
inline std::uint64_t sample_poisson(double mean, RngStream &rng) {
  if (!(mean > 0)) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.next_uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.next_uniform();
    }
    return k;
  }
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.next_uniform() - 0.5;
    const double v = rng.next_uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * log_mean - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

/// gaussian: x + N(0, level^2); poisson: Poisson(x * level) / level. Clamped.
inline Frame add_noise(const Frame &frame, NoiseKind kind, double level, RngStream &stream) {
  if (!(level >= 0) || !std::isfinite(level)) fail(ErrorKind::invalid_argument, "degrade", "noise level must be >= 0");
  if (level == 0) return frame;
  Frame out = frame;
  for (double &v : out.data()) {
    if (kind == NoiseKind::gaussian)
      v = clamp01(v + level * stream.next_gaussian());
    else
      v = clamp01(static_cast<double>(sample_poisson(clamp01(v) * level, stream)) / level);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JPEG artifact simulation
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<int, 64> kLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55,  64,
    81, 104, 113, 92, 49, 64, 78,  87,  103, 121, 120, 101, 72, 92, 95,  98,  112, 100, 103, 99};

inline constexpr std::array<int, 64> kChromaTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

inline std::array<double, 64> dct_basis() {
  std::array<double, 64> m{};
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
      m[u * 8 + x] = cu * std::cos((2.0 * x + 1.0) * u * std::numbers::pi / 16.0);
    }
  return m;
}

inline void quantize_plane(std::vector<double> &plane, std::size_t h, std::size_t w, const std::array<int, 64> &q) {
  static const std::array<double, 64> basis = dct_basis();
  const std::size_t bh = (h + 7) / 8, bw = (w + 7) / 8;
  std::array<double, 64> block{}, tmp{}, coef{};
  for (std::size_t by = 0; by < bh; ++by)
    for (std::size_t bx = 0; bx < bw; ++bx) {
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t sy = std::min(by * 8 + y, h - 1), sx = std::min(bx * 8 + x, w - 1);
          block[y * 8 + x] = plane[sy * w + sx] - 128.0;
        }
      // coef = B * block * B^T
      for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
          double acc = 0.0;
          for (int y = 0; y < 8; ++y) acc += basis[u * 8 + y] * block[y * 8 + x];
          tmp[u * 8 + x] = acc;
        }
      for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
          double acc = 0.0;
          for (int x = 0; x < 8; ++x) acc += tmp[u * 8 + x] * basis[v * 8 + x];
          coef[u * 8 + v] = std::round(acc / q[u * 8 + v]) * q[u * 8 + v];
        }
      // block = B^T * coef * B
      for (int y = 0; y < 8; ++y)
        for (int v = 0; v < 8; ++v) {
          double acc = 0.0;
          for (int u = 0; u < 8; ++u) acc += basis[u * 8 + y] * coef[u * 8 + v];
          tmp[y * 8 + v] = acc;
        }
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t sy = by * 8 + y, sx = bx * 8 + x;
          if (sy >= h || sx >= w) continue;
          double acc = 0.0;
          for (int v = 0; v < 8; ++v) acc += tmp[y * 8 + v] * basis[v * 8 + x];
          plane[sy * w + sx] = acc + 128.0;
        }
    }
}

} // namespace detail

/// Standard quality scaling of a base quantization table.
inline std::array<int, 64> scaled_quant_table(const std::array<int, 64> &base, int quality) {
  const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  for (std::size_t i = 0; i < 64; ++i) q[i] = std::clamp((base[i] * s + 50) / 100, 1, 255);
  return q;
}

/// Block-DCT quantization roundtrip in BT.601 YCbCr (full range, no chroma
/// subsampling, no entropy coding). Frames with other than three channels are
/// treated as independent luma planes.
inline Frame jpeg_simulate(const Frame &frame, int quality) {
  if (quality < 1 || quality > 100) fail(ErrorKind::invalid_argument, "degrade", "jpeg quality must be in 1..100");
  const auto luma = scaled_quant_table(detail::kLumaTable, quality);
  const auto chroma = scaled_quant_table(detail::kChromaTable, quality);
  const std::size_t h = frame.height(), w = frame.width(), n = h * w;
  Frame out(frame.channels(), h, w);
  if (frame.channels() == 3) {
    std::vector<double> Y(n), Cb(n), Cr(n);
    auto r = frame.plane(0), g = frame.plane(1), b = frame.plane(2);
    for (std::size_t i = 0; i < n; ++i) {
      const double R = r[i] * 255.0, G = g[i] * 255.0, B = b[i] * 255.0;
      Y[i] = 0.299 * R + 0.587 * G + 0.114 * B;
      Cb[i] = -0.168735892 * R - 0.331264108 * G + 0.5 * B + 128.0;
      Cr[i] = 0.5 * R - 0.418687589 * G - 0.081312411 * B + 128.0;
    }
    detail::quantize_plane(Y, h, w, luma);
    detail::quantize_plane(Cb, h, w, chroma);
    detail::quantize_plane(Cr, h, w, chroma);
    auto ro = out.plane(0), go = out.plane(1), bo = out.plane(2);
    for (std::size_t i = 0; i < n; ++i) {
      const double cb = Cb[i] - 128.0, cr = Cr[i] - 128.0;
      ro[i] = clamp01((Y[i] + 1.402 * cr) / 255.0);
      go[i] = clamp01((Y[i] - 0.344136286 * cb - 0.714136286 * cr) / 255.0);
      bo[i] = clamp01((Y[i] + 1.772 * cb) / 255.0);
    }
  } else {
    for (std::size_t c = 0; c < frame.channels(); ++c) {
      auto src = frame.plane(c);
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = src[i] * 255.0;
      detail::quantize_plane(p, h, w, luma);
      auto dst = out.plane(c);
      for (std::size_t i = 0; i < n; ++i) dst[i] = clamp01(p[i] / 255.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

enum class OpKind { gaussian_blur, resize, gaussian_noise, poisson_noise, jpeg_sim };

inline std::string_view to_string(OpKind k) {
  switch (k) {
  case OpKind::gaussian_blur: return "gaussian_blur";
  case OpKind::resize: return "resize";
  case OpKind::gaussian_noise: return "gaussian_noise";
  case OpKind::poisson_noise: return "poisson_noise";
  case OpKind::jpeg_sim: return "jpeg_sim";
  }
  return "unknown";
}

inline OpKind parse_op_kind(std::string_view s) {
  for (OpKind k : {OpKind::gaussian_blur, OpKind::resize, OpKind::gaussian_noise, OpKind::poisson_noise, OpKind::jpeg_sim})
    if (to_string(k) == s) return k;
  fail(ErrorKind::invalid_argument, "degrade", "unknown degradation kind '" + std::string(s) + "'");
}

/// One concrete degradation step. Only the fields relevant to `kind` are used.
/// A `final_resize` step ignores `scale` when applied and instead resizes to
/// round(original dims * chain final scale).
struct DegradationOp {
  OpKind kind = OpKind::gaussian_blur;
  double sigma = 0.0;
  double scale = 1.0;
  ResizeMethod method = ResizeMethod::bicubic;
  double level = 0.0;
  int quality = 95;
  bool final_resize = false;

  bool operator==(const DegradationOp &) const = default;
};

struct DegradationChain {
  std::vector<DegradationOp> ops;
  int order = 1;
  double final_scale = 1.0;

  /// The product of the resize scales must equal final_scale.
  void validate() const {
    double prod = 1.0;
    for (const DegradationOp &op : ops)
      if (op.kind == OpKind::resize) prod *= op.scale;
    if (std::abs(prod - final_scale) > 1e-9 * std::max(1.0, final_scale))
      fail(ErrorKind::invalid_argument, "degrade", "composed resize scale does not equal the chain's final scale");
  }

  bool operator==(const DegradationChain &) const = default;
};

/// Parameter range for one template step.
struct OpTemplate {
  OpKind kind = OpKind::gaussian_blur;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<ResizeMethod> methods{ResizeMethod::nearest, ResizeMethod::bilinear, ResizeMethod::bicubic};

  void validate() const {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
      fail(ErrorKind::invalid_argument, "degrade", std::string(to_string(kind)) + " range must satisfy lo <= hi");
    switch (kind) {
    case OpKind::gaussian_blur:
    case OpKind::gaussian_noise:
    case OpKind::poisson_noise:
      if (lo < 0) fail(ErrorKind::invalid_argument, "degrade", std::string(to_string(kind)) + " range must be >= 0");
      break;
    case OpKind::resize:
      if (!(lo > 0)) fail(ErrorKind::invalid_argument, "degrade", "resize scale range must be > 0");
      if (methods.empty()) fail(ErrorKind::invalid_argument, "degrade", "resize needs at least one method");
      break;
    case OpKind::jpeg_sim:
      if (lo < 1 || hi > 100) fail(ErrorKind::invalid_argument, "degrade", "jpeg quality range must be within 1..100");
      break;
    }
  }
};

struct ChainTemplate {
  std::vector<OpTemplate> stage;
  double final_scale = 0.25;
  std::vector<ResizeMethod> final_methods{ResizeMethod::nearest, ResizeMethod::bilinear, ResizeMethod::bicubic};

  /// blur, resize, gaussian noise, jpeg; the usual second-order stage.
  static ChainTemplate defaults() {
    ChainTemplate t;
    t.stage = {{OpKind::gaussian_blur, 0.2, 3.0, {}},
               {OpKind::resize, 0.5, 1.5, {ResizeMethod::nearest, ResizeMethod::bilinear, ResizeMethod::bicubic}},
               {OpKind::gaussian_noise, 0.0, 0.1, {}},
               {OpKind::jpeg_sim, 30.0, 95.0, {}}};
    return t;
  }

  void validate() const {
    if (stage.empty()) fail(ErrorKind::invalid_argument, "degrade", "degradation template is empty");
    for (const OpTemplate &op : stage) op.validate();
    if (!(final_scale > 0)) fail(ErrorKind::invalid_argument, "degrade", "final scale must be > 0");
    if (final_methods.empty()) fail(ErrorKind::invalid_argument, "degrade", "final resize needs a method");
  }
};

/// Draw a concrete chain. Each of `order` repetitions of the stage template
/// gets fresh parameter draws; a final resize compensates the intermediate
/// scales so the whole chain scales by `final_scale`.
inline DegradationChain sample_chain(const ChainTemplate &tmpl, int order, RngStream &stream) {
  tmpl.validate();
  if (order != 1 && order != 2) fail(ErrorKind::invalid_argument, "degrade", "chain order must be 1 or 2");
  DegradationChain chain;
  chain.order = order;
  chain.final_scale = tmpl.final_scale;
  double prod = 1.0;
  for (int rep = 0; rep < order; ++rep) {
    for (const OpTemplate &t : tmpl.stage) {
      DegradationOp op;
      op.kind = t.kind;
      switch (t.kind) {
      case OpKind::gaussian_blur: op.sigma = stream.next_range(t.lo, t.hi); break;
      case OpKind::resize:
        op.scale = stream.next_range(t.lo, t.hi);
        op.method = t.methods[stream.next_choice(t.methods.size())];
        prod *= op.scale;
        break;
      case OpKind::gaussian_noise:
      case OpKind::poisson_noise: op.level = stream.next_range(t.lo, t.hi); break;
      case OpKind::jpeg_sim: {
        const auto lo = static_cast<int>(std::ceil(t.lo)), hi = static_cast<int>(std::floor(t.hi));
        op.quality = lo + static_cast<int>(stream.next_choice(static_cast<std::size_t>(hi - lo + 1)));
        break;
      }
      }
      chain.ops.push_back(op);
    }
  }
  DegradationOp last;
  last.kind = OpKind::resize;
  last.final_resize = true;
  last.scale = tmpl.final_scale / prod;
  last.method = tmpl.final_methods[stream.next_choice(tmpl.final_methods.size())];
  chain.ops.push_back(last);
  return chain;
}

/// Apply one step to one frame. `orig_h`/`orig_w` are the clip's input dims,
/// used by the final resize.
inline Frame apply_op(const Frame &frame, const DegradationOp &op, double final_scale, std::size_t orig_h,
                      std::size_t orig_w, RngStream &noise_stream) {
  switch (op.kind) {
  case OpKind::gaussian_blur: return gaussian_blur(frame, op.sigma);
  case OpKind::resize:
    if (op.final_resize) {
      const std::size_t oh = scaled_dim(orig_h, final_scale), ow = scaled_dim(orig_w, final_scale);
      if (oh == 0 || ow == 0) fail(ErrorKind::invalid_argument, "degrade", "final resize would produce an empty frame");
      return resize_to(frame, oh, ow, op.method);
    }
    return resize(frame, op.scale, op.method);
  case OpKind::gaussian_noise: return add_noise(frame, NoiseKind::gaussian, op.level, noise_stream);
  case OpKind::poisson_noise: return add_noise(frame, NoiseKind::poisson, op.level, noise_stream);
  case OpKind::jpeg_sim: return jpeg_simulate(frame, op.quality);
  }
  return frame;
}

/// Every frame sees the same op parameters; noise samples come from a stream
/// derived per (op index, frame index) so frames are independent of order.
inline VideoSequence apply_chain(const VideoSequence &video, const DegradationChain &chain, RngStream &stream) {
  chain.validate();
  const std::uint64_t noise_seed = stream.next_u64();
  std::vector<Frame> frames;
  frames.reserve(video.size());
  for (std::size_t f = 0; f < video.size(); ++f) {
    Frame cur = video[f];
    for (std::size_t i = 0; i < chain.ops.size(); ++i) {
      RngStream ns = derive_stream(noise_seed, "degrade.noise", i, f, 0);
      cur = apply_op(cur, chain.ops[i], chain.final_scale, video.height(), video.width(), ns);
    }
    frames.push_back(std::move(cur));
  }
  return VideoSequence(std::move(frames));
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const DegradationOp &op) {
  nlohmann::json j = {{"kind", to_string(op.kind)}};
  switch (op.kind) {
  case OpKind::gaussian_blur: j["sigma"] = op.sigma; break;
  case OpKind::resize:
    j["scale"] = op.scale;
    j["method"] = to_string(op.method);
    if (op.final_resize) j["final"] = true;
    break;
  case OpKind::gaussian_noise:
  case OpKind::poisson_noise: j["level"] = op.level; break;
  case OpKind::jpeg_sim: j["quality"] = op.quality; break;
  }
  return j;
}

inline nlohmann::json to_json(const DegradationChain &chain) {
  nlohmann::json ops = nlohmann::json::array();
  for (const DegradationOp &op : chain.ops) ops.push_back(to_json(op));
  return {{"order", chain.order}, {"final_scale", chain.final_scale}, {"ops", ops}};
}

inline DegradationChain chain_from_json(const nlohmann::json &j) {
  try {
    DegradationChain chain;
    chain.order = j.value("order", 1);
    chain.final_scale = j.value("final_scale", 1.0);
    for (const auto &o : j.at("ops")) {
      DegradationOp op;
      op.kind = parse_op_kind(o.at("kind").get<std::string>());
      op.sigma = o.value("sigma", 0.0);
      op.scale = o.value("scale", 1.0);
      op.method = parse_resize_method(o.value("method", std::string("bicubic")));
      op.level = o.value("level", 0.0);
      op.quality = o.value("quality", 95);
      op.final_resize = o.value("final", false);
      chain.ops.push_back(op);
    }
    chain.validate();
    return chain;
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::format, "degrade", std::string("bad chain json: ") + e.what());
  }
}

} // namespace vsraug
