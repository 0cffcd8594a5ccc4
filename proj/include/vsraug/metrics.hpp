#pragma once

// Reference quality measures (PSNR, SSIM) and diagnostics for noise banks.

#include "vsraug/core.hpp"
#include "vsraug/noise_bank.hpp"
#include "vsraug/noise_extract.hpp"

#include <nlohmann/json.hpp>

namespace vsraug {

inline constexpr double kPsnrCap = 99.0;

inline double mse(const Frame &a, const Frame &b) {
  if (!a.same_shape(b)) fail(ErrorKind::invalid_argument, "metrics", "frames differ in shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// 10 log10(1 / MSE) on the [0,1] scale, capped at 99 dB.
inline double psnr(const Frame &a, const Frame &b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / e));
}

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

namespace detail {

inline std::vector<double> ssim_kernel(const SsimParams &p) {
  std::vector<double> k(p.window);
  const double centre = static_cast<double>(p.window - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.window; ++i) {
    const double d = static_cast<double>(i) - centre;
    k[i] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
    sum += k[i];
  }
  for (double &v : k) v /= sum;
  return k;
}

/// 'Valid' separable filtering of one plane: output (h-k+1) x (w-k+1).
inline std::vector<double> filter_valid(std::span<const double> plane, std::size_t h, std::size_t w,
                                        std::span<const double> k) {
  const std::size_t n = k.size(), oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += k[t] * plane[y * w + x + t];
      tmp[y * ow + x] = acc;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += k[t] * tmp[(y + t) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

} // namespace detail

/// Single-scale SSIM: Gaussian window, valid region only, averaged over the
/// map of every channel.
inline double ssim(const Frame &a, const Frame &b, const SsimParams &p = {}) {
  if (!a.same_shape(b)) fail(ErrorKind::invalid_argument, "metrics", "frames differ in shape");
  if (a.height() < p.window || a.width() < p.window)
    fail(ErrorKind::invalid_argument, "metrics", "ssim needs frames of at least " + std::to_string(p.window) + " pixels per side");
  const auto k = detail::ssim_kernel(p);
  const double c1 = p.k1 * p.k1, c2 = p.k2 * p.k2;
  const std::size_t h = a.height(), w = a.width(), n = h * w;
  double acc = 0.0;
  std::size_t count = 0;
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t c = 0; c < a.channels(); ++c) {
    auto pa = a.plane(c), pb = b.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = detail::filter_valid(pa, h, w, k);
    const auto mu_b = detail::filter_valid(pb, h, w, k);
    const auto e_aa = detail::filter_valid(aa, h, w, k);
    const auto e_bb = detail::filter_valid(bb, h, w, k);
    const auto e_ab = detail::filter_valid(ab, h, w, k);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    count += mu_a.size();
  }
  return acc / static_cast<double>(count);
}

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values; // row-major

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Population variance of each tile of the non-overlapping window grid.
inline Matrix variance_map(const Frame &frame, WindowSize win) {
  const auto origins = window_origins(frame.height(), frame.width(), win);
  Matrix m;
  m.rows = frame.height() / win.h;
  m.cols = frame.width() / win.w;
  for (auto [x, y] : origins) m.values.push_back(mean_variance(frame.crop(x, y, win.h, win.w).data()).second);
  return m;
}

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  Matrix variance;
};

/// Frame-averaged PSNR and SSIM plus the variance map of the first frame of `a`.
inline MetricReport evaluate(const VideoSequence &a, const VideoSequence &b, WindowSize win) {
  if (!a.same_shape(b)) fail(ErrorKind::invalid_argument, "metrics", "sequences differ in shape");
  MetricReport r;
  for (std::size_t f = 0; f < a.size(); ++f) {
    r.psnr += psnr(a[f], b[f]);
    r.ssim += ssim(a[f], b[f]);
  }
  r.psnr /= static_cast<double>(a.size());
  r.ssim /= static_cast<double>(a.size());
  r.variance = variance_map(a[0], win);
  return r;
}

inline nlohmann::json to_json(const MetricReport &r) {
  return {{"psnr", r.psnr},
          {"ssim", r.ssim},
          {"variance_map", {{"rows", r.variance.rows}, {"cols", r.variance.cols}, {"values", r.variance.values}}}};
}

inline constexpr std::size_t kHistogramBins = 10;

/// Histogram of `values` over [lo, hi] in equal bins; out-of-range values land
/// in the nearest end bin.
inline std::vector<std::size_t> histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : values) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / span * static_cast<double>(bins)));
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

/// Entry count, per-window mean histogram over [0,1], per-window variance
/// histogram over [0, sigma], and the thresholds the bank was built with.
inline nlohmann::json bank_report(const NoiseBank &bank) {
  std::vector<double> means, vars;
  for (const NoiseEntry &e : bank.entries) {
    means.insert(means.end(), e.means.begin(), e.means.end());
    vars.insert(vars.end(), e.variances.begin(), e.variances.end());
  }
  nlohmann::json mean_hist = nlohmann::json::array(), var_hist = nlohmann::json::array();
  if (!bank.empty()) {
    const double var_hi = bank.thresholds.sigma > 0 ? bank.thresholds.sigma : 1.0;
    mean_hist = histogram(means, 0.0, 1.0, kHistogramBins);
    var_hist = histogram(vars, 0.0, var_hi, kHistogramBins);
  }
  return {{"count", bank.size()},
          {"dims", {{"n", bank.n}, {"c", bank.c}, {"h", bank.h}, {"w", bank.w}}},
          {"mean_histogram", {{"lo", 0.0}, {"hi", 1.0}, {"counts", mean_hist}}},
          {"variance_histogram", {{"lo", 0.0}, {"hi", bank.thresholds.sigma}, {"counts", var_hist}}},
          {"thresholds",
           {{"sigma", bank.thresholds.sigma},
            {"mu", bank.thresholds.mu},
            {"sigma_var", bank.thresholds.sigma_var},
            {"sigma_mean", bank.thresholds.sigma_mean}}}};
}

} // namespace vsraug
