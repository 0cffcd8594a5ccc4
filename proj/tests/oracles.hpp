#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library's filtering paths.

#include "vsraug/core.hpp"

#include <cmath>
#include <vector>

namespace oracle {

using vsraug::Frame;

inline long mirror101(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

inline long clamp_edge(long i, long n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

/// Dense 2-D Gaussian correlation with a (2r+1)^2 kernel normalized over the
/// square, reflect-101 borders, r = ceil(3 sigma).
inline Frame gaussian_blur_dense(const Frame &in, double sigma) {
  const long r = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k;
  double sum = 0.0;
  for (long dy = -r; dy <= r; ++dy)
    for (long dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.push_back(v);
      sum += v;
    }
  Frame out(in.channels(), in.height(), in.width());
  const long h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        std::size_t idx = 0;
        for (long dy = -r; dy <= r; ++dy)
          for (long dx = -r; dx <= r; ++dx, ++idx)
            acc += k[idx] / sum * in(c, mirror101(y + dy, h), mirror101(x + dx, w));
        out(c, y, x) = std::clamp(acc, 0.0, 1.0);
      }
  return out;
}

/// Keys cubic (a = -0.5) in expanded polynomial form.
inline double keys(double t) {
  t = std::fabs(t);
  if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

inline double tent(double t) {
  t = std::fabs(t);
  return t < 1.0 ? 1.0 - t : 0.0;
}

/// Evaluate a separable interpolation kernel directly per output pixel by
/// summing over every integer source position within a generous margin,
/// clamp-to-edge sampling, half-pixel centres.
template <class Kernel>
inline Frame resample_direct(const Frame &in, std::size_t oh, std::size_t ow, Kernel kernel, bool clamp01 = true) {
  Frame out(in.channels(), oh, ow);
  const long h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
  const double sy = static_cast<double>(h) / static_cast<double>(oh);
  const double sx = static_cast<double>(w) / static_cast<double>(ow);
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double py = (oy + 0.5) * sy - 0.5, px = (ox + 0.5) * sx - 0.5;
        double acc = 0.0;
        for (long ty = -4; ty < h + 4; ++ty) {
          const double wy = kernel(py - ty);
          if (wy == 0.0) continue;
          for (long tx = -4; tx < w + 4; ++tx) {
            const double wx = kernel(px - tx);
            if (wx == 0.0) continue;
            acc += wy * wx * in(c, clamp_edge(ty, h), clamp_edge(tx, w));
          }
        }
        out(c, oy, ox) = clamp01 ? std::clamp(acc, 0.0, 1.0) : acc;
      }
  return out;
}

/// SSIM computed window by window with an explicit 2-D Gaussian weight grid.
inline double ssim_direct(const Frame &a, const Frame &b) {
  const long win = 11;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  std::vector<double> g(win * win);
  double gs = 0.0;
  for (long i = 0; i < win; ++i)
    for (long j = 0; j < win; ++j) {
      const double di = i - 5.0, dj = j - 5.0;
      g[i * win + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      gs += g[i * win + j];
    }
  for (double &v : g) v /= gs;
  double total = 0.0;
  long count = 0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (long y = 0; y + win <= static_cast<long>(a.height()); ++y)
      for (long x = 0; x + win <= static_cast<long>(a.width()); ++x) {
        double ma = 0, mb = 0;
        for (long i = 0; i < win; ++i)
          for (long j = 0; j < win; ++j) {
            ma += g[i * win + j] * a(c, y + i, x + j);
            mb += g[i * win + j] * b(c, y + i, x + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (long i = 0; i < win; ++i)
          for (long j = 0; j < win; ++j) {
            const double da = a(c, y + i, x + j) - ma, db = b(c, y + i, x + j) - mb;
            va += g[i * win + j] * da * da;
            vb += g[i * win + j] * db * db;
            cov += g[i * win + j] * da * db;
          }
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

inline double mse(const Frame &a, const Frame &b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  return acc / a.size();
}

} // namespace oracle
