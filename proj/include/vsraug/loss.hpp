#pragma once

// Positive-guidance (pixel + perceptual + adversarial) and negative-guidance
// consistency losses, with their gradients with respect to the prediction.
//
// The perceptual term uses a fixed stack of linear filters instead of a
// pretrained network: a sigma=1 Gaussian blur, forward horizontal and vertical
// differences, and the 4-neighbour Laplacian, each applied per channel.

#include "vsraug/core.hpp"
#include "vsraug/degrade.hpp"

#include <functional>

namespace vsraug {

using Batch = std::vector<VideoSequence>;

enum class NormMode { l2norm, mse };

inline std::string_view to_string(NormMode m) { return m == NormMode::l2norm ? "l2norm" : "mse"; }

inline NormMode parse_norm_mode(std::string_view s) {
  if (s == "l2norm") return NormMode::l2norm;
  if (s == "mse") return NormMode::mse;
  fail(ErrorKind::invalid_argument, "loss", "norm_mode must be l2norm or mse");
}

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.05;
  double lambda = 0.5;
  NormMode norm_mode = NormMode::l2norm;

  void validate() const {
    if (!(alpha >= 0 && beta >= 0 && gamma >= 0 && lambda >= 0))
      fail(ErrorKind::invalid_argument, "loss", "loss weights must be >= 0");
  }
};

struct LossReport {
  double pix = 0.0;
  double per = 0.0;
  double adv = 0.0;
  double aug_n = 0.0;
  double aug_p = 0.0;
  double total = 0.0;
};

/// Pluggable adversarial term. With no scorer attached it contributes zero
/// loss and zero gradient.
struct AdversarialCritic {
  std::function<double(std::span<const VideoSequence> y, std::span<const VideoSequence> v_hr)> score;
  std::function<Batch(std::span<const VideoSequence> y, std::span<const VideoSequence> v_hr)> gradient;
};

namespace detail {

inline void require_same_shape(std::span<const VideoSequence> a, std::span<const VideoSequence> b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorKind::invalid_argument, "loss", "batches differ in size or are empty");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_shape(b[i])) fail(ErrorKind::invalid_argument, "loss", "batch element shapes differ");
}

inline std::size_t element_count(std::span<const VideoSequence> a) {
  std::size_t n = 0;
  for (const VideoSequence &v : a) n += v.element_count();
  return n;
}

inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

/// a - b, elementwise.
inline Frame subtract(const Frame &a, const Frame &b) {
  Frame out = a;
  auto o = out.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

inline Batch zeros_like(std::span<const VideoSequence> a) {
  Batch out;
  for (const VideoSequence &v : a) out.emplace_back(v.size(), v.channels(), v.height(), v.width(), 0.0);
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fixed feature stack
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFeatureCount = 4;

inline const std::vector<double> &feature_blur_kernel() {
  static const std::vector<double> k = gaussian_kernel(1.0);
  return k;
}

/// Feature `index` of a frame; linear, not clamped.
inline Frame feature(const Frame &in, std::size_t index) {
  const std::size_t h = in.height(), w = in.width();
  Frame out(in.channels(), h, w);
  switch (index) {
  case 0: {
    const auto &k = feature_blur_kernel();
    return convolve_separable(in, k, k);
  }
  case 1:
    for (std::size_t c = 0; c < in.channels(); ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x + 1 < w; ++x) out(c, y, x) = in(c, y, x + 1) - in(c, y, x);
    return out;
  case 2:
    for (std::size_t c = 0; c < in.channels(); ++c)
      for (std::size_t y = 0; y + 1 < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out(c, y, x) = in(c, y + 1, x) - in(c, y, x);
    return out;
  case 3:
    for (std::size_t c = 0; c < in.channels(); ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const auto iy = static_cast<std::ptrdiff_t>(y), ix = static_cast<std::ptrdiff_t>(x);
          out(c, y, x) = in(c, reflect_index(iy - 1, h), x) + in(c, reflect_index(iy + 1, h), x) +
                         in(c, y, reflect_index(ix - 1, w)) + in(c, y, reflect_index(ix + 1, w)) - 4.0 * in(c, y, x);
        }
    return out;
  default: fail(ErrorKind::invalid_argument, "loss", "feature index out of range");
  }
}

/// Transpose of `feature`.
inline Frame feature_adjoint(const Frame &g, std::size_t index) {
  const std::size_t h = g.height(), w = g.width();
  Frame out(g.channels(), h, w);
  switch (index) {
  case 0: {
    const auto &k = feature_blur_kernel();
    return convolve_separable_adjoint(g, k, k);
  }
  case 1:
    for (std::size_t c = 0; c < g.channels(); ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x + 1 < w; ++x) {
          out(c, y, x + 1) += g(c, y, x);
          out(c, y, x) -= g(c, y, x);
        }
    return out;
  case 2:
    for (std::size_t c = 0; c < g.channels(); ++c)
      for (std::size_t y = 0; y + 1 < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          out(c, y + 1, x) += g(c, y, x);
          out(c, y, x) -= g(c, y, x);
        }
    return out;
  case 3:
    for (std::size_t c = 0; c < g.channels(); ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const auto iy = static_cast<std::ptrdiff_t>(y), ix = static_cast<std::ptrdiff_t>(x);
          const double v = g(c, y, x);
          out(c, reflect_index(iy - 1, h), x) += v;
          out(c, reflect_index(iy + 1, h), x) += v;
          out(c, y, reflect_index(ix - 1, w)) += v;
          out(c, y, reflect_index(ix + 1, w)) += v;
          out(c, y, x) -= 4.0 * v;
        }
    return out;
  default: fail(ErrorKind::invalid_argument, "loss", "feature index out of range");
  }
}

// ---------------------------------------------------------------------------
// Loss values
// ---------------------------------------------------------------------------

/// Mean absolute error over every element of the batch.
inline double pixel_loss(std::span<const VideoSequence> y, std::span<const VideoSequence> target) {
  detail::require_same_shape(y, target);
  double acc = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      auto a = y[b][f].data();
      auto t = target[b][f].data();
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - t[i]);
    }
  return acc / static_cast<double>(detail::element_count(y));
}

inline double pixel_loss(const VideoSequence &y, const VideoSequence &target) {
  return pixel_loss(std::span(&y, 1), std::span(&target, 1));
}

/// Mean over the four features of the mean absolute feature difference.
inline double standin_perceptual_loss(std::span<const VideoSequence> y, std::span<const VideoSequence> target) {
  detail::require_same_shape(y, target);
  double acc = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      const Frame diff = detail::subtract(y[b][f], target[b][f]);
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        const Frame fk = feature(diff, k);
        for (double v : fk.data()) acc += std::abs(v);
      }
    }
  return acc / (static_cast<double>(kFeatureCount) * static_cast<double>(detail::element_count(y)));
}

inline double standin_perceptual_loss(const VideoSequence &y, const VideoSequence &target) {
  return standin_perceptual_loss(std::span(&y, 1), std::span(&target, 1));
}

/// l2norm: (1/B) sum of per-sample L2 norms of the difference; mse: mean
/// squared difference over all elements.
inline double aug_n_loss(std::span<const VideoSequence> y_hat, std::span<const VideoSequence> y, NormMode mode) {
  detail::require_same_shape(y_hat, y);
  double total = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b) {
    double sq = 0.0;
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      auto a = y_hat[b][f].data();
      auto t = y[b][f].data();
      for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - t[i]) * (a[i] - t[i]);
    }
    total += mode == NormMode::l2norm ? std::sqrt(sq) : sq;
  }
  if (mode == NormMode::l2norm) return total / static_cast<double>(y.size());
  return total / static_cast<double>(detail::element_count(y));
}

inline double aug_n_loss(std::span<const VideoSequence> y_hat, std::span<const VideoSequence> y, const LossWeights &w) {
  return aug_n_loss(y_hat, y, w.norm_mode);
}

/// Positive guidance. Fills pix, per, adv and aug_p of the report; total is
/// set to aug_p.
inline LossReport aug_p_loss(std::span<const VideoSequence> y, std::span<const VideoSequence> v_hr,
                             const LossWeights &w, const AdversarialCritic &critic = {}) {
  w.validate();
  LossReport r;
  r.pix = pixel_loss(y, v_hr);
  r.per = standin_perceptual_loss(y, v_hr);
  r.adv = critic.score ? critic.score(y, v_hr) : 0.0;
  r.aug_p = w.alpha * r.pix + w.beta * r.per + w.gamma * r.adv;
  r.total = r.aug_p;
  return r;
}

/// aug_p(Y, V_hr) + lambda * aug_n(Y, Y_hat).
inline LossReport aug_np_loss(std::span<const VideoSequence> y, std::span<const VideoSequence> v_hr,
                              std::span<const VideoSequence> y_hat, const LossWeights &w,
                              const AdversarialCritic &critic = {}) {
  LossReport r = aug_p_loss(y, v_hr, w, critic);
  r.aug_n = aug_n_loss(y_hat, y, w.norm_mode);
  r.total = w.alpha * r.pix + w.beta * r.per + w.gamma * r.adv + w.lambda * r.aug_n;
  return r;
}

// ---------------------------------------------------------------------------
// Gradients with respect to the first argument
// ---------------------------------------------------------------------------

/// Subgradient convention: sign(0) = 0.
inline Batch pixel_loss_grad(std::span<const VideoSequence> y, std::span<const VideoSequence> target) {
  detail::require_same_shape(y, target);
  const double inv_n = 1.0 / static_cast<double>(detail::element_count(y));
  Batch g = detail::zeros_like(y);
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      auto a = y[b][f].data();
      auto t = target[b][f].data();
      auto o = g[b][f].data();
      for (std::size_t i = 0; i < a.size(); ++i) o[i] = detail::sign(a[i] - t[i]) * inv_n;
    }
  return g;
}

inline Batch perceptual_loss_grad(std::span<const VideoSequence> y, std::span<const VideoSequence> target) {
  detail::require_same_shape(y, target);
  const double scale = 1.0 / (static_cast<double>(kFeatureCount) * static_cast<double>(detail::element_count(y)));
  Batch g = detail::zeros_like(y);
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      const Frame diff = detail::subtract(y[b][f], target[b][f]);
      auto out = g[b][f].data();
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        Frame s = feature(diff, k);
        for (double &v : s.data()) v = detail::sign(v) * scale;
        const Frame back = feature_adjoint(s, k);
        auto bv = back.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
      }
    }
  return g;
}

/// d aug_n / d y_hat. The gradient with respect to y is its negation. A zero
/// difference under l2norm gives the zero subgradient.
inline Batch aug_n_loss_grad(std::span<const VideoSequence> y_hat, std::span<const VideoSequence> y, NormMode mode) {
  detail::require_same_shape(y_hat, y);
  Batch g = detail::zeros_like(y);
  const double inv_n = 1.0 / static_cast<double>(detail::element_count(y));
  const double inv_b = 1.0 / static_cast<double>(y.size());
  for (std::size_t b = 0; b < y.size(); ++b) {
    double scale = 2.0 * inv_n;
    if (mode == NormMode::l2norm) {
      double sq = 0.0;
      for (std::size_t f = 0; f < y[b].size(); ++f) {
        auto a = y_hat[b][f].data();
        auto t = y[b][f].data();
        for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - t[i]) * (a[i] - t[i]);
      }
      const double norm = std::sqrt(sq);
      scale = norm > 0 ? inv_b / norm : 0.0;
    }
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      auto a = y_hat[b][f].data();
      auto t = y[b][f].data();
      auto o = g[b][f].data();
      for (std::size_t i = 0; i < a.size(); ++i) o[i] = scale * (a[i] - t[i]);
    }
  }
  return g;
}

} // namespace vsraug
