#pragma once

// A linear stand-in for a video restoration network: per-channel 3x3
// convolution plus bias at low resolution, followed by a fixed bilinear x4
// upsample. Being linear in both pixels and parameters, its loss gradients
// are computed in closed form and checked against finite differences.

#include "vsraug/core.hpp"
#include "vsraug/degrade.hpp"
#include "vsraug/loss.hpp"
#include "vsraug/negmix.hpp"
#include "vsraug/noise_bank.hpp"

namespace vsraug {

inline constexpr std::size_t kRestorerUpscale = 4;
inline constexpr std::size_t kParamsPerChannel = 10; // 3x3 weights then bias

class ToyRestorer {
public:
  ToyRestorer() = default;
  explicit ToyRestorer(std::size_t channels) : channels_(channels), theta_(channels * kParamsPerChannel, 0.0) {}
  ToyRestorer(std::size_t channels, std::vector<double> theta) : channels_(channels), theta_(std::move(theta)) {
    if (theta_.size() != channels_ * kParamsPerChannel)
      fail(ErrorKind::invalid_argument, "toy_restorer", "parameter vector must hold 10 values per channel");
  }

  /// Centre tap 1, rest 0, bias 0: restore() reduces to the bilinear upsample.
  static ToyRestorer identity(std::size_t channels) {
    ToyRestorer m(channels);
    for (std::size_t c = 0; c < channels; ++c) m.weight(c, 1, 1) = 1.0;
    return m;
  }

  std::size_t channels() const noexcept { return channels_; }
  std::span<double> params() noexcept { return theta_; }
  std::span<const double> params() const noexcept { return theta_; }

  double &weight(std::size_t c, std::size_t ky, std::size_t kx) { return theta_[c * kParamsPerChannel + ky * 3 + kx]; }
  double weight(std::size_t c, std::size_t ky, std::size_t kx) const { return theta_[c * kParamsPerChannel + ky * 3 + kx]; }
  double &bias(std::size_t c) { return theta_[c * kParamsPerChannel + 9]; }
  double bias(std::size_t c) const { return theta_[c * kParamsPerChannel + 9]; }

  bool finite() const {
    return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
  }

private:
  std::size_t channels_ = 0;
  std::vector<double> theta_;
};

namespace detail {

inline Frame conv3x3(const ToyRestorer &m, const Frame &in) {
  const std::size_t h = in.height(), w = in.width();
  Frame out(in.channels(), h, w);
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = m.bias(c);
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y + ky) - 1, h);
          for (std::size_t kx = 0; kx < 3; ++kx)
            acc += m.weight(c, ky, kx) * in(c, sy, reflect_index(static_cast<std::ptrdiff_t>(x + kx) - 1, w));
        }
        out(c, y, x) = acc;
      }
  return out;
}

/// Accumulates d loss / d theta given d loss / d output for one frame.
inline void accumulate_param_grad(const Frame &in, const Frame &grad_hr, std::span<double> grad) {
  const std::size_t h = in.height(), w = in.width();
  const Frame gz = resample_adjoint(grad_hr, h, w, ResizeMethod::bilinear);
  for (std::size_t c = 0; c < in.channels(); ++c) {
    double *g = grad.data() + c * kParamsPerChannel;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double v = gz(c, y, x);
        if (v == 0.0) continue;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y + ky) - 1, h);
          for (std::size_t kx = 0; kx < 3; ++kx)
            g[ky * 3 + kx] += v * in(c, sy, reflect_index(static_cast<std::ptrdiff_t>(x + kx) - 1, w));
        }
        g[9] += v;
      }
  }
}

} // namespace detail

/// Unclamped output, 4x the input's spatial size.
inline VideoSequence restore(const ToyRestorer &model, const VideoSequence &v) {
  if (v.channels() != model.channels())
    fail(ErrorKind::invalid_argument, "toy_restorer", "clip channel count differs from the model's");
  std::vector<Frame> out;
  out.reserve(v.size());
  for (const Frame &f : v)
    out.push_back(resample(detail::conv3x3(model, f), f.height() * kRestorerUpscale, f.width() * kRestorerUpscale,
                           ResizeMethod::bilinear));
  return VideoSequence(std::move(out));
}

inline Batch restore(const ToyRestorer &model, std::span<const VideoSequence> batch) {
  Batch out;
  out.reserve(batch.size());
  for (const VideoSequence &v : batch) out.push_back(restore(model, v));
  return out;
}

/// One batch of training triples: low-resolution input, its negative-augmented
/// counterpart, and the high-resolution target.
struct LossInputs {
  Batch v_lr;
  Batch v_neg;
  Batch v_hr;

  void validate() const {
    if (v_lr.empty() || v_lr.size() != v_neg.size() || v_lr.size() != v_hr.size())
      fail(ErrorKind::invalid_argument, "toy_restorer", "loss inputs need equal, non-empty batches");
    for (std::size_t b = 0; b < v_lr.size(); ++b) {
      if (!v_lr[b].same_shape(v_neg[b]))
        fail(ErrorKind::invalid_argument, "toy_restorer", "negative clip shape differs from the low-resolution clip");
      const VideoSequence &lr = v_lr[b], &hr = v_hr[b];
      if (hr.size() != lr.size() || hr.channels() != lr.channels() || hr.height() != lr.height() * kRestorerUpscale ||
          hr.width() != lr.width() * kRestorerUpscale)
        fail(ErrorKind::invalid_argument, "toy_restorer", "target must be the low-resolution shape scaled by 4");
    }
  }
};

inline LossReport evaluate_loss(const ToyRestorer &model, const LossInputs &in, const LossWeights &w,
                                const AdversarialCritic &critic = {}) {
  in.validate();
  const Batch y = restore(model, in.v_lr);
  const Batch y_hat = restore(model, in.v_neg);
  return aug_np_loss(y, in.v_hr, y_hat, w, critic);
}

struct GradientResult {
  LossReport report;
  std::vector<double> grad;
};

/// Closed-form d total / d theta, with Y = restore(v_lr), Y_hat = restore(v_neg).
inline GradientResult loss_gradients(const ToyRestorer &model, const LossInputs &in, const LossWeights &w,
                                     const AdversarialCritic &critic = {}) {
  in.validate();
  w.validate();
  const Batch y = restore(model, in.v_lr);
  const Batch y_hat = restore(model, in.v_neg);
  GradientResult r;
  r.report = aug_np_loss(y, in.v_hr, y_hat, w, critic);

  Batch g_y = detail::zeros_like(y);
  auto axpy = [](Batch &dst, const Batch &src, double a) {
    if (a == 0.0) return;
    for (std::size_t b = 0; b < dst.size(); ++b)
      for (std::size_t f = 0; f < dst[b].size(); ++f) {
        auto d = dst[b][f].data();
        auto s = src[b][f].data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += a * s[i];
      }
  };
  if (w.alpha != 0.0) axpy(g_y, pixel_loss_grad(y, in.v_hr), w.alpha);
  if (w.beta != 0.0) axpy(g_y, perceptual_loss_grad(y, in.v_hr), w.beta);
  if (w.gamma != 0.0 && critic.gradient) axpy(g_y, critic.gradient(y, in.v_hr), w.gamma);
  Batch g_hat = detail::zeros_like(y);
  if (w.lambda != 0.0) {
    const Batch gn = aug_n_loss_grad(y_hat, y, w.norm_mode);
    axpy(g_hat, gn, w.lambda);
    axpy(g_y, gn, -w.lambda);
  }

  r.grad.assign(model.params().size(), 0.0);
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t f = 0; f < y[b].size(); ++f) {
      detail::accumulate_param_grad(in.v_lr[b][f], g_y[b][f], r.grad);
      if (w.lambda != 0.0) detail::accumulate_param_grad(in.v_neg[b][f], g_hat[b][f], r.grad);
    }
  return r;
}

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Central differences per parameter against loss_gradients. Relative error
/// uses the denominator max(|analytic|, |numeric|, 1e-4 * max|analytic|, 1e-8),
/// so components that are structurally zero compare against the gradient scale.
inline FiniteDiffReport finite_diff_check(const ToyRestorer &model, const LossInputs &in, const LossWeights &w,
                                          double eps = 1e-4) {
  if (!(eps > 0)) fail(ErrorKind::invalid_argument, "toy_restorer", "finite-difference step must be > 0");
  FiniteDiffReport rep;
  rep.analytic = loss_gradients(model, in, w).grad;
  rep.numeric.resize(rep.analytic.size());
  double scale = 0.0;
  for (double g : rep.analytic) scale = std::max(scale, std::abs(g));
  const double floor = std::max(1e-4 * scale, 1e-8);
  ToyRestorer probe = model;
  for (std::size_t k = 0; k < rep.analytic.size(); ++k) {
    const double orig = probe.params()[k];
    probe.params()[k] = orig + eps;
    const double up = evaluate_loss(probe, in, w).total;
    probe.params()[k] = orig - eps;
    const double down = evaluate_loss(probe, in, w).total;
    probe.params()[k] = orig;
    rep.numeric[k] = (up - down) / (2.0 * eps);
    const double err = std::abs(rep.numeric[k] - rep.analytic[k]) /
                       std::max({std::abs(rep.analytic[k]), std::abs(rep.numeric[k]), floor});
    rep.max_rel_error = std::max(rep.max_rel_error, err);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Miniature training loop
// ---------------------------------------------------------------------------

struct ToyClip {
  VideoSequence v_hr;
  DegradationChain chain;
};

struct TrainConfig {
  std::size_t steps = 200;
  double lr = 0.05;
  std::uint64_t seed = 0;
  NegMixConfig negmix;
  bool random_p = false; // draw P from the 0.1 grid per clip and step
  LossWeights weights;
};

struct TrainTrace {
  std::vector<LossReport> steps; // loss evaluated before each update
  ToyRestorer model;
};

/// Fixed-step gradient descent on the combined loss over
/// V_hr -> degrade -> V_lr -> NegMix -> V_neg -> restore. Degradation is drawn
/// once per clip; noise entry, P and patch decisions are redrawn each step.
inline TrainTrace train_toy(ToyRestorer model, std::span<const ToyClip> clips, const NoiseBank &bank,
                            const TrainConfig &cfg) {
  if (cfg.steps == 0) fail(ErrorKind::invalid_argument, "toy_restorer", "train_toy needs steps >= 1");
  if (clips.empty()) fail(ErrorKind::invalid_argument, "toy_restorer", "train_toy needs at least one clip");
  if (bank.empty()) fail(ErrorKind::invalid_argument, "toy_restorer", "train_toy needs a non-empty noise bank");
  cfg.weights.validate();
  cfg.negmix.validate();

  LossInputs in;
  for (std::size_t b = 0; b < clips.size(); ++b) {
    RngStream deg = derive_stream(cfg.seed, "train.degrade", b);
    in.v_lr.push_back(apply_chain(clips[b].v_hr, clips[b].chain, deg));
    in.v_hr.push_back(clips[b].v_hr);
  }
  const VideoSequence &lr0 = in.v_lr.front();
  if (bank.n != lr0.size() || bank.c != lr0.channels() || bank.h != lr0.height() || bank.w != lr0.width())
    fail(ErrorKind::invalid_argument, "toy_restorer", "noise bank dims differ from the degraded clip dims");
  std::vector<VideoSequence> noise;
  for (std::size_t i = 0; i < bank.size(); ++i) noise.push_back(bank.sequence(i));

  TrainTrace trace;
  trace.steps.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    in.v_neg.clear();
    for (std::size_t b = 0; b < clips.size(); ++b) {
      RngStream pick = derive_stream(cfg.seed, "train.pick", b, step);
      const VideoSequence &nsq = noise[pick.next_choice(noise.size())];
      NegMixConfig nc = cfg.negmix;
      if (cfg.random_p) nc.p = sample_grid_probability(pick);
      RngStream neg = derive_stream(cfg.seed, "train.negmix", b, step);
      in.v_neg.push_back(negmix(in.v_lr[b], nsq, nc, neg).video);
    }
    GradientResult g = loss_gradients(model, in, cfg.weights);
    if (!std::isfinite(g.report.total))
      fail(ErrorKind::numeric, "toy_restorer", "non-finite loss at step " + std::to_string(step));
    trace.steps.push_back(g.report);
    for (std::size_t k = 0; k < g.grad.size(); ++k) model.params()[k] -= cfg.lr * g.grad[k];
    if (!model.finite()) fail(ErrorKind::numeric, "toy_restorer", "non-finite parameters after step " + std::to_string(step));
  }
  trace.model = std::move(model);
  return trace;
}

} // namespace vsraug
