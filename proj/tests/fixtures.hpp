#pragma once

#include "helpers.hpp"
#include "vsraug/restorer.hpp"

namespace testing_util {

/// Gradient-check instance whose L1 residuals and feature residuals all stay
/// well away from zero: the target is the current restoration plus a smooth
/// increasing, convex offset.
inline std::pair<vsraug::ToyRestorer, vsraug::LossInputs> fd_instance(std::uint64_t seed, std::size_t batch = 2,
                                                                      std::size_t frames = 2, std::size_t channels = 3,
                                                                      std::size_t lr = 8) {
  using namespace vsraug;
  RngStream rng = derive_stream(seed, "test.fd");
  ToyRestorer model = ToyRestorer::identity(channels);
  for (double &p : model.params()) p += rng.next_range(-0.2, 0.2);
  LossInputs in;
  for (std::size_t b = 0; b < batch; ++b) {
    in.v_lr.push_back(random_video(frames, channels, lr, lr, rng));
    VideoSequence neg = in.v_lr.back();
    for (Frame &f : neg)
      for (double &v : f.values()) v = 0.6 * v + 0.4 * rng.next_uniform();
    in.v_neg.push_back(std::move(neg));
    VideoSequence hr = restore(model, in.v_lr.back());
    for (Frame &f : hr)
      for (std::size_t c = 0; c < f.channels(); ++c)
        for (std::size_t y = 0; y < f.height(); ++y)
          for (std::size_t x = 0; x < f.width(); ++x) {
            const double fx = static_cast<double>(x), fy = static_cast<double>(y);
            f(c, y, x) -= 0.3 + 0.01 * fx + 0.013 * fy + 0.002 * fx * fx + 0.0015 * fy * fy;
          }
    in.v_hr.push_back(std::move(hr));
  }
  return {model, in};
}

/// Window-`k` moving average of a trace.
inline std::vector<double> smooth(const std::vector<double> &v, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i + k <= v.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) s += v[i + j];
    out.push_back(s / static_cast<double>(k));
  }
  return out;
}

} // namespace testing_util
