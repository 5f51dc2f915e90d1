#include "fatnet/reference.hpp"

#include <cmath>

#include "fatnet/kernels.hpp"

namespace fatnet::reference {

Tensor4 conv2d(const Tensor4& input, const Tensor4& weights, std::size_t pad) {
  const Shape4 in = input.shape();
  const Shape4 wt = weights.shape();
  const std::size_t out_h = in.h + 2 * pad - wt.h + 1;
  const std::size_t out_w = in.w + 2 * pad - wt.w + 1;
  Tensor4 out({in.n, wt.n, out_h, out_w});
  for (std::size_t n = 0; n < in.n; ++n)
    for (std::size_t oc = 0; oc < wt.n; ++oc)
      for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          double acc = 0.0;
          for (std::size_t ic = 0; ic < in.c; ++ic)
            for (std::size_t ky = 0; ky < wt.h; ++ky)
              for (std::size_t kx = 0; kx < wt.w; ++kx) {
                const long iy = static_cast<long>(oy + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(in.h) || ix >= static_cast<long>(in.w))
                  continue;
                acc += static_cast<double>(input.at(n, ic, static_cast<std::size_t>(iy),
                                                    static_cast<std::size_t>(ix))) *
                       weights.at(oc, ic, ky, kx);
              }
          out.at(n, oc, oy, ox) = static_cast<float>(acc);
        }
  return out;
}

Tensor4 fully_connected(const Tensor4& input, const Tensor4& weights) {
  const std::size_t n = input.shape().n;
  const std::size_t in = input.shape().sample();
  const std::size_t out_f = weights.shape().n;
  Tensor4 out({n, out_f, 1, 1});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < out_f; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i)
        acc += static_cast<double>(weights[j * in + i]) * input[s * in + i];
      out[s * out_f + j] = static_cast<float>(acc);
    }
  return out;
}

Tensor4 batch_norm(const Tensor4& input, std::span<const float> gamma,
                   std::span<const float> beta) {
  const Shape4 s = input.shape();
  Tensor4 out(s);
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x) {
          sum += input.at(n, c, y, x);
          ++count;
        }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x) {
          const double d = input.at(n, c, y, x) - mean;
          sq += d * d;
        }
    const double var = sq / static_cast<double>(count);
    const double denom = std::sqrt(var + kernels::kBatchNormEps);
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
          out.at(n, c, y, x) =
              static_cast<float>(gamma[c] * (input.at(n, c, y, x) - mean) / denom + beta[c]);
  }
  return out;
}

Tensor4 max_pool2d(const Tensor4& input) {
  const Shape4 s = input.shape();
  Tensor4 out({s.n, s.c, s.h / 2, s.w / 2});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t oy = 0; oy < s.h / 2; ++oy)
        for (std::size_t ox = 0; ox < s.w / 2; ++ox) {
          float m = input.at(n, c, 2 * oy, 2 * ox);
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) m = std::fmax(m, input.at(n, c, 2 * oy + dy, 2 * ox + dx));
          out.at(n, c, oy, ox) = m;
        }
  return out;
}

}  // namespace fatnet::reference
