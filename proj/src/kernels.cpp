#include "fatnet/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "fatnet/errors.hpp"

namespace fatnet::kernels {

namespace {

struct ConvDims {
  std::size_t n, in_c, h, w, out_c, k, pad, out_h, out_w;
  std::size_t patch() const { return in_c * k * k; }
  std::size_t pixels() const { return out_h * out_w; }
};

ConvDims conv_dims(const Shape4& in, const Shape4& wt, std::size_t pad) {
  if (wt.c != in.c) {
    throw ConfigError("conv2d: input has " + std::to_string(in.c) + " channels, kernel expects " +
                      std::to_string(wt.c));
  }
  if (wt.h != wt.w || wt.h == 0) throw ConfigError("conv2d: kernel must be square and non-empty");
  if (in.h + 2 * pad < wt.h || in.w + 2 * pad < wt.w) {
    throw ConfigError("conv2d: kernel larger than padded input " + in.str());
  }
  return {in.n, in.c, in.h, in.w, wt.n, wt.h, pad, in.h + 2 * pad - wt.h + 1,
          in.w + 2 * pad - wt.w + 1};
}

// col[(ci*k + ky)*k + kx][oy*out_w + ox]
void im2col(const float* x, const ConvDims& d, float* col) {
  const std::size_t pixels = d.pixels();
  for (std::size_t ci = 0; ci < d.in_c; ++ci) {
    const float* plane = x + ci * d.h * d.w;
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        float* row = col + ((ci * d.k + ky) * d.k + kx) * pixels;
        for (std::size_t oy = 0; oy < d.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(d.pad);
          float* dst = row + oy * d.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(dst, dst + d.out_w, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(iy) * d.w;
          for (std::size_t ox = 0; ox < d.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(d.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) ? 0.0f : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvDims& d, float* x) {
  const std::size_t pixels = d.pixels();
  for (std::size_t ci = 0; ci < d.in_c; ++ci) {
    float* plane = x + ci * d.h * d.w;
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const float* row = col + ((ci * d.k + ky) * d.k + kx) * pixels;
        for (std::size_t oy = 0; oy < d.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(d.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          float* dst = plane + static_cast<std::size_t>(iy) * d.w;
          const float* src = row + oy * d.out_w;
          for (std::size_t ox = 0; ox < d.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - static_cast<std::ptrdiff_t>(d.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(d.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Sums per-sample buffers in sample order into dst.
void reduce_ordered(const std::vector<float>& per_sample, std::size_t n, std::span<float> dst) {
  const std::size_t len = dst.size();
  const auto m = static_cast<std::ptrdiff_t>(len);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    float acc = dst[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < n; ++s) acc += per_sample[s * len + static_cast<std::size_t>(i)];
    dst[static_cast<std::size_t>(i)] = acc;
  }
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weights, std::size_t pad) {
  const ConvDims d = conv_dims(input.shape(), weights.shape(), pad);
  Tensor4 out({d.n, d.out_c, d.out_h, d.out_w});
  const std::size_t patch = d.patch();
  const std::size_t pixels = d.pixels();
  const float* wt = weights.data();
  const auto batch = static_cast<std::ptrdiff_t>(d.n);

#pragma omp parallel
  {
    std::vector<float> col(patch * pixels);
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < batch; ++s) {
      const auto sn = static_cast<std::size_t>(s);
      im2col(input.data() + sn * input.shape().sample(), d, col.data());
      float* o = out.data() + sn * out.shape().sample();
      for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        float* orow = o + oc * pixels;
        const float* wrow = wt + oc * patch;
        for (std::size_t kk = 0; kk < patch; ++kk) {
          const float wv = wrow[kk];
          if (wv == 0.0f) continue;
          const float* crow = col.data() + kk * pixels;
          for (std::size_t p = 0; p < pixels; ++p) orow[p] += wv * crow[p];
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor4& input, const Tensor4& weights, std::size_t pad,
                     const Tensor4& grad_out, Tensor4* grad_input,
                     std::span<float> grad_weights) {
  const ConvDims d = conv_dims(input.shape(), weights.shape(), pad);
  if (grad_out.shape() != Shape4{d.n, d.out_c, d.out_h, d.out_w}) {
    throw ConfigError("conv2d_backward: grad_out shape " + grad_out.shape().str());
  }
  if (grad_weights.size() != weights.size()) throw ConfigError("conv2d_backward: grad_weights size");
  if (grad_input != nullptr && grad_input->shape() != input.shape()) {
    *grad_input = Tensor4(input.shape());
  }
  const std::size_t patch = d.patch();
  const std::size_t pixels = d.pixels();
  const std::size_t wsize = weights.size();
  const float* wt = weights.data();
  std::vector<float> gw_per_sample(d.n * wsize, 0.0f);
  const auto batch = static_cast<std::ptrdiff_t>(d.n);

#pragma omp parallel
  {
    std::vector<float> col(patch * pixels);
    std::vector<float> gcol(grad_input != nullptr ? patch * pixels : 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < batch; ++s) {
      const auto sn = static_cast<std::size_t>(s);
      im2col(input.data() + sn * input.shape().sample(), d, col.data());
      const float* g = grad_out.data() + sn * grad_out.shape().sample();
      float* gw = gw_per_sample.data() + sn * wsize;
      for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        const float* grow = g + oc * pixels;
        for (std::size_t kk = 0; kk < patch; ++kk) {
          const float* crow = col.data() + kk * pixels;
          float acc = 0.0f;
          for (std::size_t p = 0; p < pixels; ++p) acc += grow[p] * crow[p];
          gw[oc * patch + kk] = acc;
        }
      }
      if (grad_input != nullptr) {
        std::fill(gcol.begin(), gcol.end(), 0.0f);
        for (std::size_t oc = 0; oc < d.out_c; ++oc) {
          const float* grow = g + oc * pixels;
          const float* wrow = wt + oc * patch;
          for (std::size_t kk = 0; kk < patch; ++kk) {
            const float wv = wrow[kk];
            if (wv == 0.0f) continue;
            float* gc = gcol.data() + kk * pixels;
            for (std::size_t p = 0; p < pixels; ++p) gc[p] += wv * grow[p];
          }
        }
        float* gx = grad_input->data() + sn * input.shape().sample();
        std::fill(gx, gx + input.shape().sample(), 0.0f);
        col2im_add(gcol.data(), d, gx);
      }
    }
  }
  reduce_ordered(gw_per_sample, d.n, grad_weights);
}

Tensor4 fc_forward(const Tensor4& input, const Tensor4& weights) {
  const std::size_t n = input.shape().n;
  const std::size_t in = input.shape().sample();
  const std::size_t out_f = weights.shape().n;
  if (weights.shape().sample() != in) {
    throw ConfigError("fully_connected: input has " + std::to_string(in) + " features, weights expect " +
                      std::to_string(weights.shape().sample()));
  }
  Tensor4 out({n, out_f, 1, 1});
  const auto batch = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < batch; ++s) {
    const float* x = input.data() + static_cast<std::size_t>(s) * in;
    float* o = out.data() + static_cast<std::size_t>(s) * out_f;
    for (std::size_t j = 0; j < out_f; ++j) {
      const float* wrow = weights.data() + j * in;
      float acc = 0.0f;
      for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * x[i];
      o[j] = acc;
    }
  }
  return out;
}

void fc_backward(const Tensor4& input, const Tensor4& weights, const Tensor4& grad_out,
                 Tensor4* grad_input, std::span<float> grad_weights) {
  const std::size_t n = input.shape().n;
  const std::size_t in = input.shape().sample();
  const std::size_t out_f = weights.shape().n;
  if (grad_out.shape() != Shape4{n, out_f, 1, 1}) {
    throw ConfigError("fc_backward: grad_out shape " + grad_out.shape().str());
  }
  if (grad_weights.size() != weights.size()) throw ConfigError("fc_backward: grad_weights size");

  const auto outs = static_cast<std::ptrdiff_t>(out_f);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < outs; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    float* gw = grad_weights.data() + j * in;
    for (std::size_t s = 0; s < n; ++s) {
      const float g = grad_out.data()[s * out_f + j];
      if (g == 0.0f) continue;
      const float* x = input.data() + s * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += g * x[i];
    }
  }
  if (grad_input == nullptr) return;
  if (grad_input->shape() != input.shape()) *grad_input = Tensor4(input.shape());
  const auto batch = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < batch; ++s) {
    const auto sn = static_cast<std::size_t>(s);
    float* gx = grad_input->data() + sn * in;
    std::fill(gx, gx + in, 0.0f);
    for (std::size_t j = 0; j < out_f; ++j) {
      const float g = grad_out.data()[sn * out_f + j];
      if (g == 0.0f) continue;
      const float* wrow = weights.data() + j * in;
      for (std::size_t i = 0; i < in; ++i) gx[i] += g * wrow[i];
    }
  }
}

Tensor4 batch_norm_train(const Tensor4& input, std::span<const float> gamma,
                         std::span<const float> beta, BatchNormCache& cache,
                         std::vector<float>& batch_var) {
  const Shape4 s = input.shape();
  if (gamma.size() != s.c || beta.size() != s.c) {
    throw ConfigError("batch_norm: parameters for " + std::to_string(gamma.size()) +
                      " channels, input has " + std::to_string(s.c));
  }
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  cache.mean.assign(s.c, 0.0f);
  cache.inv_std.assign(s.c, 0.0f);
  cache.normalized = Tensor4(s);
  batch_var.assign(s.c, 0.0f);
  Tensor4 out(s);
  const auto channels = static_cast<std::ptrdiff_t>(s.c);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < channels; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* x = input.data() + (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += x[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* x = input.data() + (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dv = x[i] - mean;
        sq += dv * dv;
      }
    }
    const double var = sq / count;
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.mean[c] = static_cast<float>(mean);
    cache.inv_std[c] = static_cast<float>(inv_std);
    batch_var[c] = static_cast<float>(var);
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const float xh = static_cast<float>((input.data()[base + i] - mean) * inv_std);
        cache.normalized.data()[base + i] = xh;
        out.data()[base + i] = gamma[c] * xh + beta[c];
      }
    }
  }
  return out;
}

Tensor4 batch_norm_eval(const Tensor4& input, std::span<const float> gamma,
                        std::span<const float> beta, std::span<const float> running_mean,
                        std::span<const float> running_var) {
  const Shape4 s = input.shape();
  if (gamma.size() != s.c || running_mean.size() != s.c) {
    throw ConfigError("batch_norm: parameters for " + std::to_string(gamma.size()) +
                      " channels, input has " + std::to_string(s.c));
  }
  const std::size_t plane = s.plane();
  Tensor4 out(s);
  const auto rows = static_cast<std::ptrdiff_t>(s.n * s.c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    const std::size_t c = row % s.c;
    const float scale = gamma[c] / std::sqrt(running_var[c] + kBatchNormEps);
    const float shift = beta[c] - running_mean[c] * scale;
    const float* x = input.data() + row * plane;
    float* o = out.data() + row * plane;
    for (std::size_t i = 0; i < plane; ++i) o[i] = x[i] * scale + shift;
  }
  return out;
}

Tensor4 batch_norm_backward(const Tensor4& grad_out, std::span<const float> gamma,
                            const BatchNormCache& cache, std::span<float> grad_gamma,
                            std::span<float> grad_beta) {
  const Shape4 s = grad_out.shape();
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  Tensor4 grad_in(s);
  const auto channels = static_cast<std::ptrdiff_t>(s.c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < channels; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dy = grad_out.data()[base + i];
        sum_dy += dy;
        sum_dy_xh += dy * cache.normalized.data()[base + i];
      }
    }
    grad_gamma[c] += static_cast<float>(sum_dy_xh);
    grad_beta[c] += static_cast<float>(sum_dy);
    const double k = gamma[c] * cache.inv_std[c] / count;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dy = grad_out.data()[base + i];
        const double xh = cache.normalized.data()[base + i];
        grad_in.data()[base + i] = static_cast<float>(k * (count * dy - sum_dy - xh * sum_dy_xh));
      }
    }
  }
  return grad_in;
}

Tensor4 max_pool2d_forward(const Tensor4& input, std::vector<std::uint32_t>* argmax) {
  const Shape4 s = input.shape();
  if (s.h < 2 || s.w < 2) throw ConfigError("max_pool2d: input " + s.str() + " smaller than 2x2");
  const Shape4 os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor4 out(os);
  if (argmax != nullptr) argmax->assign(os.size(), 0);
  const auto rows = static_cast<std::ptrdiff_t>(s.n * s.c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    const std::size_t in_base = row * s.plane();
    const std::size_t out_base = row * os.plane();
    for (std::size_t oy = 0; oy < os.h; ++oy) {
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        std::size_t best = in_base + (2 * oy) * s.w + 2 * ox;
        float best_v = input.data()[best];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_base + (2 * oy + dy) * s.w + 2 * ox + dx;
            if (input.data()[idx] > best_v) {
              best_v = input.data()[idx];
              best = idx;
            }
          }
        }
        out.data()[out_base + oy * os.w + ox] = best_v;
        if (argmax != nullptr) (*argmax)[out_base + oy * os.w + ox] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

Tensor4 max_pool2d_backward(const Tensor4& grad_out, const std::vector<std::uint32_t>& argmax,
                            const Shape4& input_shape) {
  if (argmax.size() != grad_out.size()) throw ConfigError("max_pool2d_backward: argmax size");
  Tensor4 grad_in(input_shape);
  // Windows do not overlap, so each input index receives at most one gradient.
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_in.data()[argmax[i]] += grad_out.data()[i];
  return grad_in;
}

}  // namespace fatnet::kernels
