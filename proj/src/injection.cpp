#include "fatnet/injection.hpp"

#include <algorithm>

#include "fatnet/errors.hpp"

namespace fatnet {

namespace {

// Exact float in [0, 1) with 24 random bits.
float uniform01f(Rng& rng) { return static_cast<float>(rng() >> 40) * 0x1.0p-24f; }

void check_dropout_p(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
}

}  // namespace

std::string to_string(FaultModel m) {
  switch (m) {
    case FaultModel::element: return "element";
    case FaultModel::channel: return "channel";
    case FaultModel::pixel: return "pixel";
  }
  return "?";
}

FaultModel parse_fault_model(const std::string& s) {
  if (s == "element") return FaultModel::element;
  if (s == "channel") return FaultModel::channel;
  if (s == "pixel") return FaultModel::pixel;
  throw ConfigError("unknown fault model '" + s + "' (expected element, channel or pixel)");
}

void InjectionConfig::validate() const {
  if (!(p_percent >= 0.0 && p_percent <= 100.0)) {
    throw ConfigError("injection probability must be in [0, 100] percent, got " +
                      std::to_string(p_percent));
  }
  if (codebook.size() == 0) throw ConfigError("injection layer has no error-value codebook");
}

double InjectionConfig::threshold(std::size_t k) const {
  return p_percent / 100.0 * static_cast<double>(k + 1) / static_cast<double>(codebook.size());
}

std::size_t InjectionMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(value_index.begin(), value_index.end(), [](std::int8_t v) { return v >= 0; }));
}

Tensor4 draw_r(const Shape4& shape, FaultModel model, Rng& rng) {
  Tensor4 r(shape);
  switch (model) {
    case FaultModel::element:
      for (auto& v : r.values()) v = uniform01f(rng);
      break;
    case FaultModel::channel:
      for (std::size_t n = 0; n < shape.n; ++n)
        for (std::size_t c = 0; c < shape.c; ++c) {
          const float v = uniform01f(rng);
          float* plane = r.data() + r.index(n, c, 0, 0);
          std::fill(plane, plane + shape.plane(), v);
        }
      break;
    case FaultModel::pixel:
      for (std::size_t n = 0; n < shape.n; ++n)
        for (std::size_t y = 0; y < shape.h; ++y)
          for (std::size_t x = 0; x < shape.w; ++x) {
            const float v = uniform01f(rng);
            for (std::size_t c = 0; c < shape.c; ++c) r.at(n, c, y, x) = v;
          }
      break;
  }
  return r;
}

InjectionResult inject_with_r(const Tensor4& alpha, const Tensor4& r, const InjectionConfig& cfg) {
  cfg.validate();
  if (r.shape() != alpha.shape()) throw ConfigError("injection: r shape does not match alpha");
  InjectionResult res{alpha, InjectionMask{alpha.shape(), std::vector<std::int8_t>(alpha.size(), -1)}};
  const std::size_t levels = cfg.codebook.size();
  std::vector<double> thresholds(levels);
  for (std::size_t k = 0; k < levels; ++k) thresholds[k] = cfg.threshold(k);

  auto out = res.output.values();
  const auto rv = r.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ri = rv[i];
    if (ri >= thresholds[levels - 1]) continue;
    std::size_t k = 0;
    while (ri >= thresholds[k]) ++k;
    out[i] = cfg.codebook[k];
    res.mask.value_index[i] = static_cast<std::int8_t>(k);
  }
  return res;
}

InjectionResult inject_forward(const Tensor4& alpha, const InjectionConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.status == InjectionStatus::disable || cfg.p_percent == 0.0) {
    return {alpha, InjectionMask{alpha.shape(), std::vector<std::int8_t>(alpha.size(), -1)}};
  }
  return inject_with_r(alpha, draw_r(alpha.shape(), cfg.model, rng), cfg);
}

Tensor4 inject_backward(const Tensor4& grad_out, const InjectionMask& mask) {
  if (mask.shape != grad_out.shape()) throw ConfigError("inject_backward: mask shape mismatch");
  Tensor4 grad_in = grad_out;
  auto g = grad_in.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask.value_index[i] >= 0) g[i] = 0.0f;
  }
  return grad_in;
}

DropoutResult dropout_forward(const Tensor4& alpha, double p, Rng& rng) {
  check_dropout_p(p);
  DropoutResult res{Tensor4(alpha.shape()), DropoutMask{alpha.shape(), std::vector<std::uint8_t>(alpha.size(), 1)}};
  if (p == 0.0) {
    res.output = alpha;
    return res;
  }
  const float scale = static_cast<float>(1.0 / (1.0 - p));
  const auto in = alpha.values();
  auto out = res.output.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const bool keep = uniform01f(rng) >= p;
    res.mask.keep[i] = keep ? 1 : 0;
    out[i] = keep ? in[i] * scale : 0.0f;
  }
  return res;
}

Tensor4 dropout_backward(const Tensor4& grad_out, const DropoutMask& mask, double p) {
  check_dropout_p(p);
  if (mask.shape != grad_out.shape()) throw ConfigError("dropout_backward: mask shape mismatch");
  const float scale = static_cast<float>(1.0 / (1.0 - p));
  Tensor4 grad_in(grad_out.shape());
  const auto g = grad_out.values();
  auto o = grad_in.values();
  for (std::size_t i = 0; i < g.size(); ++i) o[i] = mask.keep[i] ? g[i] * scale : 0.0f;
  return grad_in;
}

DropoutResult dropout2d_forward(const Tensor4& alpha, double p, Rng& rng) {
  check_dropout_p(p);
  const Shape4 s = alpha.shape();
  DropoutResult res{Tensor4(s), DropoutMask{s, std::vector<std::uint8_t>(alpha.size(), 1)}};
  if (p == 0.0) {
    res.output = alpha;
    return res;
  }
  const float scale = static_cast<float>(1.0 / (1.0 - p));
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const bool keep = uniform01f(rng) >= p;
      const std::size_t base = alpha.index(n, c, 0, 0);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        res.mask.keep[base + i] = keep ? 1 : 0;
        res.output[base + i] = keep ? alpha[base + i] * scale : 0.0f;
      }
    }
  return res;
}

}  // namespace fatnet
