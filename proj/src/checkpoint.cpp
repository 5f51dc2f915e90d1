#include "fatnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fatnet/errors.hpp"

namespace fatnet {

namespace {

constexpr char kMagic[8] = {'F', 'A', 'T', 'N', 'E', 'T', 'C', 'K'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    le(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) {
      throw FormatError("checkpoint truncated: need " + std::to_string(n) + " more bytes, " +
                            std::to_string(in_.size() - pos_) + " available",
                        pos_);
    }
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::uint8_t u8() { return le<std::uint8_t>(); }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str() {
    const auto n = le<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool expect(const char* tag, std::size_t n) {
    need(n);
    const bool ok = std::memcmp(in_.data() + pos_, tag, n) == 0;
    pos_ += n;
    return ok;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const Parameter& p) {
  w.str(p.name);
  const Shape4 s = p.value.shape();
  w.le(static_cast<std::uint32_t>(s.n));
  w.le(static_cast<std::uint32_t>(s.c));
  w.le(static_cast<std::uint32_t>(s.h));
  w.le(static_cast<std::uint32_t>(s.w));
  for (float v : p.value.values()) w.f32(v);
}

// Mutable access to a const network's tensors, for serialization only.
std::vector<Parameter*> all_tensors(Layer& l) {
  auto out = l.parameters();
  for (Parameter* b : l.buffers()) out.push_back(b);
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_network(const Network& net) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le(kCheckpointVersion);
  w.str(net.id());
  w.le(static_cast<std::uint32_t>(net.classes()));
  w.le(static_cast<std::uint32_t>(net.input_shape().c));
  w.le(static_cast<std::uint32_t>(net.input_shape().h));
  w.le(static_cast<std::uint32_t>(net.input_shape().w));
  w.le(static_cast<std::uint32_t>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    // Layers only expose tensors through non-const accessors.
    auto& layer = const_cast<Layer&>(net.layer(i));
    const LayerSpec s = layer.spec();
    w.le(static_cast<std::uint32_t>(s.kind));
    w.le(static_cast<std::uint32_t>(s.in_channels));
    w.le(static_cast<std::uint32_t>(s.out_channels));
    w.le(static_cast<std::uint32_t>(s.kernel));
    w.le(static_cast<std::uint32_t>(s.padding));
    w.le(static_cast<std::int32_t>(s.weight_bits));
    w.le(static_cast<std::int32_t>(s.act_bits));
    w.f64(s.probability);
    w.u8(static_cast<std::uint8_t>(s.fault_model));

    const QuantCodebook* cb = nullptr;
    std::uint8_t status = 0;
    std::uint64_t seed = 0;
    if (const auto* inj = dynamic_cast<const InjectionLayer*>(&layer)) {
      cb = &inj->config().codebook;
      status = static_cast<std::uint8_t>(inj->config().status);
      seed = inj->config().rng_seed;
    } else if (const auto* act = dynamic_cast<const QuantActLayer*>(&layer); act && act->codebook()) {
      cb = &*act->codebook();
    }
    w.u8(status);
    w.le(seed);
    if (cb != nullptr) {
      w.le(static_cast<std::uint32_t>(cb->bitwidth()));
      w.le(static_cast<std::uint32_t>(cb->size()));
      for (float v : cb->values()) w.f32(v);
    } else {
      w.le(std::uint32_t{0});
      w.le(std::uint32_t{0});
    }
    const auto tensors = all_tensors(layer);
    w.le(static_cast<std::uint32_t>(tensors.size()));
    for (const Parameter* p : tensors) write_tensor(w, *p);
  }
  w.bytes(kTrailer, sizeof(kTrailer));
  return w.take();
}

Network deserialize_network(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (!r.expect(kMagic, sizeof(kMagic))) throw FormatError("not a fatnet checkpoint (bad magic)", 0);
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), r.pos() - 4);
  }
  std::string id = r.str();
  const auto classes = r.le<std::uint32_t>();
  Shape4 in{1, 0, 0, 0};
  in.c = r.le<std::uint32_t>();
  in.h = r.le<std::uint32_t>();
  in.w = r.le<std::uint32_t>();
  Network net(in, classes, std::move(id));
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t li = 0; li < count; ++li) {
    const std::size_t layer_offset = r.pos();
    LayerSpec s;
    const auto kind = r.le<std::uint32_t>();
    if (kind > static_cast<std::uint32_t>(LayerKind::dropout2d)) {
      throw FormatError("unknown layer kind " + std::to_string(kind), layer_offset);
    }
    s.kind = static_cast<LayerKind>(kind);
    s.in_channels = r.le<std::uint32_t>();
    s.out_channels = r.le<std::uint32_t>();
    s.kernel = r.le<std::uint32_t>();
    s.padding = r.le<std::uint32_t>();
    s.weight_bits = r.le<std::int32_t>();
    s.act_bits = r.le<std::int32_t>();
    s.probability = r.f64();
    const auto model = r.u8();
    if (model > 2) throw FormatError("bad fault model", r.pos() - 1);
    s.fault_model = static_cast<FaultModel>(model);
    const auto status = r.u8();
    const auto seed = r.le<std::uint64_t>();
    const auto cb_bits = r.le<std::uint32_t>();
    const auto cb_count = r.le<std::uint32_t>();
    std::vector<float> cb_values(cb_count);
    for (auto& v : cb_values) v = r.f32();

    std::unique_ptr<Layer> layer;
    try {
      if (cb_bits != 0) QuantCodebook::from_values(static_cast<int>(cb_bits), cb_values);
      layer = make_layer(s);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("invalid layer record: ") + e.what(), layer_offset);
    }
    if (auto* inj = dynamic_cast<InjectionLayer*>(layer.get())) {
      inj->set_status(static_cast<InjectionStatus>(status != 0));
      inj->reseed(seed);
    }
    const auto tensors = all_tensors(*layer);
    const auto n_tensors = r.le<std::uint32_t>();
    if (n_tensors != tensors.size()) {
      throw FormatError("layer " + std::to_string(li) + " expects " + std::to_string(tensors.size()) +
                            " tensors, checkpoint has " + std::to_string(n_tensors),
                        r.pos() - 4);
    }
    for (Parameter* p : tensors) {
      const std::size_t off = r.pos();
      const std::string name = r.str();
      Shape4 ts;
      ts.n = r.le<std::uint32_t>();
      ts.c = r.le<std::uint32_t>();
      ts.h = r.le<std::uint32_t>();
      ts.w = r.le<std::uint32_t>();
      if (name != p->name || ts != p->value.shape()) {
        throw FormatError("tensor '" + name + "' " + ts.str() + " does not match layer tensor '" +
                              p->name + "' " + p->value.shape().str(),
                          off);
      }
      for (auto& v : p->value.values()) v = r.f32();
    }
    try {
      net.add(std::move(layer));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("layer shapes do not compose: ") + e.what(), layer_offset);
    }
  }
  if (!r.expect(kTrailer, sizeof(kTrailer))) throw FormatError("missing checkpoint trailer", r.pos() - 4);
  if (!r.done()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return net;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_network(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_network(bytes);
}

std::uint64_t parameter_hash(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (const Parameter* p : all_tensors(const_cast<Layer&>(net.layer(i)))) {
      for (float v : p->value.values()) {
        const auto u = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) {
          h ^= (u >> (8 * b)) & 0xffu;
          h *= 0x100000001b3ULL;
        }
      }
    }
  }
  return h;
}

}  // namespace fatnet
