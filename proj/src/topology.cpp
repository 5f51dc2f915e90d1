#include "fatnet/topology.hpp"

#include "fatnet/errors.hpp"
#include "fatnet/rng.hpp"

namespace fatnet {

namespace {

void add_injection(Network& net, const TopologyOptions& o) {
  InjectionConfig cfg;
  cfg.p_percent = o.p_percent;
  cfg.model = o.fault_model;
  cfg.status = InjectionStatus::disable;
  cfg.codebook = make_codebook(o.act_bits);
  net.emplace<InjectionLayer>(cfg);
}

void conv_block(Network& net, const TopologyOptions& o, std::size_t out_c, bool pool) {
  const std::size_t in_c = net.output_shape().c;
  net.emplace<Conv2dLayer>(in_c, out_c, 3, 0, o.weight_bits);
  net.emplace<BatchNormLayer>(out_c);
  net.emplace<QuantActLayer>(o.act_bits);
  if (pool) net.emplace<MaxPoolLayer>();
  add_injection(net, o);
}

void fc_block(Network& net, const TopologyOptions& o, std::size_t out_f, bool inject) {
  net.emplace<FullyConnectedLayer>(net.output_shape().sample(), out_f, o.weight_bits);
  net.emplace<BatchNormLayer>(out_f);
  net.emplace<QuantActLayer>(o.act_bits);
  if (inject) add_injection(net, o);
}

void output_block(Network& net, const TopologyOptions& o) {
  net.emplace<FullyConnectedLayer>(net.output_shape().sample(), o.classes, o.weight_bits);
  net.emplace<BatchNormLayer>(o.classes);
}

}  // namespace

Network build_topology(const TopologyOptions& o) {
  if (o.classes < 2) throw ConfigError("topology needs at least 2 classes");
  if (o.act_bits < 1 || o.act_bits > 4) {
    throw ConfigError("fault-aware topologies need 1..4-bit activations, got " +
                      std::to_string(o.act_bits));
  }
  Network net(o.input, o.classes, o.id);
  if (o.id == "cnv-s") {
    conv_block(net, o, 16, true);
    conv_block(net, o, 32, true);
    conv_block(net, o, 64, false);
    fc_block(net, o, 64, o.inject_fc);
    output_block(net, o);
  } else if (o.id == "toy") {
    conv_block(net, o, 4, true);
    fc_block(net, o, 6, true);
    output_block(net, o);
  } else {
    throw ConfigError("unknown topology '" + o.id + "' (expected cnv-s or toy)");
  }
  net.check_injection_placement();
  init_parameters(net, o.init_seed);
  return net;
}

void init_parameters(Network& net, std::uint64_t seed) {
  Rng rng = substream(seed, "weights-init");
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerKind k = net.layer(i).kind();
    if (k != LayerKind::conv2d && k != LayerKind::fully_connected) continue;
    for (Parameter* p : net.layer(i).parameters()) {
      for (auto& v : p->value.values()) v = static_cast<float>(2.0 * uniform01(rng) - 1.0);
    }
  }
}

}  // namespace fatnet
