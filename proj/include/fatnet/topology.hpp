#pragma once

#include <cstdint>
#include <string>

#include "fatnet/injection.hpp"
#include "fatnet/network.hpp"

namespace fatnet {

struct TopologyOptions {
  std::string id = "cnv-s";  // "cnv-s" or "toy"
  Shape4 input{1, 1, 28, 28};
  std::size_t classes = 10;
  int weight_bits = 1;
  int act_bits = 1;
  FaultModel fault_model = FaultModel::channel;
  double p_percent = 0.0;
  // Also place an injection layer after the hidden fully connected block.
  bool inject_fc = false;
  std::uint64_t init_seed = 0;
};

// cnv-s: three conv blocks (16, 32, 64 channels, 3x3, no padding; max-pool
// after blocks 1 and 2), a 64-wide hidden FC block and an FC output with batch
// norm. Every conv block ends in an injection layer (disabled).
//
// toy: conv(4 channels, 3x3) + pool and a 6-wide hidden FC block, each ending
// in an injection layer, then the FC output. Meant for inputs around 8x8.
Network build_topology(const TopologyOptions& opts);

// Weights uniform in [-1, 1) (so every multi-bit codebook level is reachable).
void init_parameters(Network& net, std::uint64_t seed);

}  // namespace fatnet
