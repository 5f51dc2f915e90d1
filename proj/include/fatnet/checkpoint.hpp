#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fatnet/network.hpp"

namespace fatnet {

// Binary checkpoint layout, all integers little-endian:
//
//   "FATNETCK"            8-byte magic
//   u32 version           = kCheckpointVersion
//   str id                u32 length + bytes
//   u32 classes, u32 c, u32 h, u32 w     input sample shape
//   u32 layer_count
//   per layer:
//     u32 kind, u32 in_channels, u32 out_channels, u32 kernel, u32 padding
//     i32 weight_bits, i32 act_bits, f64 probability, u8 fault_model
//     u8 injection_status, u64 injection_seed
//     u32 codebook_bits (0 = none), u32 count, f32 x count   activation codebook
//     u32 tensor_count, per tensor: str name, u32 n,c,h,w, f32 x (n*c*h*w)
//         (trainable parameters first, then BN running statistics)
//   "END!"                4-byte trailer
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_network(const Network& net);
Network deserialize_network(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

// Order-sensitive FNV-1a digest of all parameter and buffer bytes.
std::uint64_t parameter_hash(const Network& net);

}  // namespace fatnet
