#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fatnet/tensor.hpp"

namespace fatnet {

/// Labeled images, normalized to [-1, 1], in a fixed sample order.
struct Dataset {
  Tensor4 images;  // (N, c, h, w)
  std::vector<std::uint8_t> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape4 sample_shape() const { return {1, images.shape().c, images.shape().h, images.shape().w}; }

  Tensor4 gather_images(std::span<const std::size_t> indices) const;
  std::vector<std::uint8_t> gather_labels(std::span<const std::size_t> indices) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // First `count` samples of a seeded permutation; the whole set if count >= size().
  Dataset random_subset(std::size_t count, std::uint64_t seed, const char* stream) const;
};

enum class DatasetFormat { idx, cifar_binary };

DatasetFormat parse_dataset_format(const std::string& s);

struct DatasetHandle {
  std::string name;
  Shape4 image_shape;  // n = 1
  std::size_t classes = 0;
  Dataset train;
  Dataset test;
  // pixel -> pixel * norm_scale + norm_offset
  float norm_scale = 2.0f / 255.0f;
  float norm_offset = -1.0f;
};

struct LoadOptions {
  // Only for IDX directories holding a single images/labels pair: number of
  // samples held out as the test split (seeded shuffle).
  std::size_t holdout = 1000;
  std::uint64_t seed = 0;
};

// Reads a whole file, transparently gunzipping .gz content.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct RawImages {
  std::size_t count = 0, channels = 1, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // count * channels * rows * cols
  std::vector<std::uint8_t> labels;  // empty for IDX image files
};

// IDX image file (magic 0x00000803, big-endian dims). Throws FormatError.
RawImages parse_idx_images(std::span<const std::uint8_t> bytes);
// IDX label file (magic 0x00000801).
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
// CIFAR-10 binary batch: records of 1 label byte + 3072 pixel bytes.
RawImages parse_cifar_batch(std::span<const std::uint8_t> bytes);

Dataset to_dataset(const RawImages& raw, std::vector<std::uint8_t> labels, std::size_t classes);

// `dir` holds either
//   idx:  train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte,
//         t10k-labels-idx1-ubyte (each optionally .gz), or a single
//         images-idx3-ubyte / labels-idx1-ubyte pair that is split by `holdout`;
//   cifar-binary: data_batch_1..5.bin and test_batch.bin.
DatasetHandle load_dataset(const std::filesystem::path& dir, DatasetFormat format,
                           const LoadOptions& opts = {});

}  // namespace fatnet
