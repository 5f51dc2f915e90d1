#include "fatnet/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <numeric>

#include "fatnet/errors.hpp"
#include "fatnet/rng.hpp"

namespace fatnet {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) {
    throw FormatError("truncated header: expected at least " + std::to_string(off + 4) +
                          " bytes, got " + std::to_string(b.size()),
                      b.size());
  }
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void check_length(std::span<const std::uint8_t> b, std::size_t expected, const char* what) {
  if (b.size() != expected) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(b.size()),
                      std::min(b.size(), expected));
  }
}

std::filesystem::path find_file(const std::filesystem::path& dir, const std::string& base) {
  for (const auto& cand : {dir / base, dir / (base + ".gz")}) {
    if (std::filesystem::exists(cand)) return cand;
  }
  return {};
}

}  // namespace

Tensor4 Dataset::gather_images(std::span<const std::size_t> indices) const {
  Shape4 s = images.shape();
  const std::size_t stride = s.sample();
  s.n = indices.size();
  Tensor4 out(s);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(images.data() + indices[i] * stride, stride, out.data() + i * stride);
  }
  return out;
}

std::vector<std::uint8_t> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<std::uint8_t> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  return {gather_images(indices), gather_labels(indices), classes};
}

Dataset Dataset::random_subset(std::size_t count, std::uint64_t seed, const char* stream) const {
  if (count == 0 || count >= size()) return *this;
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = substream(seed, stream);
  shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  return subset(idx);
}

DatasetFormat parse_dataset_format(const std::string& s) {
  if (s == "idx") return DatasetFormat::idx;
  if (s == "cifar-binary") return DatasetFormat::cifar_binary;
  throw ConfigError("unknown dataset format '" + s + "' (expected idx or cifar-binary)");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  int n;
  while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError("read error in " + path.string());
  return out;
}

RawImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImagesMagic) {
    throw FormatError("bad IDX image magic " + std::to_string(magic) + " (expected 2051)", 0);
  }
  RawImages raw;
  raw.count = read_be32(bytes, 4);
  raw.rows = read_be32(bytes, 8);
  raw.cols = read_be32(bytes, 12);
  check_length(bytes, 16 + raw.count * raw.rows * raw.cols, "IDX image file");
  raw.pixels.assign(bytes.begin() + 16, bytes.end());
  return raw;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelsMagic) {
    throw FormatError("bad IDX label magic " + std::to_string(magic) + " (expected 2049)", 0);
  }
  const std::size_t count = read_be32(bytes, 4);
  check_length(bytes, 8 + count, "IDX label file");
  return {bytes.begin() + 8, bytes.end()};
}

RawImages parse_cifar_batch(std::span<const std::uint8_t> bytes) {
  if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
    const std::size_t expected = (bytes.size() / kCifarRecord + 1) * kCifarRecord;
    throw FormatError("CIFAR-10 batch: expected a multiple of 3073 bytes (next: " +
                          std::to_string(expected) + "), got " + std::to_string(bytes.size()),
                      bytes.size() - bytes.size() % kCifarRecord);
  }
  RawImages raw;
  raw.count = bytes.size() / kCifarRecord;
  raw.channels = 3;
  raw.rows = 32;
  raw.cols = 32;
  raw.pixels.reserve(raw.count * 3072);
  raw.labels.reserve(raw.count);
  for (std::size_t i = 0; i < raw.count; ++i) {
    const auto* rec = bytes.data() + i * kCifarRecord;
    if (rec[0] > 9) throw FormatError("CIFAR-10 label out of range", i * kCifarRecord);
    raw.labels.push_back(rec[0]);
    raw.pixels.insert(raw.pixels.end(), rec + 1, rec + kCifarRecord);
  }
  return raw;
}

Dataset to_dataset(const RawImages& raw, std::vector<std::uint8_t> labels, std::size_t classes) {
  if (labels.size() != raw.count) {
    throw FormatError("image count " + std::to_string(raw.count) + " does not match label count " +
                          std::to_string(labels.size()),
                      0);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw FormatError("label " + std::to_string(labels[i]) + " out of range", 8 + i);
    }
  }
  Tensor4 images({raw.count, raw.channels, raw.rows, raw.cols});
  auto v = images.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(raw.pixels[i]) * (2.0f / 255.0f) - 1.0f;
  return {std::move(images), std::move(labels), classes};
}

DatasetHandle load_dataset(const std::filesystem::path& dir, DatasetFormat format,
                           const LoadOptions& opts) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  DatasetHandle h;
  h.classes = 10;
  if (format == DatasetFormat::idx) {
    h.name = "idx:" + dir.filename().string();
    const auto load_pair = [&](const std::string& images, const std::string& labels) {
      const auto ip = find_file(dir, images);
      const auto lp = find_file(dir, labels);
      if (ip.empty() || lp.empty()) return Dataset{};
      const RawImages raw = parse_idx_images(read_file_bytes(ip));
      return to_dataset(raw, parse_idx_labels(read_file_bytes(lp)), h.classes);
    };
    h.train = load_pair("train-images-idx3-ubyte", "train-labels-idx1-ubyte");
    h.test = load_pair("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
    if (h.train.size() == 0) {
      Dataset all = load_pair("images-idx3-ubyte", "labels-idx1-ubyte");
      if (all.size() == 0) throw IoError("no IDX image/label files in " + dir.string());
      if (opts.holdout == 0 || opts.holdout >= all.size()) {
        throw ConfigError("holdout must be in [1, " + std::to_string(all.size()) + ")");
      }
      std::vector<std::size_t> idx(all.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng rng = substream(opts.seed, "data-split");
      shuffle(idx.begin(), idx.end(), rng);
      const auto split = idx.begin() + static_cast<std::ptrdiff_t>(opts.holdout);
      std::vector<std::size_t> test_idx(idx.begin(), split);
      std::vector<std::size_t> train_idx(split, idx.end());
      h.test = all.subset(test_idx);
      h.train = all.subset(train_idx);
    } else if (h.test.size() == 0) {
      throw IoError("found IDX training files but no t10k test files in " + dir.string());
    }
  } else {
    h.name = "cifar10:" + dir.filename().string();
    RawImages train;
    std::vector<std::uint8_t> train_labels;
    for (int b = 1; b <= 5; ++b) {
      const auto p = find_file(dir, "data_batch_" + std::to_string(b) + ".bin");
      if (p.empty()) continue;
      RawImages part = parse_cifar_batch(read_file_bytes(p));
      train.count += part.count;
      train.channels = part.channels;
      train.rows = part.rows;
      train.cols = part.cols;
      train.pixels.insert(train.pixels.end(), part.pixels.begin(), part.pixels.end());
      train_labels.insert(train_labels.end(), part.labels.begin(), part.labels.end());
    }
    const auto tp = find_file(dir, "test_batch.bin");
    if (train.count == 0 || tp.empty()) throw IoError("no CIFAR-10 batches in " + dir.string());
    RawImages test = parse_cifar_batch(read_file_bytes(tp));
    h.train = to_dataset(train, std::move(train_labels), h.classes);
    std::vector<std::uint8_t> test_labels = test.labels;
    h.test = to_dataset(test, std::move(test_labels), h.classes);
  }
  h.image_shape = h.train.sample_shape();
  return h;
}

}  // namespace fatnet
