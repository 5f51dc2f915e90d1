#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "fatnet/dataset.hpp"
#include "fatnet/errors.hpp"
#include "test_util.hpp"

using namespace fatnet;
namespace fs = std::filesystem;

static void be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int s = 24; s >= 0; s -= 8) v.push_back(static_cast<std::uint8_t>(x >> s));
}

static std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> v;
  be32(v, 0x00000803);
  be32(v, n);
  be32(v, rows);
  be32(v, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) v.push_back(static_cast<std::uint8_t>(i % 256));
  return v;
}

static std::vector<std::uint8_t> idx_labels(std::uint32_t n) {
  std::vector<std::uint8_t> v;
  be32(v, 0x00000801);
  be32(v, n);
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(static_cast<std::uint8_t>(i % 10));
  return v;
}

static void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), b.size());
}

static fs::path fresh_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST_CASE("IDX images") {
  const RawImages raw = parse_idx_images(idx_images(10, 28, 28));
  CHECK(raw.count == 10);
  CHECK(raw.rows == 28);
  CHECK(raw.cols == 28);
  CHECK(raw.pixels.size() == 7840);
}

TEST_CASE("IDX errors carry offsets and byte counts") {
  auto bytes = idx_images(10, 28, 28);
  bytes.resize(bytes.size() - 5);
  try {
    parse_idx_images(bytes);
    FAIL("truncated file accepted");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("7856") != std::string::npos);  // expected 16 + 7840
    CHECK(msg.find("7851") != std::string::npos);
  }
  auto bad = idx_images(1, 2, 2);
  bad[3] = 0x01;
  CHECK_THROWS_AS(parse_idx_images(bad), FormatError);
  CHECK_THROWS_AS(parse_idx_images(std::vector<std::uint8_t>{0, 0, 8}), FormatError);
  CHECK_THROWS_AS(parse_idx_labels(idx_images(1, 1, 1)), FormatError);
}

TEST_CASE("CIFAR-10 batches") {
  std::vector<std::uint8_t> b(3 * 3073);
  for (std::size_t r = 0; r < 3; ++r) {
    b[r * 3073] = static_cast<std::uint8_t>(r + 7);
    b[r * 3073 + 1] = 255;
  }
  const RawImages raw = parse_cifar_batch(b);
  CHECK(raw.count == 3);
  CHECK(raw.channels == 3);
  CHECK(raw.rows == 32);
  CHECK(raw.labels == std::vector<std::uint8_t>{7, 8, 9});
  const Dataset d = to_dataset(raw, raw.labels, 10);
  CHECK(d.images.shape() == Shape4{3, 3, 32, 32});
  CHECK(d.images.at(0, 0, 0, 0) == 1.0f);
  CHECK(d.images.at(0, 0, 0, 1) == -1.0f);

  b.pop_back();
  CHECK_THROWS_AS(parse_cifar_batch(b), FormatError);
  b.push_back(0);
  b[0] = 12;
  CHECK_THROWS_AS(parse_cifar_batch(b), FormatError);
}

TEST_CASE("normalization to [-1, 1] and label range") {
  const RawImages raw = parse_idx_images(idx_images(2, 16, 16));
  const Dataset d = to_dataset(raw, {1, 2}, 10);
  for (float v : d.images.values()) CHECK((v >= -1.0f && v <= 1.0f));
  CHECK(d.images[255] == 1.0f);
  CHECK_THROWS_AS(to_dataset(raw, {1, 12}, 10), FormatError);
  CHECK_THROWS_AS(to_dataset(raw, {1}, 10), FormatError);
}

TEST_CASE("standard MNIST directory, plain and gzipped") {
  const fs::path d = fresh_dir("fatnet_mnist_std");
  write_bytes(d / "train-images-idx3-ubyte", idx_images(20, 4, 4));
  write_bytes(d / "train-labels-idx1-ubyte", idx_labels(20));
  const auto test_images = idx_images(5, 4, 4);
  gzFile gz = gzopen((d / "t10k-images-idx3-ubyte.gz").c_str(), "wb");
  gzwrite(gz, test_images.data(), static_cast<unsigned>(test_images.size()));
  gzclose(gz);
  write_bytes(d / "t10k-labels-idx1-ubyte", idx_labels(5));

  const DatasetHandle h = load_dataset(d, DatasetFormat::idx);
  CHECK(h.train.size() == 20);
  CHECK(h.test.size() == 5);
  CHECK(h.classes == 10);
  CHECK(h.image_shape == Shape4{1, 1, 4, 4});
  fs::remove_all(d);
}

TEST_CASE("single pair is split deterministically") {
  const fs::path d = fresh_dir("fatnet_mnist_pair");
  write_bytes(d / "images-idx3-ubyte", idx_images(50, 2, 2));
  write_bytes(d / "labels-idx1-ubyte", idx_labels(50));
  const DatasetHandle a = load_dataset(d, DatasetFormat::idx, {.holdout = 10, .seed = 1});
  const DatasetHandle b = load_dataset(d, DatasetFormat::idx, {.holdout = 10, .seed = 1});
  CHECK(a.train.size() == 40);
  CHECK(a.test.size() == 10);
  CHECK(a.test.labels == b.test.labels);
  CHECK_THROWS_AS(load_dataset(d, DatasetFormat::idx, {.holdout = 50}), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("missing files are io errors") {
  const fs::path d = fresh_dir("fatnet_empty");
  CHECK_THROWS_AS(load_dataset(d, DatasetFormat::idx), IoError);
  CHECK_THROWS_AS(load_dataset(d, DatasetFormat::cifar_binary), IoError);
  CHECK_THROWS_AS(parse_dataset_format("png"), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("bundled MNIST sample") {
  const std::string dir = testutil::test_data_dir();
  if (dir.empty()) return;
  const DatasetHandle h = load_dataset(dir, DatasetFormat::idx);
  CHECK(h.train.size() + h.test.size() == 5000);
  CHECK(h.test.size() == 1000);
  std::vector<int> counts(10);
  for (auto l : h.test.labels) counts[l]++;
  for (int c : counts) CHECK(c > 50);
}

TEST_CASE("subsets") {
  const Dataset d = testutil::band_dataset(30, 4, 3, 1);
  const Dataset s = d.random_subset(10, 5, "eval-subset");
  CHECK(s.size() == 10);
  CHECK(d.random_subset(10, 5, "eval-subset").labels == s.labels);
  CHECK(d.random_subset(100, 5, "eval-subset").size() == 30);
}
