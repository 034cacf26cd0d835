#include "interprobe/data.hpp"

#include <zlib.h>

#include <cstdio>

#include <json.hpp>

namespace interprobe::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

void check_magic(std::span<const std::uint8_t> bytes, std::size_t header, std::uint32_t expected, const char* what) {
  if (bytes.size() < 4) throw FormatError(FormatError::Kind::truncated, std::string(what) + ": file shorter than magic");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected)
    throw FormatError(FormatError::Kind::magic_mismatch,
                      std::string(what) + ": magic " + hex(magic) + ", expected " + hex(expected));
  if (bytes.size() < header) throw FormatError(FormatError::Kind::truncated, std::string(what) + ": truncated header");
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, 16, kImagesMagic, "idx images");
  const std::uint64_t count = read_be32(bytes, 4);
  const std::uint64_t rows = read_be32(bytes, 8);
  const std::uint64_t cols = read_be32(bytes, 12);
  const std::uint64_t payload = bytes.size() - 16;
  const std::uint64_t pixels = rows * cols;
  // Divide rather than multiply: count * pixels can overflow on hostile headers.
  if (pixels != 0 && count > payload / pixels)
    throw FormatError(FormatError::Kind::truncated, "idx images: header announces " + std::to_string(count) +
                                                        " images of " + std::to_string(rows) + "x" +
                                                        std::to_string(cols) + " but the file holds " +
                                                        std::to_string(payload) + " pixel bytes");
  if (count * pixels != payload)
    throw FormatError(FormatError::Kind::length_inconsistency, "idx images: trailing bytes after pixel data");

  IdxImages out;
  out.rows = static_cast<int>(rows);
  out.cols = static_cast<int>(cols);
  out.features.resize(static_cast<long>(count), static_cast<long>(pixels));
  const std::uint8_t* px = bytes.data() + 16;
  for (std::uint64_t i = 0; i < count * pixels; ++i) out.features.data()[i] = px[i] / 255.0;
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, 8, kLabelsMagic, "idx labels");
  const std::uint64_t count = read_be32(bytes, 4);
  const std::uint64_t payload = bytes.size() - 8;
  if (count > payload)
    throw FormatError(FormatError::Kind::truncated, "idx labels: header announces " + std::to_string(count) +
                                                        " labels but the file holds " + std::to_string(payload));
  if (count != payload)
    throw FormatError(FormatError::Kind::length_inconsistency, "idx labels: trailing bytes after label data");
  return std::vector<int>(bytes.begin() + 8, bytes.end());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int n = gzread(file, buf, sizeof buf);
    if (n < 0) {
      int code = 0;
      const std::string msg = gzerror(file, &code);
      gzclose(file);
      throw FormatError(FormatError::Kind::io, "error reading " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  gzclose(file);
  return out;
}

LabelledImages load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  auto images = parse_idx_images(read_file_bytes(images_path));
  auto labels = parse_idx_labels(read_file_bytes(labels_path));
  if (static_cast<long>(labels.size()) != images.features.rows())
    throw FormatError(FormatError::Kind::count_mismatch,
                      "idx: " + std::to_string(images.features.rows()) + " images but " +
                          std::to_string(labels.size()) + " labels");
  return {std::move(images.features), std::move(labels)};
}

MnistPaths MnistPaths::in_directory(const std::filesystem::path& dir) {
  auto pick = [&](const std::string& stem) {
    const auto plain = dir / stem;
    if (std::filesystem::exists(plain)) return plain;
    return dir / (stem + ".gz");
  };
  return {pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"),
          pick("t10k-labels-idx1-ubyte")};
}

Dataset load_mnist(const MnistPaths& paths, long train_limit, long test_limit) {
  auto train = load_idx(paths.train_images, paths.train_labels);
  auto test = load_idx(paths.test_images, paths.test_labels);
  auto truncate = [](LabelledImages& part, long limit) {
    if (limit <= 0 || limit >= part.features.rows()) return;
    part.features.conservativeResize(limit, Eigen::NoChange);
    part.labels.resize(static_cast<std::size_t>(limit));
  };
  truncate(train, train_limit);
  truncate(test, test_limit);
  Dataset data;
  data.train_features = std::move(train.features);
  data.train_labels = std::move(train.labels);
  data.test_features = std::move(test.features);
  data.test_labels = std::move(test.labels);
  data.n_classes = 10;
  nlohmann::json prov = {{"kind", "mnist"},
                         {"train_images", paths.train_images.string()},
                         {"train_labels", paths.train_labels.string()},
                         {"test_images", paths.test_images.string()},
                         {"test_labels", paths.test_labels.string()},
                         {"n_train", data.train_features.rows()},
                         {"n_test", data.test_features.rows()}};
  data.provenance = prov.dump();
  data.validate();
  return data;
}

}  // namespace interprobe::data
