#include "interprobe/data.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace interprobe::data {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'C', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 4 + 1;

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_le32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[offset + i]} << (8 * i);
  return v;
}

}  // namespace

Flags ActivationSet::base_correct() const {
  Flags out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == base_predictions[i];
  return out;
}

void ActivationSet::validate() const {
  const long n = activations.rows();
  if (static_cast<long>(labels.size()) != n) throw DimensionError("activation labels", n, static_cast<long>(labels.size()));
  if (static_cast<long>(base_predictions.size()) != n)
    throw DimensionError("activation predictions", n, static_cast<long>(base_predictions.size()));
  if (n_classes < 1 || n_classes > 256) throw ValidationError("activation set: n_classes must lie in [1, 256]");
  check_labels(labels, n_classes);
  check_labels(base_predictions, n_classes);
  if (std::abs(mean_flag(base_correct()) - base_accuracy) > 1e-12)
    throw ValidationError("activation set: base_accuracy disagrees with predictions");
}

ActivationSet ActivationSet::make(Matrix activations, std::vector<int> labels, std::vector<int> base_predictions,
                                  int n_classes, Split split, std::string source) {
  ActivationSet set;
  set.activations = std::move(activations);
  set.labels = std::move(labels);
  set.base_predictions = std::move(base_predictions);
  set.n_classes = n_classes;
  set.split = split;
  set.source = std::move(source);
  if (set.labels.size() == set.base_predictions.size()) set.base_accuracy = mean_flag(set.base_correct());
  set.validate();
  return set;
}

std::vector<std::uint8_t> encode_activations(const ActivationSet& set) {
  set.validate();
  const auto n = static_cast<std::size_t>(set.size());
  const auto dim = static_cast<std::size_t>(set.dim());
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + n * dim * 4 + 2 * n);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le32(out, kVersion);
  put_le32(out, static_cast<std::uint32_t>(n));
  put_le32(out, static_cast<std::uint32_t>(dim));
  put_le32(out, static_cast<std::uint32_t>(set.n_classes));
  out.push_back(static_cast<std::uint8_t>(set.split));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(set.activations(static_cast<long>(r), static_cast<long>(c)))));
  for (int label : set.labels) out.push_back(static_cast<std::uint8_t>(label));
  for (int pred : set.base_predictions) out.push_back(static_cast<std::uint8_t>(pred));
  return out;
}

ActivationSet decode_activations(std::span<const std::uint8_t> bytes, std::string source) {
  using Kind = FormatError::Kind;
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                      [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
    throw FormatError(Kind::magic_mismatch, "activation dump: bad magic (expected \"NACT\")");
  if (bytes.size() < kHeaderBytes) throw FormatError(Kind::length_inconsistency, "activation dump: truncated header");
  const std::uint32_t version = get_le32(bytes, 4);
  if (version != kVersion)
    throw FormatError(Kind::version_mismatch, "activation dump: version " + std::to_string(version) + ", expected 1");
  const std::uint64_t n = get_le32(bytes, 8);
  const std::uint64_t dim = get_le32(bytes, 12);
  const std::uint32_t n_classes = get_le32(bytes, 16);
  const std::uint8_t split = bytes[20];
  if (split > 1) throw FormatError(Kind::length_inconsistency, "activation dump: bad split flag");
  // Per-row division avoids overflow of n * dim on hostile headers.
  const std::uint64_t per_row = dim * 4 + 2;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload % per_row != 0 || payload / per_row != n)
    throw FormatError(Kind::length_inconsistency,
                      "activation dump: header announces " + std::to_string(n) + " rows of width " +
                          std::to_string(dim) + " but the payload holds " + std::to_string(payload) + " bytes");
  ActivationSet set;
  set.activations.resize(static_cast<long>(n), static_cast<long>(dim));
  std::size_t offset = kHeaderBytes;
  for (std::uint64_t r = 0; r < n; ++r)
    for (std::uint64_t c = 0; c < dim; ++c, offset += 4)
      set.activations(static_cast<long>(r), static_cast<long>(c)) = std::bit_cast<float>(get_le32(bytes, offset));
  set.labels.assign(bytes.begin() + static_cast<long>(offset), bytes.begin() + static_cast<long>(offset + n));
  offset += n;
  set.base_predictions.assign(bytes.begin() + static_cast<long>(offset), bytes.begin() + static_cast<long>(offset + n));
  set.n_classes = static_cast<int>(n_classes);
  set.split = static_cast<Split>(split);
  set.source = std::move(source);
  set.base_accuracy = mean_flag(set.base_correct());
  try {
    set.validate();
  } catch (const Error& e) {
    throw FormatError(Kind::length_inconsistency, std::string("activation dump: ") + e.what());
  }
  return set;
}

void dump_activations(const ActivationSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_activations(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::io, "short write to " + path.string());
}

ActivationSet load_activations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_activations(bytes, path.string());
}

}  // namespace interprobe::data
