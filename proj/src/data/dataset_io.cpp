#include "interprobe/data.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace interprobe::data {

namespace {

void write_split(const std::filesystem::path& path, const Matrix& features, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "label";
  for (long c = 0; c < features.cols(); ++c) out << ",x" << c;
  out << '\n';
  char buf[32];
  for (long r = 0; r < features.rows(); ++r) {
    out << labels[static_cast<std::size_t>(r)];
    for (long c = 0; c < features.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, features(r, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

void read_split(const std::filesystem::path& path, long dim, Matrix& features, std::vector<int>& labels) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  labels.clear();
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    int label = 0;
    auto res = std::from_chars(p, end, label);
    if (res.ec != std::errc()) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad label");
    labels.push_back(label);
    p = res.ptr;
    for (long c = 0; c < dim; ++c) {
      if (p >= end || *p != ',')
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                              " features");
      double v = 0.0;
      res = std::from_chars(p + 1, end, v);
      if (res.ec != std::errc()) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      values.push_back(v);
      p = res.ptr;
    }
    if (p != end) throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": trailing fields");
  }
  features = Eigen::Map<const Matrix>(values.data(), static_cast<long>(labels.size()), dim);
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {{"format", "interprobe-dataset"},
                         {"version", 1},
                         {"n_classes", data.n_classes},
                         {"dim", data.dim()},
                         {"n_train", data.train_features.rows()},
                         {"n_test", data.test_features.rows()},
                         {"provenance", nlohmann::json::parse(data.provenance.empty() ? "{}" : data.provenance)}};
  std::ofstream(dir / "dataset.json", std::ios::trunc) << meta.dump(2) << '\n';
  write_split(dir / "train.csv", data.train_features, data.train_labels);
  write_split(dir / "test.csv", data.test_features, data.test_labels);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) throw Error("no dataset.json in " + dir.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed dataset.json: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "interprobe-dataset") throw ValidationError(dir.string() + " is not a dataset");
  Dataset data;
  data.n_classes = meta.at("n_classes").get<int>();
  const long dim = meta.at("dim").get<long>();
  data.provenance = meta.at("provenance").dump();
  read_split(dir / "train.csv", dim, data.train_features, data.train_labels);
  read_split(dir / "test.csv", dim, data.test_features, data.test_labels);
  data.validate();
  return data;
}

}  // namespace interprobe::data
