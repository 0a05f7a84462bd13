#include "robustbench/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace robustbench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_double(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line) + ": " + what);
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(ErrorCode::ParseError, path + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

}  // namespace

std::optional<DatasetFormat> parse_dataset_format(const std::string& name) {
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "idx") return DatasetFormat::Idx;
  return std::nullopt;
}

std::string to_string(DatasetFormat format) { return format == DatasetFormat::Csv ? "csv" : "idx"; }

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  Dataset ds;
  ds.path = path;
  ds.format = DatasetFormat::Csv;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!parse_double(cells[0])) {
      if (ds.inputs.empty() && !width) {
        width = cells.size();  // header
        continue;
      }
      csv_error(path, line_no, "label is not numeric");
    }
    if (cells.size() < 2) csv_error(path, line_no, "row needs a label and at least one feature");
    if (width && *width != cells.size()) csv_error(path, line_no, "row has a different number of columns");
    width = cells.size();

    const double label = *parse_double(cells[0]);
    if (label < 0 || label != static_cast<double>(static_cast<std::size_t>(label))) {
      csv_error(path, line_no, "label must be a non-negative integer");
    }
    std::vector<double> features;
    features.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto v = parse_double(cells[i]);
      if (!v || !std::isfinite(*v)) csv_error(path, line_no, "column " + std::to_string(i) + " is not a finite number");
      features.push_back(*v);
    }
    ds.labels.push_back(Label{static_cast<std::size_t>(label)});
    ds.inputs.emplace_back(std::move(features));
  }
  return ds;
}

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path, const Bounds& bounds) {
  auto images = open_binary(images_path);
  auto labels = open_binary(labels_path);

  const std::uint32_t image_magic = read_be32(images, images_path);
  if (image_magic != 0x00000803) throw Error(ErrorCode::MagicMismatch, images_path + ": not an IDX image file");
  const std::uint32_t label_magic = read_be32(labels, labels_path);
  if (label_magic != 0x00000801) throw Error(ErrorCode::MagicMismatch, labels_path + ": not an IDX label file");

  const std::uint32_t n = read_be32(images, images_path);
  const std::uint32_t h = read_be32(images, images_path);
  const std::uint32_t w = read_be32(images, images_path);
  const std::uint32_t n_labels = read_be32(labels, labels_path);
  if (n != n_labels) {
    throw Error(ErrorCode::CountMismatch,
                std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }
  if (h == 0 || w == 0) throw Error(ErrorCode::ParseError, images_path + ": zero image dimension");

  Dataset ds;
  ds.path = images_path;
  ds.format = DatasetFormat::Idx;
  const std::size_t pixels = std::size_t{h} * w;
  std::vector<unsigned char> buffer(pixels);
  const double scale = bounds.range() / 255.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(pixels))) {
      throw Error(ErrorCode::ParseError, images_path + ": truncated image data");
    }
    std::vector<double> values(pixels);
    for (std::size_t p = 0; p < pixels; ++p) values[p] = buffer[p] * scale + bounds.min;
    ds.inputs.emplace_back(std::move(values), Shape{h, w});
    char label = 0;
    if (!labels.read(&label, 1)) throw Error(ErrorCode::ParseError, labels_path + ": truncated label data");
    ds.labels.push_back(Label{static_cast<unsigned char>(label)});
  }
  return ds;
}

Dataset load_dataset(const std::string& path, DatasetFormat format, const Bounds& bounds,
                     const std::optional<std::string>& labels_path) {
  if (format == DatasetFormat::Csv) return load_csv_dataset(path);
  if (labels_path) return load_idx_dataset(path, *labels_path, bounds);
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) {
    throw Error(ErrorCode::ConfigError, "IDX datasets need a labels path or a directory holding both files");
  }
  std::optional<std::string> images;
  std::optional<std::string> labels;
  for (const auto& entry : fs::directory_iterator(path)) {
    const std::string name = entry.path().filename().string();
    if (name.find("images") != std::string::npos) images = entry.path().string();
    if (name.find("labels") != std::string::npos) labels = entry.path().string();
  }
  if (!images || !labels) throw Error(ErrorCode::IoError, path + ": missing *images* or *labels* IDX file");
  return load_idx_dataset(*images, *labels, bounds);
}

void write_csv_dataset(const std::string& path, const std::vector<Tensor>& inputs, const std::vector<Label>& labels) {
  if (inputs.size() != labels.size()) throw Error(ErrorCode::CountMismatch, "inputs and labels differ in length");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out << labels[i].index;
    for (double v : inputs[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace robustbench
