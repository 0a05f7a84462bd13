#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robustbench/tensor.hpp"

namespace robustbench {

enum class DatasetFormat { Csv, Idx };

std::optional<DatasetFormat> parse_dataset_format(const std::string& name);
std::string to_string(DatasetFormat format);

struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<Label> labels;
  std::string path;
  DatasetFormat format = DatasetFormat::Csv;

  std::size_t size() const { return inputs.size(); }
};

/// One sample per row: integer label, then the features. A first row whose
/// first cell is not numeric is treated as a header. Inputs are 1-D.
Dataset load_csv_dataset(const std::string& path);

/// MNIST-style IDX pair: images (magic 0x00000803, dims [n, h, w]) and labels
/// (magic 0x00000801, dims [n]), big-endian. Bytes are mapped to
/// v * (b_max - b_min) / 255 + b_min.
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path, const Bounds& bounds);

/// Dispatches on format. For IDX, `path` is either the images file (with
/// `labels_path` given) or a directory holding one file whose name contains
/// "images" and one whose name contains "labels".
Dataset load_dataset(const std::string& path, DatasetFormat format, const Bounds& bounds,
                     const std::optional<std::string>& labels_path = {});

/// Writes samples in the CSV dataset format (no header).
void write_csv_dataset(const std::string& path, const std::vector<Tensor>& inputs, const std::vector<Label>& labels);

}  // namespace robustbench
