#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp {

/// Malformed or inconsistent input data.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Dataset {
  std::string name;
  Tensor x;                              // [m, n]
  std::vector<int> labels;               // empty, or one label in 1..K per row
  std::vector<std::string> label_names;  // label k is label_names[k - 1]
  std::vector<std::string> feature_names;
  std::vector<double> feature_min;       // raw ranges, recorded by scale_minmax
  std::vector<double> feature_max;

  std::size_t rows() const { return x.rows(); }
  std::size_t dims() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }
  std::size_t classes() const { return label_names.size(); }
  bool scaled() const { return !feature_min.empty(); }
};

/// Comma-separated file with a header row. Every column except the label
/// column must be numeric and finite. Labels are factorised to 1..K:
/// ascending numeric order when every label parses as a number, otherwise
/// lexicographic.
Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column = {});

/// IDX image file (magic 0x803) and optional label file (magic 0x801).
/// Pixels are divided by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path = {});

/// Per-feature min-max scaling to [0, 1]; constant features map to 0. The
/// stored ranges always refer to the raw data, so rescaling composes.
Dataset scale_minmax(Dataset data);

/// Applies stored ranges to raw rows, clamping to [0, 1].
Tensor apply_scaling(const Tensor& raw, std::span<const double> feature_min,
                     std::span<const double> feature_max);

/// Class-stratified sample of `count` rows without replacement, in original
/// row order. Per-class quotas use largest-remainder rounding.
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

/// Content hash of features and labels.
std::uint64_t fingerprint(const Dataset& data);

/// Maps labels to 1..K (see load_csv) and returns the names in label order.
std::vector<int> factorize(std::span<const std::string> raw, std::vector<std::string>& names);

}  // namespace sharp
