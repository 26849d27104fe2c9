#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sharp/dataset.hpp"
#include "sharp/metrics.hpp"

namespace sharp::app {

/// Shortest round-trip decimal form.
std::string format_number(double value);

struct Projection {
  Tensor points;                    // [m, 2]
  std::vector<std::string> labels;  // empty when the file has no label column
};

/// "index,x,y[,label]" rows in index order.
void write_projection(const std::string& path, const Tensor& points, const std::vector<std::string>& labels);
Projection read_projection(const std::string& path);

/// "metric,value" rows; absent label-dependent metrics are left out.
void write_metrics(const std::string& path, const MetricsReport& report);

/// Loads IDX (recognised by its magic number) or CSV input. For CSV the label
/// column is used when present in the header.
Dataset load_any(const std::string& path, const std::string& label_column, const std::string& label_file);

/// Label name of every row, or empty.
std::vector<std::string> label_strings(const Dataset& data);

}  // namespace sharp::app
