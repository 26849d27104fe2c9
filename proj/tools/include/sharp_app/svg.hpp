#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp::app {

/// Paul Tol's muted qualitative scheme, readable under common colour-vision
/// deficiencies.
extern const std::array<const char*, 10> kPalette;

struct PlotOptions {
  bool per_class_hull = false;
  double pixel_size = 800.0;
};

struct PlotResult {
  std::size_t classes = 0;
  bool palette_cycled = false;
};

/// Square-viewBox SVG 1.1 scatterplot, one circle per point, padded by 5% of
/// the larger data extent. Labels are coloured in order of first appearance.
PlotResult write_svg(std::ostream& out, const Tensor& points, const std::vector<std::string>& labels,
                     const PlotOptions& options);

}  // namespace sharp::app
