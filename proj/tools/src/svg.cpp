#include "sharp_app/svg.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "sharp/geometry.hpp"
#include "sharp_app/table_io.hpp"

namespace sharp::app {

const std::array<const char*, 10> kPalette = {"#CC6677", "#332288", "#DDCC77", "#117733", "#88CCEE",
                                              "#882255", "#44AA99", "#999933", "#AA4499", "#DDDDDD"};

PlotResult write_svg(std::ostream& out, const Tensor& points, const std::vector<std::string>& labels,
                     const PlotOptions& options) {
  if (points.rank() != 2 || points.cols() != 2 || points.rows() == 0) {
    throw std::invalid_argument("nothing to plot: the projection has no points");
  }
  const auto pts = geom::to_points(points);
  const auto box = geom::bounding_box(pts);
  const double w = box.hi[0] - box.lo[0], h = box.hi[1] - box.lo[1];
  double side = std::max(w, h);
  if (side <= 0.0) side = 1.0;
  const double cx = 0.5 * (box.lo[0] + box.hi[0]), cy = 0.5 * (box.lo[1] + box.hi[1]);
  const double x0 = cx - 0.5 * side - 0.05 * side, y0 = cy - 0.5 * side - 0.05 * side;
  const double extent = 1.1 * side;
  // SVG y grows downwards; mirror about the centre of the view box.
  const double y_sum = 2.0 * y0 + extent;

  std::map<std::string, std::size_t> colour_of;
  std::vector<std::string> order;
  for (const auto& l : labels) {
    if (colour_of.try_emplace(l, order.size()).second) order.push_back(l);
  }
  PlotResult result{std::max<std::size_t>(order.size(), 1), order.size() > kPalette.size()};

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << format_number(options.pixel_size)
      << "\" height=\"" << format_number(options.pixel_size) << "\" viewBox=\"" << format_number(x0) << ' '
      << format_number(y0) << ' ' << format_number(extent) << ' ' << format_number(extent) << "\">\n"
      << "<rect x=\"" << format_number(x0) << "\" y=\"" << format_number(y0) << "\" width=\"" << format_number(extent)
      << "\" height=\"" << format_number(extent) << "\" fill=\"white\"/>\n";

  const double r = 0.004 * side;
  out << "<g stroke=\"none\">\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t c = labels.empty() ? 0 : colour_of[labels[i]];
    out << "<circle cx=\"" << format_number(pts[i][0]) << "\" cy=\"" << format_number(y_sum - pts[i][1])
        << "\" r=\"" << format_number(r) << "\" fill=\"" << kPalette[c % kPalette.size()] << "\"/>\n";
  }
  out << "</g>\n";

  if (options.per_class_hull) {
    out << "<g fill=\"none\" stroke-width=\"" << format_number(0.002 * side) << "\">\n";
    const std::size_t groups = std::max<std::size_t>(order.size(), 1);
    for (std::size_t c = 0; c < groups; ++c) {
      std::vector<geom::Point> members;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (labels.empty() || colour_of[labels[i]] == c) members.push_back(pts[i]);
      }
      const auto hull = geom::convex_hull(members);
      if (hull.size() < 3) continue;
      out << "<polygon stroke=\"" << kPalette[c % kPalette.size()] << "\" points=\"";
      for (std::size_t v = 0; v < hull.size(); ++v) {
        out << (v ? " " : "") << format_number(hull[v][0]) << ',' << format_number(y_sum - hull[v][1]);
      }
      out << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return result;
}

}  // namespace sharp::app
