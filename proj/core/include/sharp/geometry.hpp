#pragma once

#include <array>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp::geom {

using Point = std::array<double, 2>;

/// Rows of a [m, 2] matrix as points.
std::vector<Point> to_points(const Tensor& p);

/// Counter-clockwise convex hull without collinear points (monotone chain).
std::vector<Point> convex_hull(std::vector<Point> points);

/// Signed area, positive for counter-clockwise polygons.
double polygon_area(const std::vector<Point>& polygon);

/// Inside or on the boundary of a counter-clockwise convex polygon, with an
/// absolute slack `tol` on each edge's signed distance.
bool inside_convex(const std::vector<Point>& polygon, const Point& q, double tol = 0.0);

/// Polygon scaled by `factor` about its vertex centroid.
std::vector<Point> dilate(const std::vector<Point>& polygon, double factor);

struct Box {
  Point lo, hi;
  double area() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]); }
};
Box bounding_box(const std::vector<Point>& points);

}  // namespace sharp::geom
