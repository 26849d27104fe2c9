#include "sharp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sharp::geom {

namespace {
double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}
}  // namespace

std::vector<Point> to_points(const Tensor& p) {
  if (p.rank() != 2 || p.cols() != 2) throw ShapeError("expected a [m, 2] matrix, got " + to_string(p.shape()));
  std::vector<Point> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = {p.at(i, 0), p.at(i, 1)};
  return out;
}

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t h = 0;
  for (const auto& q : pts) {
    while (h >= 2 && cross(hull[h - 2], hull[h - 1], q) <= 0) --h;
    hull[h++] = q;
  }
  for (std::size_t i = pts.size() - 1, lower = h + 1; i-- > 0;) {
    while (h >= lower && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
    hull[h++] = pts[i];
  }
  hull.resize(h - 1);
  return hull;
}

double polygon_area(const std::vector<Point>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

bool inside_convex(const std::vector<Point>& poly, const Point& q, double tol) {
  if (poly.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (cross(a, b, q) / len < -tol) return false;
  }
  return true;
}

std::vector<Point> dilate(const std::vector<Point>& poly, double factor) {
  Point c{0.0, 0.0};
  for (const auto& p : poly) {
    c[0] += p[0];
    c[1] += p[1];
  }
  c[0] /= static_cast<double>(poly.size());
  c[1] /= static_cast<double>(poly.size());
  std::vector<Point> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back({c[0] + factor * (p[0] - c[0]), c[1] + factor * (p[1] - c[1])});
  return out;
}

Box bounding_box(const std::vector<Point>& points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box b{{inf, inf}, {-inf, -inf}};
  for (const auto& p : points) {
    b.lo = {std::min(b.lo[0], p[0]), std::min(b.lo[1], p[1])};
    b.hi = {std::max(b.hi[0], p[0]), std::max(b.hi[1], p[1])};
  }
  return b;
}

}  // namespace sharp::geom
