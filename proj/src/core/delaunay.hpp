#ifndef CALDERON_SRC_DELAUNAY_HPP
#define CALDERON_SRC_DELAUNAY_HPP

#include <array>
#include <vector>

#include "calderon/mesh.hpp"

namespace calderon::detail {

// Incremental Bowyer-Watson triangulation. Returns counter-clockwise triangles
// over the given points; the convex hull of the input is covered.
std::vector<std::array<int, 3>> delaunay(const std::vector<Point>& points);

double orient2d(const Point& a, const Point& b, const Point& c);

}  // namespace calderon::detail

#endif
