#ifndef CALDERON_SRC_SHAPE_HPP
#define CALDERON_SRC_SHAPE_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "calderon/mesh.hpp"

namespace calderon::detail {

struct QuadPoint {
    std::array<double, 3> lambda;
    double weight;  // fraction of the triangle area
};

inline std::vector<QuadPoint> triangle_rule(int degree) {
    if (degree <= 2) {
        constexpr double a = 2.0 / 3.0, b = 1.0 / 6.0;
        return {{{a, b, b}, 1.0 / 3.0}, {{b, a, b}, 1.0 / 3.0}, {{b, b, a}, 1.0 / 3.0}};
    }
    if (degree <= 4) {
        // Dunavant, 6 points
        constexpr double a1 = 0.108103018168070, b1 = 0.445948490915965, w1 = 0.223381589678011;
        constexpr double a2 = 0.816847572980459, b2 = 0.091576213509771, w2 = 0.109951743655322;
        return {{{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
                {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2}};
    }
    throw std::invalid_argument("triangle_rule: degree above 4 not available");
}

struct TriangleGeometry {
    std::array<Point, 3> v;
    std::array<std::array<double, 2>, 3> grad_lambda;
    double area;

    TriangleGeometry(const Mesh& mesh, std::size_t t) {
        for (int k = 0; k < 3; ++k) v[k] = mesh.vertices()[mesh.triangles()[t][k]];
        const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[1].y - v[0].y) * (v[2].x - v[0].x);
        area = 0.5 * det;
        grad_lambda[0] = {(v[1].y - v[2].y) / det, (v[2].x - v[1].x) / det};
        grad_lambda[1] = {(v[2].y - v[0].y) / det, (v[0].x - v[2].x) / det};
        grad_lambda[2] = {(v[0].y - v[1].y) / det, (v[1].x - v[0].x) / det};
    }

    Point point(const std::array<double, 3>& l) const {
        return {l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x, l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y};
    }
};

// P2 local order: vertices 0,1,2 then midpoints of (0,1), (1,2), (2,0).
inline std::array<double, 6> shape_values(int degree, const std::array<double, 3>& l) {
    if (degree == 1) return {l[0], l[1], l[2], 0, 0, 0};
    return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
            4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

inline std::array<std::array<double, 2>, 6> shape_gradients(int degree, const std::array<double, 3>& l,
                                                             const TriangleGeometry& g) {
    std::array<std::array<double, 2>, 6> out{};
    const auto& gl = g.grad_lambda;
    if (degree == 1) {
        for (int i = 0; i < 3; ++i) out[i] = gl[i];
        return out;
    }
    for (int i = 0; i < 3; ++i) out[i] = {(4 * l[i] - 1) * gl[i][0], (4 * l[i] - 1) * gl[i][1]};
    constexpr int ea[3] = {0, 1, 2}, eb[3] = {1, 2, 0};
    for (int e = 0; e < 3; ++e) {
        const int a = ea[e], b = eb[e];
        out[3 + e] = {4 * (l[a] * gl[b][0] + l[b] * gl[a][0]), 4 * (l[a] * gl[b][1] + l[b] * gl[a][1])};
    }
    return out;
}

// Along a boundary edge, t in [0,1]: v0, v1, midpoint.
inline std::array<double, 3> edge_shape(int degree, double t) {
    if (degree == 1) return {1 - t, t, 0};
    return {(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)};
}

}  // namespace calderon::detail

#endif
