#ifndef CALDERON_MESH_HPP
#define CALDERON_MESH_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace calderon {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Straight boundary edge with its position along the boundary loop.
///
/// `theta0 < theta1` always holds; the closing edge of the loop ends at 2*pi.
struct BoundaryEdge {
    int v0 = 0;
    int v1 = 0;
    double theta0 = 0.0;
    double theta1 = 0.0;
};

/// Closed polygon that the generator must resolve with mesh edges.
/// Triangles inside constraint `k` carry region label `k + 1`.
struct Constraint {
    std::vector<Point> vertices;
};

/// Triangulation of a planar domain carrying a Lagrange P1 or P2 dof layout.
///
/// Boundary integrals are taken against the measure `boundary_scale() * dtheta`
/// where theta is the loop parameter in [0, 2*pi). For disk meshes the scale is
/// the radius, so the boundary measure is that of the exact circle.
class Mesh {
public:
    Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<BoundaryEdge> boundary, int degree, double boundary_scale,
         std::vector<int> regions = {}, double target_h = 0.0);

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
    const std::vector<int>& regions() const { return regions_; }
    int degree() const { return degree_; }
    double boundary_scale() const { return boundary_scale_; }
    double target_h() const { return target_h_; }

    std::size_t num_triangles() const { return triangles_.size(); }
    std::size_t num_dofs() const { return num_dofs_; }
    int dofs_per_triangle() const { return degree_ == 1 ? 3 : 6; }

    /// Local dofs of triangle `t`: vertices, then (for P2) midpoints of the
    /// edges (0,1), (1,2), (2,0).
    std::span<const int> triangle_dofs(std::size_t t) const;
    /// Dofs on boundary edge `e`: v0, v1 and (for P2) the midpoint.
    std::span<const int> boundary_dofs(std::size_t e) const;
    /// Coordinates of every dof (vertices first, then edge midpoints).
    const std::vector<Point>& dof_points() const { return dof_points_; }

    double triangle_area(std::size_t t) const;
    Point barycentre(std::size_t t) const;
    double max_edge_length() const;
    double total_area() const;

    Mesh with_degree(int degree) const;

private:
    void build_dofs();

    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<int> regions_;
    int degree_;
    double boundary_scale_;
    double target_h_;

    std::size_t num_dofs_ = 0;
    std::vector<int> tri_dofs_;
    std::vector<int> bnd_dofs_;
    std::vector<Point> dof_points_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Deterministic disk triangulation. Interior vertices come from a jittered
/// hexagonal lattice (fixed seed), boundary and constraint polygons are
/// subdivided uniformly, and the Delaunay triangulation of the union is kept.
/// Every constraint edge is present in the result.
MeshPtr generate_disk_mesh(double radius, double target_h, int degree,
                           std::span<const Constraint> constraints = {});

/// Regular polygon with `n` vertices approximating the circle of radius `r`,
/// first vertex at angle `phase`. `n == 0` picks n from the spacing `h`.
Constraint circle_constraint(double r, double h, std::size_t n = 0, double phase = 0.0);

/// Text format "MESH v1 degree=<d>" followed by V/T/B lines.
void write_mesh(std::ostream& os, const Mesh& mesh);
MeshPtr read_mesh(std::istream& is);

}  // namespace calderon

#endif
