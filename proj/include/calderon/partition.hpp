#ifndef CALDERON_PARTITION_HPP
#define CALDERON_PARTITION_HPP

#include <complex>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "calderon/mesh.hpp"

namespace calderon {

/// Groups triangles into pixels; triangles outside the reconstruction
/// region map to kOutside. Pixel indices are 0-based in memory.
class PixelPartition {
public:
    static constexpr int kOutside = -1;

    PixelPartition(MeshPtr mesh, std::vector<int> pixel_of_triangle);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    int size() const { return static_cast<int>(areas_.size()); }
    int pixel_of(std::size_t triangle) const { return pixel_of_triangle_[triangle]; }
    const std::vector<int>& pixel_of_triangle() const { return pixel_of_triangle_; }
    const std::vector<double>& areas() const { return areas_; }
    double outside_area() const { return outside_area_; }
    const std::vector<int>& triangles_of(int pixel) const { return members_[pixel]; }

private:
    MeshPtr mesh_;
    std::vector<int> pixel_of_triangle_;
    std::vector<double> areas_;
    std::vector<std::vector<int>> members_;
    double outside_area_ = 0.0;
};

using PartitionPtr = std::shared_ptr<const PixelPartition>;

/// Polar grid partition of the disk of `inner_radius`: ring k (of n) carries
/// s*(2k+1) equal sectors so all cells have the same area; each cell claims
/// the triangles whose barycentre it contains and empty cells are dropped.
/// With `split_regions` a cell is further split by the mesh region labels, so
/// fields that are constant on constraint polygons lie in the pixel space.
/// A target at least the number of interior triangles gives one pixel per
/// triangle.
PartitionPtr build_pixel_partition(MeshPtr mesh, double inner_radius, int target_pixels,
                                   bool split_regions = false);

/// Two pixels for a mesh resolved along the circle of radius `rho`:
/// pixel 0 is the annulus, pixel 1 the inner disk.
PartitionPtr concentric_partition(MeshPtr mesh, double rho);

/// Keeps the listed pixels (renumbered in the given order); the rest become outside.
PartitionPtr restrict_partition(const PartitionPtr& partition, std::span<const int> keep);

/// "PART v1 N=<n>" then one 1-based pixel index (or -1) per triangle.
void write_partition(std::ostream& os, const PixelPartition& partition);
PartitionPtr read_partition(std::istream& is, MeshPtr mesh);

/// Piecewise constant complex field on a partition, zero outside it.
class CoefficientField {
public:
    CoefficientField(PartitionPtr partition, Eigen::VectorXcd values);
    static CoefficientField zero(PartitionPtr partition);

    const Eigen::VectorXcd& values() const { return values_; }
    const PixelPartition& partition() const { return *partition_; }
    const PartitionPtr& partition_ptr() const { return partition_; }
    int size() const { return static_cast<int>(values_.size()); }

    std::complex<double> on_triangle(std::size_t t) const;
    /// max over pixels of |value|
    double sup_norm() const;
    /// Area weighted L2 norm over the reconstruction region.
    double l2_norm() const;

private:
    PartitionPtr partition_;
    Eigen::VectorXcd values_;
};

}  // namespace calderon

#endif
