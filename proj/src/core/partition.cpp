#include "calderon/partition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace calderon {

PixelPartition::PixelPartition(MeshPtr mesh, std::vector<int> pixel_of_triangle)
    : mesh_(std::move(mesh)), pixel_of_triangle_(std::move(pixel_of_triangle)) {
    if (!mesh_) throw std::invalid_argument("PixelPartition: null mesh");
    if (pixel_of_triangle_.size() != mesh_->num_triangles())
        throw std::invalid_argument("PixelPartition: one pixel index per triangle required");
    int n = 0;
    for (int p : pixel_of_triangle_) {
        if (p < kOutside) throw std::invalid_argument("PixelPartition: invalid pixel index");
        n = std::max(n, p + 1);
    }
    areas_.assign(n, 0.0);
    members_.assign(n, {});
    for (std::size_t t = 0; t < pixel_of_triangle_.size(); ++t) {
        const int p = pixel_of_triangle_[t];
        if (p == kOutside) {
            outside_area_ += mesh_->triangle_area(t);
        } else {
            areas_[p] += mesh_->triangle_area(t);
            members_[p].push_back(static_cast<int>(t));
        }
    }
    for (double a : areas_)
        if (!(a > 0)) throw std::invalid_argument("PixelPartition: empty pixel");
}

namespace {

// Renumbers keys in first-seen triangle order so the result is deterministic.
template <class Key>
std::vector<int> compact(const std::vector<std::pair<bool, Key>>& keys) {
    std::map<Key, int> ids;
    std::vector<int> out(keys.size(), PixelPartition::kOutside);
    for (std::size_t t = 0; t < keys.size(); ++t) {
        if (!keys[t].first) continue;
        auto [it, inserted] = ids.try_emplace(keys[t].second, static_cast<int>(ids.size()));
        out[t] = it->second;
    }
    return out;
}

}  // namespace

PartitionPtr build_pixel_partition(MeshPtr mesh, double inner_radius, int target_pixels, bool split_regions) {
    if (!mesh) throw std::invalid_argument("build_pixel_partition: null mesh");
    if (target_pixels < 1) throw std::invalid_argument("build_pixel_partition: target_pixels must be >= 1");
    if (!(inner_radius > 0)) throw std::invalid_argument("build_pixel_partition: inner_radius must be positive");
    const double disk_radius = mesh->boundary_scale();
    if (inner_radius > disk_radius * (1.0 + 1e-12))
        throw std::invalid_argument("build_pixel_partition: inner_radius exceeds the disk radius");

    const std::size_t nt = mesh->num_triangles();
    std::vector<bool> inside(nt);
    std::size_t interior = 0;
    for (std::size_t t = 0; t < nt; ++t) {
        const Point g = mesh->barycentre(t);
        inside[t] = std::hypot(g.x, g.y) < inner_radius;
        interior += inside[t];
    }

    using Key = std::tuple<int, int, int>;  // ring, sector, region
    std::vector<std::pair<bool, Key>> keys(nt, {false, {}});

    if (static_cast<std::size_t>(target_pixels) >= interior) {
        for (std::size_t t = 0; t < nt; ++t) keys[t] = {inside[t], {static_cast<int>(t), 0, 0}};
        return std::make_shared<const PixelPartition>(mesh, compact(keys));
    }

    // Pick s (sectors in the centre ring) and the ring count n so that s*n^2
    // is closest to the target.
    int best_s = 1, best_n = 1;
    long best_gap = -1;
    for (int s = 1; s <= 4; ++s) {
        const int n = std::max(1, static_cast<int>(std::lround(std::sqrt(target_pixels / static_cast<double>(s)))));
        const long gap = std::labs(static_cast<long>(s) * n * n - target_pixels);
        if (best_gap < 0 || gap < best_gap) {
            best_gap = gap;
            best_s = s;
            best_n = n;
        }
    }

    for (std::size_t t = 0; t < nt; ++t) {
        if (!inside[t]) continue;
        const Point g = mesh->barycentre(t);
        const double r = std::hypot(g.x, g.y);
        const int ring = std::min(best_n - 1, static_cast<int>(best_n * r / inner_radius));
        const int sectors = best_s * (2 * ring + 1);
        double phi = std::atan2(g.y, g.x);
        if (phi < 0) phi += 2.0 * std::numbers::pi;
        const int sector = std::min(sectors - 1, static_cast<int>(sectors * phi / (2.0 * std::numbers::pi)));
        const int region = split_regions ? mesh->regions()[t] : 0;
        keys[t] = {true, {ring, sector, region}};
    }
    return std::make_shared<const PixelPartition>(mesh, compact(keys));
}

PartitionPtr concentric_partition(MeshPtr mesh, double rho) {
    if (!mesh) throw std::invalid_argument("concentric_partition: null mesh");
    if (!(rho > 0 && rho < mesh->boundary_scale()))
        throw std::invalid_argument("concentric_partition: rho must lie inside the disk");
    constexpr double tol = 1e-10;
    const auto& verts = mesh->vertices();
    std::vector<int> pixel(mesh->num_triangles());
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        double lo = 1e300, hi = -1e300;
        for (int v : mesh->triangles()[t]) {
            const double s = std::hypot(verts[v].x, verts[v].y) - rho;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (lo < -tol && hi > tol)
            throw std::invalid_argument("concentric_partition: mesh is not resolved along the circle of radius rho");
        pixel[t] = hi > tol ? 0 : 1;
    }
    return std::make_shared<const PixelPartition>(mesh, std::move(pixel));
}

PartitionPtr restrict_partition(const PartitionPtr& partition, std::span<const int> keep) {
    std::vector<int> remap(partition->size(), PixelPartition::kOutside);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        if (keep[k] < 0 || keep[k] >= partition->size())
            throw std::invalid_argument("restrict_partition: pixel index out of range");
        remap[keep[k]] = static_cast<int>(k);
    }
    std::vector<int> pixel(partition->pixel_of_triangle().size());
    for (std::size_t t = 0; t < pixel.size(); ++t) {
        const int p = partition->pixel_of(t);
        pixel[t] = p == PixelPartition::kOutside ? p : remap[p];
    }
    return std::make_shared<const PixelPartition>(partition->mesh_ptr(), std::move(pixel));
}

void write_partition(std::ostream& os, const PixelPartition& partition) {
    os << "PART v1 N=" << partition.size() << '\n';
    for (int p : partition.pixel_of_triangle()) os << (p == PixelPartition::kOutside ? -1 : p + 1) << '\n';
}

PartitionPtr read_partition(std::istream& is, MeshPtr mesh) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("PART v1 N=", 0) != 0)
        throw std::invalid_argument("read_partition: bad header");
    const int n = std::stoi(line.substr(10));
    std::vector<int> pixel;
    int value = 0;
    while (is >> value) {
        if (value == 0 || value < -1 || value > n) throw std::invalid_argument("read_partition: pixel index out of range");
        pixel.push_back(value == -1 ? PixelPartition::kOutside : value - 1);
    }
    auto out = std::make_shared<const PixelPartition>(std::move(mesh), std::move(pixel));
    if (out->size() != n) throw std::invalid_argument("read_partition: header pixel count does not match");
    return out;
}

CoefficientField::CoefficientField(PartitionPtr partition, Eigen::VectorXcd values)
    : partition_(std::move(partition)), values_(std::move(values)) {
    if (!partition_) throw std::invalid_argument("CoefficientField: null partition");
    if (values_.size() != partition_->size())
        throw std::invalid_argument("CoefficientField: one value per pixel required");
}

CoefficientField CoefficientField::zero(PartitionPtr partition) {
    const int n = partition->size();
    return CoefficientField(std::move(partition), Eigen::VectorXcd::Zero(n));
}

std::complex<double> CoefficientField::on_triangle(std::size_t t) const {
    const int p = partition_->pixel_of(t);
    return p == PixelPartition::kOutside ? std::complex<double>{} : values_[p];
}

double CoefficientField::sup_norm() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

double CoefficientField::l2_norm() const {
    double s = 0.0;
    for (int p = 0; p < size(); ++p) s += partition_->areas()[p] * std::norm(values_[p]);
    return std::sqrt(s);
}

}  // namespace calderon
