#include "calderon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "delaunay.hpp"

namespace calderon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double segment_distance(const Point& p, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool inside_polygon(const Point& p, const std::vector<Point>& poly) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) in = !in;
        }
    }
    return in;
}

double polygon_area(const std::vector<Point>& poly) {
    double s = 0.0;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        s += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
    return 0.5 * std::abs(s);
}

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary, int degree, double boundary_scale,
           std::vector<int> regions, double target_h)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)),
      regions_(std::move(regions)),
      degree_(degree),
      boundary_scale_(boundary_scale),
      target_h_(target_h) {
    if (degree_ != 1 && degree_ != 2) throw std::invalid_argument("Mesh: degree must be 1 or 2");
    if (!(boundary_scale_ > 0)) throw std::invalid_argument("Mesh: boundary scale must be positive");
    if (triangles_.empty()) throw std::invalid_argument("Mesh: no triangles");
    if (regions_.empty()) regions_.assign(triangles_.size(), 0);
    if (regions_.size() != triangles_.size())
        throw std::invalid_argument("Mesh: region labels do not match triangle count");

    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        for (int v : triangles_[t])
            if (v < 0 || v >= nv) throw std::invalid_argument("Mesh: triangle references missing vertex");
        if (!(triangle_area(t) > 0)) throw std::invalid_argument("Mesh: triangle with non-positive area");
    }

    if (boundary_.empty()) throw std::invalid_argument("Mesh: empty boundary");
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
        const auto& be = boundary_[e];
        if (be.v0 < 0 || be.v0 >= nv || be.v1 < 0 || be.v1 >= nv)
            throw std::invalid_argument("Mesh: boundary edge references missing vertex");
        if (!(be.theta1 > be.theta0)) throw std::invalid_argument("Mesh: boundary parameter must increase");
        if (be.theta0 < 0 || be.theta1 > kTwoPi + 1e-12)
            throw std::invalid_argument("Mesh: boundary parameter outside [0, 2pi]");
        const auto& next = boundary_[(e + 1) % boundary_.size()];
        if (next.v0 != be.v1) throw std::invalid_argument("Mesh: boundary edges do not form a closed loop");
        if (e + 1 < boundary_.size() && std::abs(next.theta0 - be.theta1) > 1e-12)
            throw std::invalid_argument("Mesh: boundary parameter is discontinuous");
    }
    if (std::abs(boundary_.front().theta0) > 1e-12 || std::abs(boundary_.back().theta1 - kTwoPi) > 1e-9)
        throw std::invalid_argument("Mesh: boundary parameter must span [0, 2pi]");

    build_dofs();
}

void Mesh::build_dofs() {
    const int nv = static_cast<int>(vertices_.size());
    dof_points_ = vertices_;
    const int per = dofs_per_triangle();
    tri_dofs_.assign(triangles_.size() * per, -1);
    const int per_b = degree_ == 1 ? 2 : 3;
    bnd_dofs_.assign(boundary_.size() * per_b, -1);

    std::map<std::uint64_t, int> midpoint;
    int next = nv;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (int k = 0; k < 3; ++k) tri_dofs_[t * per + k] = tri[k];
        if (degree_ == 2) {
            for (int k = 0; k < 3; ++k) {
                const int a = tri[k], b = tri[(k + 1) % 3];
                auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), next);
                if (inserted) {
                    dof_points_.push_back({0.5 * (vertices_[a].x + vertices_[b].x),
                                           0.5 * (vertices_[a].y + vertices_[b].y)});
                    ++next;
                }
                tri_dofs_[t * per + 3 + k] = it->second;
            }
        }
    }
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
        bnd_dofs_[e * per_b] = boundary_[e].v0;
        bnd_dofs_[e * per_b + 1] = boundary_[e].v1;
        if (degree_ == 2) {
            auto it = midpoint.find(edge_key(boundary_[e].v0, boundary_[e].v1));
            if (it == midpoint.end()) throw std::invalid_argument("Mesh: boundary edge is not a triangle edge");
            bnd_dofs_[e * per_b + 2] = it->second;
        }
    }
    num_dofs_ = static_cast<std::size_t>(next);
}

std::span<const int> Mesh::triangle_dofs(std::size_t t) const {
    const std::size_t per = dofs_per_triangle();
    return {tri_dofs_.data() + t * per, per};
}

std::span<const int> Mesh::boundary_dofs(std::size_t e) const {
    const std::size_t per = degree_ == 1 ? 2 : 3;
    return {bnd_dofs_.data() + e * per, per};
}

double Mesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    return 0.5 * detail::orient2d(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

Point Mesh::barycentre(std::size_t t) const {
    const auto& tri = triangles_[t];
    return {(vertices_[tri[0]].x + vertices_[tri[1]].x + vertices_[tri[2]].x) / 3.0,
            (vertices_[tri[0]].y + vertices_[tri[1]].y + vertices_[tri[2]].y) / 3.0};
}

double Mesh::max_edge_length() const {
    double m = 0.0;
    for (const auto& tri : triangles_)
        for (int k = 0; k < 3; ++k) m = std::max(m, distance(vertices_[tri[k]], vertices_[tri[(k + 1) % 3]]));
    return m;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) s += triangle_area(t);
    return s;
}

Mesh Mesh::with_degree(int degree) const {
    return Mesh(vertices_, triangles_, boundary_, degree, boundary_scale_, regions_, target_h_);
}

Constraint circle_constraint(double r, double h, std::size_t n, double phase) {
    if (!(r > 0)) throw std::invalid_argument("circle_constraint: radius must be positive");
    if (n == 0) {
        if (!(h > 0)) throw std::invalid_argument("circle_constraint: spacing must be positive");
        // chords shorter than the generator's subsegment length stay unsplit, so
        // every constraint vertex lies on the circle
        n = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(kTwoPi * r / (0.75 * h))));
    }
    Constraint c;
    c.vertices.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = phase + kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        c.vertices.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return c;
}

MeshPtr generate_disk_mesh(double radius, double target_h, int degree, std::span<const Constraint> constraints) {
    if (!(radius > 0)) throw std::invalid_argument("generate_disk_mesh: radius must be positive");
    if (!(target_h > 0)) throw std::invalid_argument("generate_disk_mesh: target_h must be positive");
    if (!(target_h < radius)) throw std::invalid_argument("generate_disk_mesh: target_h must be below the radius");
    if (degree != 1 && degree != 2) throw std::invalid_argument("generate_disk_mesh: degree must be 1 or 2");

    // Segment length and lattice spacing relative to target_h keep the longest
    // Delaunay edge below 1.5 * target_h.
    const double seg = 0.8 * target_h;
    const double spacing = 0.8 * target_h;

    std::vector<Point> pts;
    struct Segment {
        int a, b;
    };
    std::vector<Segment> required;

    const auto nb = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(kTwoPi * radius / seg)));
    for (std::size_t k = 0; k < nb; ++k) {
        const double a = kTwoPi * static_cast<double>(k) / static_cast<double>(nb);
        pts.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    for (std::size_t k = 0; k < nb; ++k)
        required.push_back({static_cast<int>(k), static_cast<int>((k + 1) % nb)});

    // Subdivided constraint polygons; every constraint vertex must lie strictly
    // inside the disk.
    std::vector<std::pair<Point, Point>> constraint_segments;
    for (const auto& c : constraints) {
        if (c.vertices.size() < 3) throw std::invalid_argument("generate_disk_mesh: constraint needs >= 3 vertices");
        for (const auto& v : c.vertices)
            if (std::hypot(v.x, v.y) > radius - 0.5 * seg)
                throw std::invalid_argument("generate_disk_mesh: constraint too close to the boundary");
        const int first = static_cast<int>(pts.size());
        for (std::size_t i = 0; i < c.vertices.size(); ++i) {
            const Point& a = c.vertices[i];
            const Point& b = c.vertices[(i + 1) % c.vertices.size()];
            const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / seg)));
            for (std::size_t k = 0; k < pieces; ++k) {
                const double t = static_cast<double>(k) / static_cast<double>(pieces);
                pts.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
            }
            constraint_segments.emplace_back(a, b);
        }
        const int last = static_cast<int>(pts.size());
        for (int k = first; k < last; ++k) required.push_back({k, k + 1 < last ? k + 1 : first});
    }

    // Keep lattice points clear of every diametral circle of a required
    // subsegment, so those subsegments are Delaunay edges.
    const double clearance = 0.55 * seg;
    std::mt19937_64 rng(0x5eedcafe);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double dy = spacing * std::sqrt(3.0) / 2.0;
    const int rows = static_cast<int>(std::ceil(radius / dy));
    const int cols = static_cast<int>(std::ceil(radius / spacing)) + 1;
    const double chord_inset = radius * (1.0 - std::cos(std::numbers::pi / static_cast<double>(nb)));
    for (int r = -rows; r <= rows; ++r) {
        for (int c = -cols; c <= cols; ++c) {
            Point p{(c + 0.5 * (r & 1)) * spacing, r * dy};
            const double jx = unit(rng), jy = unit(rng);
            p.x += 0.08 * spacing * jx;
            p.y += 0.08 * spacing * jy;
            if (std::hypot(p.x, p.y) > radius - clearance - chord_inset) continue;
            bool clear = true;
            for (const auto& [a, b] : constraint_segments) {
                if (segment_distance(p, a, b) < clearance) {
                    clear = false;
                    break;
                }
            }
            if (clear) pts.push_back(p);
        }
    }

    auto tris = detail::delaunay(pts);

    // Drop hull triangles that fall outside the disk polygon (none for convex
    // input, kept for safety) and fix orientation.
    std::vector<Point> outer(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(nb));
    std::vector<std::array<int, 3>> kept;
    kept.reserve(tris.size());
    for (auto tri : tris) {
        const Point g{(pts[tri[0]].x + pts[tri[1]].x + pts[tri[2]].x) / 3.0,
                      (pts[tri[0]].y + pts[tri[1]].y + pts[tri[2]].y) / 3.0};
        if (!inside_polygon(g, outer)) continue;
        if (detail::orient2d(pts[tri[0]], pts[tri[1]], pts[tri[2]]) < 0) std::swap(tri[1], tri[2]);
        if (detail::orient2d(pts[tri[0]], pts[tri[1]], pts[tri[2]]) <= 0)
            throw std::runtime_error("generate_disk_mesh: degenerate triangle");
        kept.push_back(tri);
    }

    std::set<std::uint64_t> edges;
    for (const auto& tri : kept)
        for (int k = 0; k < 3; ++k) edges.insert(edge_key(tri[k], tri[(k + 1) % 3]));
    for (const auto& s : required)
        if (!edges.count(edge_key(s.a, s.b)))
            throw std::runtime_error("generate_disk_mesh: constraint edge was not recovered");

    // Region labels: innermost (smallest) constraint polygon containing the barycentre.
    std::vector<double> areas;
    for (const auto& c : constraints) areas.push_back(polygon_area(c.vertices));
    std::vector<int> regions(kept.size(), 0);
    for (std::size_t t = 0; t < kept.size(); ++t) {
        const auto& tri = kept[t];
        const Point g{(pts[tri[0]].x + pts[tri[1]].x + pts[tri[2]].x) / 3.0,
                      (pts[tri[0]].y + pts[tri[1]].y + pts[tri[2]].y) / 3.0};
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < constraints.size(); ++k) {
            if (areas[k] < best && inside_polygon(g, constraints[k].vertices)) {
                best = areas[k];
                regions[t] = static_cast<int>(k) + 1;
            }
        }
    }

    std::vector<BoundaryEdge> boundary;
    boundary.reserve(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const double t0 = kTwoPi * static_cast<double>(k) / static_cast<double>(nb);
        const double t1 = k + 1 == nb ? kTwoPi : kTwoPi * static_cast<double>(k + 1) / static_cast<double>(nb);
        boundary.push_back({static_cast<int>(k), static_cast<int>((k + 1) % nb), t0, t1});
    }

    return std::make_shared<const Mesh>(std::move(pts), std::move(kept), std::move(boundary), degree, radius,
                                        std::move(regions), target_h);
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << std::setprecision(17);
    os << "MESH v1 degree=" << mesh.degree() << " scale=" << mesh.boundary_scale() << '\n';
    for (const auto& v : mesh.vertices()) os << "V " << v.x << ' ' << v.y << '\n';
    for (const auto& t : mesh.triangles()) os << "T " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& b : mesh.boundary()) os << "B " << b.v0 << ' ' << b.v1 << ' ' << b.theta0 << ' ' << b.theta1 << '\n';
    const auto& regions = mesh.regions();
    if (std::any_of(regions.begin(), regions.end(), [](int r) { return r != 0; }))
        for (int r : regions) os << "R " << r << '\n';
}

MeshPtr read_mesh(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("read_mesh: empty input");
    std::istringstream header(line);
    std::string magic, version;
    header >> magic >> version;
    if (magic != "MESH" || version != "v1") throw std::invalid_argument("read_mesh: bad header");
    int degree = 0;
    double scale = 0.0;
    std::string kv;
    while (header >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("read_mesh: bad header field " + kv);
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "degree") degree = std::stoi(value);
        else if (key == "scale") scale = std::stod(value);
    }

    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary;
    std::vector<int> regions;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream in(line);
        char tag = 0;
        in >> tag;
        bool ok = true;
        switch (tag) {
            case 'V': {
                Point p;
                ok = static_cast<bool>(in >> p.x >> p.y);
                vertices.push_back(p);
                break;
            }
            case 'T': {
                std::array<int, 3> t{};
                ok = static_cast<bool>(in >> t[0] >> t[1] >> t[2]);
                triangles.push_back(t);
                break;
            }
            case 'B': {
                BoundaryEdge b;
                ok = static_cast<bool>(in >> b.v0 >> b.v1 >> b.theta0 >> b.theta1);
                boundary.push_back(b);
                break;
            }
            case 'R': {
                int r = 0;
                ok = static_cast<bool>(in >> r);
                regions.push_back(r);
                break;
            }
            default:
                ok = false;
        }
        if (!ok) throw std::invalid_argument("read_mesh: malformed line: " + line);
    }
    if (scale <= 0) {
        // Without an explicit scale the boundary measure is the polygon length.
        double perimeter = 0.0;
        for (const auto& b : boundary) perimeter += distance(vertices.at(b.v0), vertices.at(b.v1));
        scale = perimeter / kTwoPi;
    }
    return std::make_shared<const Mesh>(std::move(vertices), std::move(triangles), std::move(boundary), degree, scale,
                                        std::move(regions));
}

}  // namespace calderon
