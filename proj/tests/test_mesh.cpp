#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "calderon/mesh.hpp"
#include "calderon/partition.hpp"

using namespace calderon;

namespace {

double signed_area(const Mesh& m, std::size_t t) {
    const auto& v = m.vertices();
    const auto& tri = m.triangles()[t];
    const Point a = v[tri[0]], b = v[tri[1]], c = v[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

TEST_CASE("coarsest disk mesh is valid") {
    const auto m = generate_disk_mesh(1.0, 0.5, 1);
    CHECK(m->num_triangles() >= 4);
    for (std::size_t t = 0; t < m->num_triangles(); ++t) CHECK(signed_area(*m, t) > 0);
}

TEST_CASE("disk mesh geometry") {
    const double h = 0.05;
    const auto m = generate_disk_mesh(1.0, h, 1);
    // the inscribed polygon misses one circular segment per boundary edge
    CHECK(std::abs(m->total_area() - std::numbers::pi) < 0.01 * std::numbers::pi);
    CHECK(m->max_edge_length() <= 1.5 * h);
    for (const auto& e : m->boundary()) {
        const Point p = m->vertices()[e.v0];
        CHECK(std::hypot(p.x, p.y) == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::set<int> used;
    for (const auto& t : m->triangles())
        for (int k : t) {
            CHECK(k >= 0);
            CHECK(k < static_cast<int>(m->vertices().size()));
            used.insert(k);
        }
}

TEST_CASE("boundary loop closes with increasing parameters") {
    const auto m = generate_disk_mesh(1.0, 0.1, 2);
    const auto& b = m->boundary();
    REQUIRE(!b.empty());
    for (std::size_t k = 0; k < b.size(); ++k) {
        CHECK(b[k].theta1 > b[k].theta0);
        CHECK(b[(k + 1) % b.size()].v0 == b[k].v1);
        if (k + 1 < b.size()) CHECK(b[k + 1].theta0 == doctest::Approx(b[k].theta1));
    }
    CHECK(b.front().theta0 == doctest::Approx(0.0));
    CHECK(b.back().theta1 == doctest::Approx(2 * std::numbers::pi));
}

TEST_CASE("degree elevation adds midpoints only") {
    const auto m1 = generate_disk_mesh(1.0, 0.05, 1);
    const auto m2 = generate_disk_mesh(1.0, 0.05, 2);
    REQUIRE(m1->vertices().size() == m2->vertices().size());
    for (std::size_t k = 0; k < m1->vertices().size(); ++k) {
        CHECK(m1->vertices()[k].x == m2->vertices()[k].x);
        CHECK(m1->vertices()[k].y == m2->vertices()[k].y);
    }
    CHECK(m1->triangles() == m2->triangles());
    // V - E + F = 1 for a disk, so E = V + F - 1
    const std::size_t edges = m1->vertices().size() + m1->num_triangles() - 1;
    CHECK(m1->num_dofs() == m1->vertices().size());
    CHECK(m2->num_dofs() == m1->vertices().size() + edges);
}

TEST_CASE("mesh generation is deterministic and validates input") {
    const auto a = generate_disk_mesh(1.0, 0.07, 2);
    const auto b = generate_disk_mesh(1.0, 0.07, 2);
    std::ostringstream sa, sb;
    write_mesh(sa, *a);
    write_mesh(sb, *b);
    CHECK(sa.str() == sb.str());
    CHECK_THROWS_AS(generate_disk_mesh(0.0, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_disk_mesh(1.0, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_disk_mesh(1.0, 0.1, 3), std::invalid_argument);
}

TEST_CASE("mesh and partition files round trip") {
    const Constraint c = circle_constraint(0.4, 0.1);
    const auto m = generate_disk_mesh(1.0, 0.1, 2, std::span<const Constraint>(&c, 1));
    std::stringstream ss;
    write_mesh(ss, *m);
    CHECK(ss.str().rfind("MESH v1 degree=2", 0) == 0);
    const auto back = read_mesh(ss);
    std::ostringstream again;
    write_mesh(again, *back);
    CHECK(again.str() == ss.str());
    CHECK(back->regions() == m->regions());

    const auto p = build_pixel_partition(m, 0.85, 30);
    std::stringstream ps;
    write_partition(ps, *p);
    CHECK(ps.str().rfind("PART v1 N=", 0) == 0);
    const auto q = read_partition(ps, back);
    CHECK(q->pixel_of_triangle() == p->pixel_of_triangle());
}

TEST_CASE("pixel partitions") {
    const auto m = generate_disk_mesh(1.0, 0.05, 1);
    auto outside_ok = [&](const PixelPartition& p, double r) {
        for (std::size_t t = 0; t < m->num_triangles(); ++t) {
            const Point b = m->barycentre(t);
            if ((std::hypot(b.x, b.y) > r) != (p.pixel_of(t) == PixelPartition::kOutside)) return false;
        }
        return true;
    };

    SUBCASE("single pixel") {
        const auto p = build_pixel_partition(m, 0.85, 1);
        CHECK(p->size() == 1);
        CHECK(outside_ok(*p, 0.85));
    }
    SUBCASE("about 200 pixels") {
        const auto p = build_pixel_partition(m, 0.85, 200);
        CHECK(p->size() >= 150);
        CHECK(p->size() <= 250);
        for (double a : p->areas()) CHECK(a > 0);
        CHECK(outside_ok(*p, 0.85));
    }
    SUBCASE("one pixel per triangle") {
        const auto p = build_pixel_partition(m, 1.0, static_cast<int>(m->num_triangles()));
        CHECK(p->size() == static_cast<int>(m->num_triangles()));
    }
    SUBCASE("area conservation up to summation order") {
        const auto p = build_pixel_partition(m, 0.85, 120);
        double sum = p->outside_area();
        for (double a : p->areas()) sum += a;
        CHECK(std::abs(sum - m->total_area()) <= 1e-14 * m->total_area());
    }
    SUBCASE("pixels are unions of whole triangles") {
        const auto p = build_pixel_partition(m, 0.85, 80);
        std::size_t members = 0;
        for (int k = 0; k < p->size(); ++k) {
            double a = 0;
            for (int t : p->triangles_of(k)) {
                CHECK(p->pixel_of(t) == k);
                a += m->triangle_area(t);
            }
            CHECK(a == doctest::Approx(p->areas()[k]).epsilon(1e-12));
            members += p->triangles_of(k).size();
        }
        std::size_t inside = 0;
        for (std::size_t t = 0; t < m->num_triangles(); ++t) inside += p->pixel_of(t) != PixelPartition::kOutside;
        CHECK(members == inside);
    }
    CHECK_THROWS_AS(build_pixel_partition(m, 0.85, 0), std::invalid_argument);
}

TEST_CASE("concentric partitions") {
    const double pi = std::numbers::pi;
    SUBCASE("rho = 0.3") {
        const Constraint c = circle_constraint(0.3, 0.03);
        const auto m = generate_disk_mesh(1.0, 0.03, 2, std::span<const Constraint>(&c, 1));
        const auto p = concentric_partition(m, 0.3);
        CHECK(p->size() == 2);
        CHECK(p->areas()[1] == doctest::Approx(pi * 0.09).epsilon(0.01));
    }
    SUBCASE("rho = 1/sqrt(2) halves the area") {
        const double rho = 1 / std::sqrt(2.0);
        const Constraint c = circle_constraint(rho, 0.05);
        const auto m = generate_disk_mesh(1.0, 0.05, 1, std::span<const Constraint>(&c, 1));
        const auto p = concentric_partition(m, rho);
        CHECK(p->areas()[0] == doctest::Approx(p->areas()[1]).epsilon(0.01));
    }
    SUBCASE("mesh not resolving the circle is rejected") {
        const auto m = generate_disk_mesh(1.0, 0.05, 1);
        CHECK_THROWS(concentric_partition(m, 0.3));
    }
}

TEST_CASE("inner disk area converges under refinement") {
    double previous = 1.0;
    for (double h : {0.1, 0.05, 0.025}) {
        const Constraint c = circle_constraint(0.5, h);
        const auto m = generate_disk_mesh(1.0, h, 1, std::span<const Constraint>(&c, 1));
        const double err = std::abs(concentric_partition(m, 0.5)->areas()[1] - std::numbers::pi * 0.25);
        CHECK(err < previous);
        previous = err;
    }
}

TEST_CASE("coefficient fields") {
    const Constraint c = circle_constraint(0.5, 0.1);
    const auto m = generate_disk_mesh(1.0, 0.1, 1, std::span<const Constraint>(&c, 1));
    const auto p = concentric_partition(m, 0.5);
    const CoefficientField f(p, Eigen::Vector2cd(0.25, -2.0));
    CHECK(f.sup_norm() == 2.0);
    const double expect = std::sqrt(p->areas()[0] * 0.0625 + p->areas()[1] * 4.0);
    CHECK(f.l2_norm() == doctest::Approx(expect));
    CHECK_THROWS_AS(CoefficientField(p, Eigen::VectorXcd(3)), std::invalid_argument);
    const auto inner = restrict_partition(p, std::vector<int>{1});
    const CoefficientField g(inner, Eigen::VectorXcd::Constant(1, 1.0));
    for (std::size_t t = 0; t < m->num_triangles(); ++t)
        CHECK(g.on_triangle(t) == (m->regions()[t] == 1 ? std::complex<double>(1.0) : std::complex<double>(0.0)));
}
