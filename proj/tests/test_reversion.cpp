#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "calderon/analytic_disk.hpp"
#include "calderon/backends.hpp"
#include "oracles.hpp"

using namespace calderon;

namespace {

// Frobenius-relative gap
double gap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).norm() / std::max(a.norm(), 1e-300); }

double l2_error(const Eigen::VectorXcd& s, const std::array<double, 2>& truth, double rho) {
    const double pi = std::numbers::pi;
    return std::sqrt(pi * (1 - rho * rho) * std::norm(s[0] - truth[0]) + pi * rho * rho * std::norm(s[1] - truth[1]));
}

ReversionResult analytic_run(const std::array<double, 2>& kappa, double rho, int K, std::vector<int> span = {1, 2}) {
    const disk::SpectralBackend b(rho, span);
    ReversionConfig c;
    c.K = K;
    return reconstruct(b, b.difference_datum({kappa[0], kappa[1], rho}), c);
}

struct FemDisk {
    MeshPtr mesh;
    FeSpacePtr space;
    PartitionPtr part;
    FemSystemPtr sys;
    std::shared_ptr<FemBackend> backend;

    FemDisk(double h, int J, double rho = 0.3) {
        const Constraint c = circle_constraint(rho, h);
        mesh = generate_disk_mesh(1.0, h, 2, std::span<const Constraint>(&c, 1));
        space = std::make_shared<const FeSpace>(mesh);
        part = concentric_partition(mesh, rho);
        sys = assemble_system(space, std::vector<double>(mesh->num_triangles(), 1.0));
        backend = std::make_shared<FemBackend>(sys, BoundaryBasis::trigonometric(*space, J), part);
    }

    Eigen::MatrixXcd datum(const Eigen::VectorXcd& b) const {
        const CoefficientField f(part, b);
        return nd_matrix(*assemble_system(space, triangle_coefficient(*mesh, 1.0, &f)), backend->basis());
    }
};

}  // namespace

TEST_CASE("truncated pseudoinverse") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXcd D(9, 4);
    for (Eigen::Index k = 0; k < D.size(); ++k) D(k) = {g(rng), g(rng)};

    SUBCASE("exact pseudoinverse at alpha = 0") {
        const TruncatedPseudoinverse p(D, 0.0);
        Eigen::VectorXcd x(4);
        for (auto& v : x) v = {g(rng), g(rng)};
        CHECK(gap(x, p.apply(Eigen::VectorXcd(D * x))) <= 1e-8);
        CHECK(p.kept() == 4);
        CHECK(p.rows() == 9);
        CHECK(p.cols() == 4);
    }
    SUBCASE("total truncation") {
        const TruncatedPseudoinverse p(D, 1e6);
        CHECK(p.all_truncated());
        CHECK(p.matrix().norm() == 0.0);
    }
    SUBCASE("analytically forced case") {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
        d(0, 0) = 1.0;
        d(1, 1) = 1e-6;
        const Eigen::MatrixXcd m = TruncatedPseudoinverse(d, 1e-3).matrix();
        CHECK(std::abs(m(0, 0) - 1.0) <= 1e-15);
        CHECK(m(1, 1) == 0.0);
        CHECK(m(0, 1) == 0.0);
        CHECK(m(1, 0) == 0.0);
    }
    SUBCASE("relative threshold") {
        const TruncatedPseudoinverse p(D, 1e-3, true);
        CHECK(p.threshold() == doctest::Approx(1e-3 * p.singular_values()[0]));
    }
    CHECK_THROWS_AS(TruncatedPseudoinverse(D, -1.0), std::invalid_argument);
}

TEST_CASE("first order term") {
    const disk::SpectralBackend one(0.3, {1}, {false, true});
    const TruncatedPseudoinverse pinv(one.derivative_matrix(), 0.0);
    CHECK(compute_F1(one, one.nd_matrix(), pinv).norm() == 0.0);
    const Eigen::MatrixXcd datum = one.nd_matrix() + one.difference_datum({0, 1, 0.3});
    const Eigen::VectorXcd F1 = compute_F1(one, datum, pinv);
    CHECK(std::abs(F1[0].real() - 0.647249) <= 1e-6);
    CHECK(std::abs(F1[0].real() - oracle::one_mode_F1(1.0, 0.3)) <= 1e-9);
    CHECK_THROWS_AS(compute_F1(one, Eigen::MatrixXcd::Zero(2, 2), pinv), std::invalid_argument);

    SUBCASE("finite elements agree with the closed form") {
        const FemDisk d(0.04, 1);
        const auto inner = restrict_partition(d.part, std::vector<int>{1});
        const FemBackend b(d.sys, d.backend->basis(), inner);
        const Eigen::MatrixXcd diff = d.datum(Eigen::Vector2cd(0.0, 1.0)) - b.nd_matrix();
        const Eigen::VectorXcd f = compute_F1_from_difference(b, diff, TruncatedPseudoinverse(b.derivative_matrix(), 0.0));
        CHECK(f[0].real() == doctest::Approx(oracle::one_mode_F1(1.0, 0.3)).epsilon(0.01));
    }
}

TEST_CASE("contrast cutoff") {
    const Eigen::Vector2cd s(0.05, 0.5), zero = Eigen::Vector2cd::Zero();
    CHECK(apply_contrast_cutoff(s, zero, 0.0) == s);
    const Eigen::VectorXcd c = apply_contrast_cutoff(s, zero, 0.1);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.5);
    CHECK(apply_contrast_cutoff(Eigen::Vector2cd(0.01, -0.02), s, 0.1) == -s);
}

TEST_CASE("configuration checks") {
    ReversionConfig c;
    c.K = 5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.experimental_general_recursion = true;
    CHECK_NOTHROW(c.validate());
    c.K = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.K = 2;
    c.alpha = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    const disk::SpectralBackend b(0.5, {1, 2});
    const TruncatedPseudoinverse pinv(b.derivative_matrix(), 0.0);
    RecursionState st = start_recursion(b, Eigen::Vector2cd(0.1, 0.1));
    CHECK_THROWS_AS(general_recursion_step(b, st, pinv, false), std::invalid_argument);
}

TEST_CASE("zero datum gives zero terms") {
    const disk::SpectralBackend b(0.5, {1, 2});
    ReversionConfig c;
    const auto r = reconstruct(b, Eigen::MatrixXcd::Zero(2, 2), c);
    REQUIRE(r.terms.size() == 4);
    for (const auto& t : r.terms) CHECK(t.norm() == 0.0);
}

TEST_CASE("partial sums accumulate terms exactly") {
    const auto r = analytic_run({0.3, -0.2}, 0.4, 4);
    CHECK(r.partial_sums[0] == r.terms[0]);
    for (int k = 1; k < 4; ++k) CHECK(r.partial_sums[k] == Eigen::VectorXcd(r.partial_sums[k - 1] + r.terms[k]));
    const auto again = analytic_run({0.3, -0.2}, 0.4, 4);
    for (int k = 0; k < 4; ++k) CHECK(again.terms[k] == r.terms[k]);
}

TEST_CASE("analytic reconstruction improves with the order") {
    const double rho = 1 / std::sqrt(2.0);
    const auto r = analytic_run({-0.5, 1.0}, rho, 4);
    for (int k = 0; k < 3; ++k) CHECK(l2_error(r.partial_sums[k + 1], {-0.5, 1.0}, rho) < l2_error(r.partial_sums[k], {-0.5, 1.0}, rho));
}

TEST_CASE("halving the perturbation divides the error by about 2^(K+1)") {
    const double rho = 1 / std::sqrt(2.0);
    const std::array<double, 2> dir{0.6, -0.8};
    for (double delta : {0.1, 0.05}) {
        const std::array<double, 2> a{delta * dir[0], delta * dir[1]}, b{a[0] / 2, a[1] / 2};
        const auto ra = analytic_run(a, rho, 4), rb = analytic_run(b, rho, 4);
        for (int K = 1; K <= 4; ++K) {
            const double f = l2_error(ra.partial_sums[K - 1], a, rho) / l2_error(rb.partial_sums[K - 1], b, rho);
            CHECK(f >= std::pow(2.0, K + 0.5));
            CHECK(f <= std::pow(2.0, K + 1.5));
        }
    }
}

TEST_CASE("terms decay with the perturbation size") {
    for (double rho : {0.3, 1 / std::sqrt(2.0)}) {
        const std::array<double, 2> dir{0.8, 0.6};
        std::vector<std::array<double, 4>> c;
        for (double delta : {0.1, 0.05, 0.025}) {
            const auto r = analytic_run({delta * dir[0], delta * dir[1]}, rho, 4);
            std::array<double, 4> row{};
            for (int j = 0; j < 4; ++j) row[j] = r.terms[j].norm() / std::pow(delta, j + 1);
            c.push_back(row);
        }
        for (int j = 0; j < 4; ++j)
            for (int s = 1; s < 3; ++s) CHECK(c[s][j] == doctest::Approx(c[0][j]).epsilon(0.2));
    }
}

TEST_CASE("first order term tends to the direction") {
    const std::array<double, 2> dir{-0.6, 0.8};
    double previous = 1e300;
    for (double delta : {1e-1, 1e-2, 1e-3}) {
        const auto r = analytic_run({delta * dir[0], delta * dir[1]}, 0.4, 1);
        const double e = std::hypot(std::abs(r.terms[0][0] / delta - dir[0]), std::abs(r.terms[0][1] / delta - dir[1]));
        CHECK(e < previous);
        previous = e;
    }
    CHECK(previous < 1e-2);
}

TEST_CASE("three formulations of the higher terms agree") {
    auto compare = [](const ForwardBackend& b, const Eigen::MatrixXcd& diff, double tol) {
        const TruncatedPseudoinverse pinv(b.derivative_matrix(), 0.0);
        const Eigen::VectorXcd F1 = compute_F1_from_difference(b, diff, pinv);
        const ReversionResult pipe = compute_higher_terms(b, F1, pinv, ReversionConfig{});
        const auto thm = closed_form_terms(b, F1, pinv);
        RecursionState st = start_recursion(b, F1);
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXcd rec = general_recursion_step(b, st, pinv, true);
            CHECK(gap(pipe.terms[k + 1], thm[k]) <= tol);
            CHECK(gap(pipe.terms[k + 1], rec) <= tol);
        }
        // order two from its closed form: F2 = -M P(F1)^2 N
        std::vector<Field> y;
        for (const auto& u : b.basis_solutions()) y.push_back(b.apply_P(F1, b.apply_P(F1, u)));
        CHECK(gap(pipe.terms[1], -pinv.apply(b.trace_matrix(y))) <= tol);
    };
    SUBCASE("analytic") {
        const disk::SpectralBackend b(0.45, {1, 2, 3});
        compare(b, b.difference_datum({0.2, -0.3, 0.45}), 1e-12);
    }
    SUBCASE("finite elements") {
        const FemDisk d(0.08, 6);
        compare(*d.backend, d.datum(Eigen::Vector2cd(0.2, 0.5)) - d.backend->nd_matrix(), 1e-10);
    }
}

TEST_CASE("orders beyond four") {
    const disk::SpectralBackend b(0.5, {1, 2});
    ReversionConfig c;
    c.K = 6;
    c.experimental_general_recursion = true;
    const auto r = reconstruct(b, b.difference_datum({0.05, 0.04, 0.5}), c);
    CHECK(r.terms.size() == 6);
    CHECK(r.diagnostics.conjectural);
    CHECK(!r.diagnostics.warnings.empty());
    CHECK(r.terms[5].norm() < r.terms[4].norm());
    c.K = 4;
    CHECK(!reconstruct(b, b.difference_datum({0.05, 0.04, 0.5}), c).diagnostics.conjectural);
}

TEST_CASE("result files") {
    const auto dir = std::filesystem::temp_directory_path() / "calderon_result_test";
    std::filesystem::remove_all(dir);
    ReversionConfig c;
    c.alpha = 1e9;
    const disk::SpectralBackend b(0.5, {1, 2});
    const auto r = reconstruct(b, b.difference_datum({0.05, 0.04, 0.5}), c);
    CHECK(r.diagnostics.all_truncated);
    CHECK(!r.diagnostics.warnings.empty());
    write_result(dir, r, c);
    std::ifstream t(dir / "terms.csv"), s(dir / "partial_sums.csv"), j(dir / "diagnostics.json");
    std::string header;
    std::getline(t, header);
    CHECK(header == "pixel,F1,F2,F3,F4");
    std::getline(s, header);
    CHECK(header.rfind("pixel,", 0) == 0);
    const auto diag = nlohmann::json::parse(j);
    CHECK(diag["all_truncated"] == true);
    CHECK(diag["config"]["alpha"] == 1e9);
    std::filesystem::remove_all(dir);
}
