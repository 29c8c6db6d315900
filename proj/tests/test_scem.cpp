#include <doctest.h>

#include <random>

#include "calderon/backends.hpp"
#include "calderon/errors.hpp"
#include "calderon/io.hpp"
#include "calderon/scem.hpp"

using namespace calderon;

namespace {

struct Electrodes {
    MeshPtr mesh;
    FeSpacePtr space;
    PartitionPtr part;
    ElectrodeLayout layout;
    ScemSystemPtr sys;

    Electrodes(double h, int m, double z) {
        const Constraint c = circle_constraint(0.3, h);
        mesh = generate_disk_mesh(1.0, h, 2, std::span<const Constraint>(&c, 1));
        space = std::make_shared<const FeSpace>(mesh);
        part = concentric_partition(mesh, 0.3);
        layout = equal_electrodes(m, 0.5, z);
        sys = assemble_scem(space, std::vector<double>(mesh->num_triangles(), 1.0), layout);
    }

    ScemSystemPtr with(const Eigen::VectorXcd& b) const {
        const CoefficientField f(part, b);
        return assemble_scem(space, triangle_coefficient(*mesh, 1.0, &f), layout);
    }
};

const Electrodes& eight() {
    static const Electrodes e(0.06, 8, 2.0);
    return e;
}

}  // namespace

TEST_CASE("electrode layouts") {
    ElectrodeLayout bad;
    bad.arcs = {{0.0, 1.0}, {0.5, 2.0}};
    bad.z = {1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.arcs = {{0.0, 1.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.arcs = {{0.0, 1.0}, {2.0, 3.0}};
    bad.z = {1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(assemble_scem(eight().space, std::vector<double>(eight().mesh->num_triangles(), 1.0),
                                  ElectrodeLayout{{{0.0, 1.0}, {0.5, 2.0}}, {1.0, 1.0}}),
                    std::invalid_argument);

    const ElectrodeLayout l = equal_electrodes(8, 0.5, 2.0);
    const ElectrodeLayout back = read_layout_json(layout_to_json(l));
    CHECK(back.arcs == l.arcs);
    CHECK(back.z == l.z);
    CHECK(l.min_admittance() == 0.5);
}

TEST_CASE("electrode system structure") {
    const auto& e = eight();
    const auto& A = e.sys->matrix();
    CHECK((Eigen::SparseMatrix<double>(A.transpose()) - A).norm() <= 1e-12 * A.norm());
    std::vector<double> a(e.mesh->num_triangles(), 1.0);
    a[0] = 0.0;
    CHECK_THROWS_AS(assemble_scem(e.space, a, e.layout), NonCoerciveError);
}

TEST_CASE("current solves") {
    const auto& e = eight();
    Eigen::VectorXcd I(8);
    I << 1.0, -0.5, 0.25, 0.0, -1.0, 0.75, 0.0, -0.5;
    const ScemState s = e.sys->solve_current(I);
    CHECK(std::abs(s.U.sum()) <= 1e-12 * s.U.norm());
    CHECK(e.sys->residual(s, FeFunction::Zero(e.space->num_dofs()), I) <= 1e-10);

    const ScemState z = e.sys->solve_current(Eigen::VectorXcd::Zero(8));
    CHECK(z.u.norm() == 0.0);
    CHECK(z.U.norm() == 0.0);
    CHECK_THROWS_AS(e.sys->solve_current(Eigen::VectorXcd::Ones(8)), std::invalid_argument);

    const Electrodes two(0.08, 2, 1.0);
    const ScemState t = two.sys->solve_current(Eigen::Vector2cd(1.0, -1.0));
    CHECK(std::abs(t.U[0] + t.U[1]) <= 1e-10);
    CHECK(t.U[0].real() > 0);
}

TEST_CASE("electrode matrix") {
    const auto& e = eight();
    const Eigen::MatrixXcd L = electrode_matrix(*e.sys);
    REQUIRE(L.rows() == 7);
    CHECK((L - L.transpose()).norm() <= 1e-8 * L.norm());
    CHECK(L.imag().norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L.real()).eigenvalues().minCoeff() > 0);
    CHECK((electrode_matrix(*e.with(Eigen::Vector2cd(0.0, 1.0))) - L).norm() > 0);
    CHECK(electrode_matrix(*assemble_scem(e.space, e.sys->coefficient(), e.layout)) == L);
    const Eigen::MatrixXd Q = e.sys->current_basis();
    CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(7, 7)).norm() <= 1e-12);
    CHECK(Q.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("electrode perturbation operator") {
    const auto& e = eight();
    const auto u = basis_solutions(*e.sys);
    SUBCASE("zero direction") {
        const ScemState w = e.sys->apply_P(CoefficientField::zero(e.part), u[0]);
        CHECK(w.u.norm() == 0.0);
        CHECK(w.U.norm() == 0.0);
    }
    SUBCASE("constant direction satisfies the defining identity") {
        const auto all = build_pixel_partition(e.mesh, 1.0, 1);
        const double beta = 0.4;
        const ScemState w = e.sys->apply_P(CoefficientField(all, Eigen::VectorXcd::Constant(1, beta)), u[2]);
        const FeFunction rhs = -beta * (e.space->unit_stiffness().cast<std::complex<double>>() * u[2].u);
        CHECK(e.sys->residual(w, rhs, Eigen::VectorXcd::Zero(8)) <= 1e-10);
        CHECK(std::abs(w.U.sum()) <= 1e-12 * std::max(w.U.norm(), 1e-300));
    }
    SUBCASE("bound on random samples") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> r(-1.0, 1.0);
        const double c = std::min(e.sys->coercivity(), e.layout.min_admittance());
        for (int s = 0; s < 20; ++s) {
            const Eigen::Vector2cd b(r(rng), r(rng));
            ScemState y = u[s % u.size()];
            y.u *= r(rng);
            const ScemState w = e.sys->apply_P(CoefficientField(e.part, b), y);
            CHECK(e.sys->h_norm(w) <= b.cwiseAbs().maxCoeff() / c * e.sys->h_norm(y) * (1 + 1e-10));
        }
    }
}

TEST_CASE("electrode derivative") {
    const auto& e = eight();
    const Eigen::MatrixXcd D = dlambda_e_matrix(*e.sys, *e.part);
    REQUIRE(D.rows() == 49);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 5; ++s) {
        const Eigen::MatrixXcd blk = (D * Eigen::Vector2cd(u(rng), u(rng))).reshaped(7, 7);
        const Eigen::MatrixXd sym = 0.5 * (blk + blk.adjoint()).real();
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().maxCoeff() <= 1e-8);
    }
    const auto empty = restrict_partition(e.part, std::span<const int>());
    CHECK_THROWS_AS(dlambda_e_matrix(*e.sys, *empty), std::invalid_argument);
}

TEST_CASE("electrode derivative against finite differences") {
    const Electrodes e(0.08, 8, 1.0);
    const Eigen::Vector2cd b(-0.5, 0.9);
    const Eigen::MatrixXcd L0 = electrode_matrix(*e.sys);
    const Eigen::VectorXcd lin = dlambda_e_matrix(*e.sys, *e.part) * b;
    std::vector<double> err;
    for (double t : {1e-2, 5e-3, 2.5e-3}) err.push_back((vec(electrode_matrix(*e.with(t * b)) - L0) / t - lin).norm());
    for (int k = 0; k < 2; ++k) {
        CHECK(err[k] / err[k + 1] >= 1.8);
        CHECK(err[k] / err[k + 1] <= 2.2);
    }
}

TEST_CASE("electrode backend feeds the reversion") {
    const auto& e = eight();
    const ScemBackend backend(e.sys, e.part);
    // data of a small perturbation: the series must improve on F1
    const Eigen::Vector2cd truth(0.05, 0.1);
    const Eigen::MatrixXcd diff = electrode_matrix(*e.with(truth)) - backend.nd_matrix();
    ReversionConfig cfg;
    const ReversionResult r = reconstruct(backend, diff, cfg);
    std::vector<double> err;
    for (const auto& s : r.partial_sums) err.push_back((s - truth).norm());
    for (int k = 0; k < 3; ++k) CHECK(err[k + 1] < err[k]);

    const TruncatedPseudoinverse pinv(backend.derivative_matrix(), 0.0);
    const Eigen::VectorXcd F1 = compute_F1_from_difference(backend, diff, pinv);
    const ReversionResult pipe = compute_higher_terms(backend, F1, pinv, cfg);
    const auto thm = closed_form_terms(backend, F1, pinv);
    RecursionState st = start_recursion(backend, F1);
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXcd rec = general_recursion_step(backend, st, pinv, true);
        CHECK((pipe.terms[k + 1] - thm[k]).norm() <= 1e-10 * pipe.terms[k + 1].norm());
        CHECK((pipe.terms[k + 1] - rec).norm() <= 1e-10 * pipe.terms[k + 1].norm());
    }
}
