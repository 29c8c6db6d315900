// Acceptance criteria 1-10, one PASS/FAIL line each. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "calderon/analytic_disk.hpp"
#include "calderon/backends.hpp"
#include "calderon/experiments.hpp"
#include "calderon/fem_cm.hpp"
#include "calderon/mesh.hpp"
#include "calderon/partition.hpp"
#include "calderon/reversion.hpp"
#include "calderon/scem.hpp"
#include "oracles.hpp"

using namespace calderon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Concentric {
    MeshPtr mesh;
    FeSpacePtr space;
    PartitionPtr part;
    FemSystemPtr sys;

    Concentric(double h, double rho = 0.3) {
        const Constraint c = circle_constraint(rho, h);
        mesh = generate_disk_mesh(1.0, h, 2, std::span<const Constraint>(&c, 1));
        space = std::make_shared<const FeSpace>(mesh);
        part = concentric_partition(mesh, rho);
        sys = assemble_system(space, std::vector<double>(mesh->num_triangles(), 1.0));
    }
    FemSystemPtr with(const Eigen::VectorXcd& kappa) const {
        const CoefficientField f(part, kappa);
        return assemble_system(space, triangle_coefficient(*mesh, 1.0, &f));
    }
};

double relative_gap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).norm() / std::max(a.norm(), 1e-300);
}

// gap between the pipelines, the closed-form terms and the recursion for F2..F4
double formulation_gap(const ForwardBackend& b, const Eigen::MatrixXcd& diff) {
    const TruncatedPseudoinverse pinv(b.derivative_matrix(), 0.0);
    const Eigen::VectorXcd F1 = compute_F1_from_difference(b, diff, pinv);
    const ReversionResult pipe = compute_higher_terms(b, F1, pinv, ReversionConfig{});
    const auto thm = closed_form_terms(b, F1, pinv);
    RecursionState st = start_recursion(b, F1);
    double gap = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXcd rec = general_recursion_step(b, st, pinv, true);
        gap = std::max({gap, relative_gap(pipe.terms[k + 1], thm[k]), relative_gap(pipe.terms[k + 1], rec)});
    }
    return gap;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// every output except meta.json, which records timings
bool same_outputs(const fs::path& a, const fs::path& b, int& compared) {
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().filename() == "meta.json") continue;
        const fs::path other = b / fs::relative(e.path(), a);
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
        ++compared;
    }
    return true;
}

fs::path fresh(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("calderon_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

Outcome c1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto deltas = disk::logspace(1e-3, 1e-1, 12);
    const auto rows = disk::error_sweep(1.0 / std::sqrt(2.0), {1, 2}, 4, deltas, RunDescriptor{}.samples);
    bool ok = true;
    std::string detail = "slopes";
    for (int K = 1; K <= 4; ++K) {
        std::vector<double> x, y;
        for (const auto& r : rows)
            if (r.K == K) x.push_back(r.delta), y.push_back(r.err);
        const double s = disk::loglog_slope(x, y);
        ok = ok && s >= K + 0.75 && s <= K + 1.25;
        detail += fmt(" %.3f", s);
    }
    const double t = seconds_since(t0);
    return {ok && t < 10.0, detail + fmt(", %.3f s", t)};
}

Outcome c2() {
    RunDescriptor d;
    d.command = "analytic-sweep";
    d.out = fresh("c2").string();
    const auto t0 = std::chrono::steady_clock::now();
    const SweepOutcome s = run_analytic_sweep(d);
    const double t = seconds_since(t0);
    bool ok = true;
    std::string detail = "max errors kappa1";
    for (int K = 0; K < 4; ++K) detail += fmt(" %.3g", s.fig4_left_max[K]);
    detail += "; kappa2";
    for (int K = 0; K < 4; ++K) detail += fmt(" %.3g", s.fig4_right_max[K]);
    for (int K = 0; K < 3; ++K)
        ok = ok && s.fig4_left_max[K + 1] < s.fig4_left_max[K] && s.fig4_right_max[K + 1] < s.fig4_right_max[K];
    return {ok && t < 5.0, detail + fmt("; %.3f s", t)};
}

Outcome c3() {
    const double expected = oracle::one_mode_F1(1.0, 0.3);
    const disk::SpectralBackend one(0.3, {1}, {false, true});
    const Eigen::VectorXcd fa = compute_F1_from_difference(one, one.difference_datum({0, 1, 0.3}),
                                                           TruncatedPseudoinverse(one.derivative_matrix(), 0.0));
    // 0.647249 is the closed form rounded to six digits; the 1e-9 tolerance
    // applies to the unrounded value
    const double ea = std::abs(fa[0].real() - expected);
    const bool printed = std::abs(fa[0].real() - 0.647249) <= 5e-7;

    const Concentric c(0.02);
    const auto basis = BoundaryBasis::trigonometric(*c.space, 1);
    const std::vector<int> inner{1};
    const FemBackend b(c.sys, basis, restrict_partition(c.part, inner));
    const Eigen::MatrixXcd diff = nd_matrix(*c.with(Eigen::Vector2cd(0.0, 1.0)), basis) - b.nd_matrix();
    const Eigen::VectorXcd ff = compute_F1_from_difference(b, diff, TruncatedPseudoinverse(b.derivative_matrix(), 0.0));
    const double ef = std::abs(ff[0].real() / expected - 1.0);
    return {ea <= 1e-9 && printed && ef <= 0.01, "analytic " + fmt("%.12f", fa[0].real()) + fmt(" (off %.1e)", ea) + ", finite elements " +
                                          fmt("%.6f", ff[0].real()) + fmt(" (rel %.2e)", ef)};
}

Outcome c4() {
    const MeshPtr mesh = generate_disk_mesh(1.0, 0.02, 2);
    const auto space = std::make_shared<const FeSpace>(mesh);
    const auto sys = assemble_system(space, std::vector<double>(mesh->num_triangles(), 1.0));
    const Eigen::MatrixXcd nd = nd_matrix(*sys, BoundaryBasis::trigonometric(*space, 12));
    double diag = 0.0, off = 0.0;
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            if (i == j) diag = std::max(diag, std::abs(nd(i, i).real() * (i / 2 + 1) - 1.0));
            else off = std::max(off, std::abs(nd(i, j)));
        }
    return {diag <= 0.01 && off <= 1e-3, fmt("max diagonal rel %.2e", diag) + fmt(", max off-diagonal %.2e", off)};
}

Outcome c5() {
    const Concentric c(0.02);
    const Eigen::MatrixXcd nd = nd_matrix(*c.with(Eigen::Vector2cd(0.0, 1.0)), BoundaryBasis::trigonometric(*c.space, 8));
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
        worst = std::max(worst, std::abs(nd(i, i).real() / oracle::nd_eigenvalue(0, 1, 0.3, i / 2 + 1) - 1.0));
    return {worst <= 0.005, fmt("max relative deviation %.2e", worst)};
}

Outcome c6() {
    const std::vector<double> ts = {1e-2, 5e-3, 2.5e-3};
    auto ratios = [](const std::vector<double>& e) { return std::array<double, 2>{e[0] / e[1], e[1] / e[2]}; };
    auto in = [](const std::array<double, 2>& r) { return r[0] >= 1.8 && r[0] <= 2.2 && r[1] >= 1.8 && r[1] <= 2.2; };

    const Concentric c(0.05, 0.5);
    const Eigen::Vector2cd b(0.3, 1.0);
    const auto basis = BoundaryBasis::trigonometric(*c.space, 8);
    const Eigen::MatrixXcd nd0 = nd_matrix(*c.sys, basis);
    const Eigen::VectorXcd dl = dlambda_matrix(*c.sys, basis, *c.part) * b;
    std::vector<double> ecm;
    for (double t : ts) ecm.push_back((vec(nd_matrix(*c.with(t * b), basis) - nd0) / t - dl).norm());

    const auto layout = equal_electrodes(8, 0.5, 1.0);
    const auto e0 = assemble_scem(c.space, std::vector<double>(c.mesh->num_triangles(), 1.0), layout);
    const Eigen::MatrixXcd L0 = electrode_matrix(*e0);
    const Eigen::VectorXcd de = dlambda_e_matrix(*e0, *c.part) * b;
    std::vector<double> eem;
    for (double t : ts) {
        const CoefficientField f(c.part, t * b);
        eem.push_back((vec(electrode_matrix(*assemble_scem(c.space, triangle_coefficient(*c.mesh, 1.0, &f), layout)) - L0) / t - de).norm());
    }
    const auto rc = ratios(ecm), re = ratios(eem);
    return {in(rc) && in(re), fmt("continuum ratios %.3f", rc[0]) + fmt(" %.3f", rc[1]) +
                                  fmt(", electrodes %.3f", re[0]) + fmt(" %.3f", re[1])};
}

Outcome c7() {
    const disk::SpectralBackend sb(1.0 / std::sqrt(2.0), {1, 2});
    const double ga = formulation_gap(sb, sb.difference_datum({0.05, -0.04, sb.rho()}));

    const Concentric c(0.05, 0.5);
    const auto basis = BoundaryBasis::trigonometric(*c.space, 8);
    const FemBackend fb(c.sys, basis, c.part);
    const double gf = formulation_gap(fb, nd_matrix(*c.with(Eigen::Vector2cd(0.1, 0.3)), basis) - fb.nd_matrix());
    return {ga <= 1e-12 && gf <= 1e-10, fmt("analytic %.2e", ga) + fmt(", finite elements %.2e", gf)};
}

Outcome c8() {
    const MeshPtr mesh = generate_disk_mesh(1.0, 0.06, 2);
    const auto space = std::make_shared<const FeSpace>(mesh);
    const auto part = build_pixel_partition(mesh, 0.85, 40);
    const int N = part->size();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(-1.0, 1.0), pos(0.5, 3.0);
    // heterogeneous background
    Eigen::VectorXcd bg(N);
    for (int p = 0; p < N; ++p) bg[p] = pos(rng) - 1.0;
    const CoefficientField bgf(part, bg);
    const auto a = triangle_coefficient(*mesh, 1.0, &bgf);
    auto random_b = [&] {
        Eigen::VectorXcd b(N);
        for (int p = 0; p < N; ++p) b[p] = uni(rng);
        return b;
    };

    const auto sys = assemble_system(space, a);
    const auto u = basis_solutions(*sys, BoundaryBasis::trigonometric(*space, 10));
    double wc = -1.0;
    for (int s = 0; s < 20; ++s) {
        const Eigen::VectorXcd b = random_b();
        const FeFunction& y = u[s % u.size()];
        const double lhs = sys->energy_norm(sys->apply_P(CoefficientField(part, b), y));
        const double rhs = b.cwiseAbs().maxCoeff() / sys->coercivity() * sys->energy_norm(y);
        wc = std::max(wc, (lhs - rhs) / rhs);
    }

    const auto es = assemble_scem(space, a, equal_electrodes(12, 0.6, 1.5));
    const auto ue = basis_solutions(*es);
    double we = -1.0;
    for (int s = 0; s < 20; ++s) {
        const Eigen::VectorXcd b = random_b();
        const ScemState& y = ue[s % ue.size()];
        const double lhs = es->h_norm(es->apply_P(CoefficientField(part, b), y));
        const double c = std::min(es->coercivity(), es->layout().min_admittance());
        const double rhs = b.cwiseAbs().maxCoeff() / c * es->h_norm(y);
        we = std::max(we, (lhs - rhs) / rhs);
    }
    return {wc <= 1e-10 && we <= 1e-10,
            fmt("max (lhs-rhs)/rhs continuum %.3f", wc) + fmt(", electrodes %.3f", we)};
}

Outcome c9() {
    RunDescriptor d;
    d.command = "phantom";
    d.alignment = "aligned";
    d.out = fresh("c9").string();
    const auto t0 = std::chrono::steady_clock::now();
    const PhantomOutcome o = run_phantom(d);
    const double t = seconds_since(t0);
    const auto& e = o.cases.at(0).relative_errors;
    bool ok = e.size() == 4;
    std::string detail = "errors";
    for (std::size_t k = 0; k < e.size(); ++k) {
        detail += fmt(" %.4f", e[k]);
        if (k > 0) ok = ok && e[k] <= e[k - 1];
    }
    return {ok && t < 300.0, detail + fmt(", %.1f s", t)};
}

Outcome c10() {
    int compared = 0;
    bool ok = true;

    RunDescriptor s;
    s.command = "analytic-sweep";
    s.out = fresh("c10_sweep_a").string();
    ok = ok && run(s).exit_code == 0;
    RunDescriptor s2 = parse_descriptor(slurp(fs::path(s.out) / "meta.json"));
    s2.out = fresh("c10_sweep_b").string();
    ok = ok && run(s2).exit_code == 0 && same_outputs(s.out, s2.out, compared);

    RunDescriptor p;
    p.command = "phantom";
    p.mesh_h = 0.04;
    p.recon_h = 0.08;
    p.pixels = 60;
    p.out = fresh("c10_phantom_a").string();
    ok = ok && run(p).exit_code == 0;
    RunDescriptor p2 = parse_descriptor(slurp(fs::path(p.out) / "meta.json"));
    p2.out = fresh("c10_phantom_b").string();
    ok = ok && run(p2).exit_code == 0 && same_outputs(p.out, p2.out, compared);

    RunDescriptor t;
    t.out = fresh("c10_selftest").string();
    ok = ok && format_selftest(run_selftest(t)) == format_selftest(run_selftest(t));
    return {ok, std::to_string(compared) + " files bitwise equal on rerun from meta.json, self test report stable"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"convergence rates", c1},   {"single parameter improvement", c2},
        {"closed form F1", c3},      {"unit disk spectrum", c4},
        {"forward equivalence", c5}, {"derivative finite differences", c6},
        {"formulation agreement", c7}, {"operator bounds", c8},
        {"phantom pipeline", c9},    {"determinism", c10}};
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
