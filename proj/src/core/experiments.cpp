#include "calderon/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "calderon/analytic_disk.hpp"
#include "calderon/backends.hpp"
#include "calderon/errors.hpp"
#include "calderon/io.hpp"
#include "calderon/svg.hpp"

namespace calderon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool inside(const Point& p, const std::vector<Point>& poly) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

// Square with corners (+-0.2, +-0.2) about (-0.35, 0.3); regular pentagon of
// circumradius 0.3 about (0.35, -0.25), one vertex pointing up.
std::vector<Constraint> phantom_shapes() {
    Constraint square{{{-0.55, 0.1}, {-0.15, 0.1}, {-0.15, 0.5}, {-0.55, 0.5}}};
    Constraint pentagon;
    for (int k = 0; k < 5; ++k) {
        const double a = 0.5 * kPi + 2.0 * kPi * k / 5.0;
        pentagon.vertices.push_back({0.35 + 0.3 * std::cos(a), -0.25 + 0.3 * std::sin(a)});
    }
    return {square, pentagon};
}

double phantom_value(const RunDescriptor& d, const std::vector<Constraint>& shapes, const Point& p) {
    for (std::size_t k = 0; k < shapes.size(); ++k)
        if (inside(p, shapes[k].vertices)) return d.phantom_values[k];
    return 0.0;
}

std::vector<double> phantom_coefficient(const RunDescriptor& d, const Mesh& mesh) {
    std::vector<double> a(mesh.num_triangles(), 1.0);
    for (std::size_t t = 0; t < a.size(); ++t) {
        const int r = mesh.regions().empty() ? 0 : mesh.regions()[t];
        if (r > 0) a[t] += d.phantom_values[r - 1];
    }
    return a;
}

double rho_or(const RunDescriptor& d, double fallback) {
    const double rho = d.rho.value_or(fallback);
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("rho must lie in (0, 1)");
    return rho;
}

MeshPtr concentric_mesh(double rho, double h, int degree) {
    const Constraint c = circle_constraint(rho, h);
    return generate_disk_mesh(1.0, h, degree, std::span<const Constraint>(&c, 1));
}

ReversionConfig reversion_config(const RunDescriptor& d) {
    ReversionConfig c;
    c.K = d.K;
    c.alpha = d.alpha;
    c.beta = d.beta;
    c.relative_threshold = d.relative_threshold;
    c.experimental_general_recursion = d.experimental;
    c.validate();
    return c;
}

ElectrodeLayout electrode_layout(const RunDescriptor& d) {
    if (!d.layout.empty()) {
        std::ifstream is(d.layout);
        if (!is) throw std::invalid_argument("cannot read electrode layout " + d.layout);
        std::stringstream ss;
        ss << is.rdbuf();
        return read_layout_json(ss.str());
    }
    return equal_electrodes(d.electrodes, d.electrode_coverage, d.contact_impedance);
}

void write_text(const fs::path& p, const std::string& s) { svg::write_file(p, s); }

void write_meta(const RunDescriptor& d, json extra) {
    json meta;
    meta["descriptor"] = json::parse(descriptor_to_json(d));
    meta["library_version"] = kLibraryVersion;
    meta["quadrature"] = {{"triangle_rule_degree", 2 * d.degree},
                          {"boundary_gauss_points_per_edge", BoundaryQuadrature::kPointsPerEdge}};
    for (auto& [k, v] : extra.items()) meta[k] = v;
    write_text(fs::path(d.out) / "meta.json", meta.dump(2) + "\n");
}

json mesh_info(const Mesh& m) {
    return {{"target_h", m.target_h()},
            {"max_edge", m.max_edge_length()},
            {"triangles", m.num_triangles()},
            {"dofs", m.num_dofs()},
            {"degree", m.degree()}};
}

void write_pixel_column(const fs::path& p, const Eigen::VectorXcd& v) {
    std::ofstream os(p);
    os << "pixel,value\n";
    for (Eigen::Index k = 0; k < v.size(); ++k) os << k + 1 << ',' << format_complex(v[k]) << '\n';
}

std::vector<double> per_triangle(const PixelPartition& part, const Eigen::VectorXcd& v) {
    std::vector<double> out(part.pixel_of_triangle().size(), 0.0);
    for (std::size_t t = 0; t < out.size(); ++t) {
        const int p = part.pixel_of(t);
        if (p != PixelPartition::kOutside) out[t] = v[p].real();
    }
    return out;
}

}  // namespace

void RunDescriptor::validate() const {
    static const std::vector<std::string> commands = {"forward", "reconstruct", "analytic-sweep", "phantom", "selftest"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
        throw std::invalid_argument("unknown command '" + command + "'");
    if (backend != "cm" && backend != "scem" && backend != "analytic")
        throw std::invalid_argument("unknown backend '" + backend + "'");
    if (geometry != "phantom" && geometry != "concentric")
        throw std::invalid_argument("unknown geometry '" + geometry + "'");
    if (alignment != "aligned" && alignment != "nonaligned" && alignment != "both")
        throw std::invalid_argument("alignment must be aligned, nonaligned or both");
    if (degree != 1 && degree != 2) throw std::invalid_argument("degree must be 1 or 2");
    if (!(mesh_h > 0 && mesh_h < 1) || !(recon_h > 0 && recon_h < 1))
        throw std::invalid_argument("mesh sizes must lie in (0, 1)");
    if (J < 1) throw std::invalid_argument("J must be >= 1");
    if (rho && !(*rho > 0 && *rho < 1)) throw std::invalid_argument("rho must lie in (0, 1)");
    if (!(kappa[0] > -1 && kappa[1] > -1)) throw std::invalid_argument("kappa values must exceed -1");
    if (span.empty()) throw std::invalid_argument("span must not be empty");
    if (samples < 1 || deltas < 2) throw std::invalid_argument("sweep needs samples >= 1 and deltas >= 2");
    if (!(inner_radius > 0 && inner_radius <= 1)) throw std::invalid_argument("inner_radius must lie in (0, 1]");
    if (pixels < 1) throw std::invalid_argument("pixels must be >= 1");
    if (out.empty()) throw std::invalid_argument("output directory must be given");
    reversion_config(*this);
}

RunDescriptor parse_descriptor(const std::string& json_text, const RunDescriptor& defaults) {
    json j = json::parse(json_text);
    if (j.contains("descriptor")) j = j["descriptor"];
    RunDescriptor d = defaults;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key) && !j[key].is_null()) j[key].get_to(field);
    };
    get("command", d.command);
    get("backend", d.backend);
    get("geometry", d.geometry);
    get("out", d.out);
    get("degree", d.degree);
    get("mesh_h", d.mesh_h);
    get("recon_h", d.recon_h);
    get("J", d.J);
    get("K", d.K);
    get("alpha", d.alpha);
    get("beta", d.beta);
    get("relative_threshold", d.relative_threshold);
    get("experimental", d.experimental);
    if (j.contains("rho") && !j["rho"].is_null()) d.rho = j["rho"].get<double>();
    get("kappa", d.kappa);
    get("span", d.span);
    get("samples", d.samples);
    get("deltas", d.deltas);
    get("inner_radius", d.inner_radius);
    get("pixels", d.pixels);
    get("alignment", d.alignment);
    get("phantom_values", d.phantom_values);
    get("electrodes", d.electrodes);
    get("electrode_coverage", d.electrode_coverage);
    get("contact_impedance", d.contact_impedance);
    get("layout", d.layout);
    get("datum", d.datum);
    get("seed", d.seed);
    get("selftest_fault", d.selftest_fault);
    return d;
}

std::string descriptor_to_json(const RunDescriptor& d) {
    json j = {{"command", d.command},
              {"backend", d.backend},
              {"geometry", d.geometry},
              {"out", d.out},
              {"degree", d.degree},
              {"mesh_h", d.mesh_h},
              {"recon_h", d.recon_h},
              {"J", d.J},
              {"K", d.K},
              {"alpha", d.alpha},
              {"beta", d.beta},
              {"relative_threshold", d.relative_threshold},
              {"experimental", d.experimental},
              {"kappa", d.kappa},
              {"span", d.span},
              {"samples", d.samples},
              {"deltas", d.deltas},
              {"inner_radius", d.inner_radius},
              {"pixels", d.pixels},
              {"alignment", d.alignment},
              {"phantom_values", d.phantom_values},
              {"electrodes", d.electrodes},
              {"electrode_coverage", d.electrode_coverage},
              {"contact_impedance", d.contact_impedance},
              {"layout", d.layout},
              {"datum", d.datum},
              {"seed", d.seed},
              {"selftest_fault", d.selftest_fault}};
    j["rho"] = d.rho ? json(*d.rho) : json(nullptr);
    return j.dump(2);
}

// ---------------------------------------------------------------- phantom

PhantomOutcome run_phantom(const RunDescriptor& d) {
    d.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out(d.out);
    fs::create_directories(out);
    const auto shapes = phantom_shapes();
    const ReversionConfig cfg = reversion_config(d);

    const MeshPtr data_mesh = generate_disk_mesh(1.0, d.mesh_h, d.degree, shapes);
    const auto data_space = std::make_shared<const FeSpace>(data_mesh);
    const auto data_sys = assemble_system(data_space, phantom_coefficient(d, *data_mesh));
    const Eigen::MatrixXcd datum = nd_matrix(*data_sys, BoundaryBasis::trigonometric(*data_space, d.J));
    {
        std::ofstream os(out / "datum.csv");
        write_nd_csv(os, datum);
    }
    PhantomOutcome outcome;
    outcome.data_seconds = seconds_since(t0);

    std::vector<std::string> cases;
    if (d.alignment != "nonaligned") cases.push_back("aligned");
    if (d.alignment != "aligned") cases.push_back("nonaligned");

    json cases_json = json::array();
    for (const auto& name : cases) {
        const auto tc = std::chrono::steady_clock::now();
        const fs::path dir = out / name;
        fs::create_directories(dir);
        const bool aligned = name == "aligned";
        const MeshPtr mesh = aligned ? generate_disk_mesh(1.0, d.recon_h, d.degree, shapes)
                                     : generate_disk_mesh(1.0, d.recon_h, d.degree);
        const PartitionPtr part = build_pixel_partition(mesh, d.inner_radius, d.pixels, aligned);
        const auto space = std::make_shared<const FeSpace>(mesh);
        const FemBackend backend(assemble_system(space, std::vector<double>(mesh->num_triangles(), 1.0)),
                                 BoundaryBasis::trigonometric(*space, d.J), part);
        const ReversionResult res = reconstruct(backend, datum - backend.nd_matrix(), cfg);
        write_result(dir, res, cfg);

        // truth on the reconstruction triangles inside the pixelated region
        std::vector<double> truth(mesh->num_triangles(), 0.0);
        double norm_b = 0.0;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            truth[t] = phantom_value(d, shapes, mesh->barycentre(t));
            if (part->pixel_of(t) != PixelPartition::kOutside) norm_b += mesh->triangle_area(t) * truth[t] * truth[t];
        }
        norm_b = std::sqrt(norm_b);

        PhantomCase pc;
        pc.name = name;
        pc.pixels = part->size();
        for (std::size_t k = 0; k < res.partial_sums.size(); ++k) {
            double e = 0.0;
            for (std::size_t t = 0; t < truth.size(); ++t) {
                const int p = part->pixel_of(t);
                if (p == PixelPartition::kOutside) continue;
                e += mesh->triangle_area(t) * std::norm(res.partial_sums[k][p] - truth[t]);
            }
            e = std::sqrt(e);
            pc.relative_errors.push_back(norm_b > 0 ? e / norm_b : e);
            write_pixel_column(dir / ("F" + std::to_string(k + 1) + ".csv"), res.terms[k]);
            svg::write_file(dir / ("S" + std::to_string(k + 1) + ".svg"),
                            svg::field_plot(*mesh, per_triangle(*part, res.partial_sums[k]),
                                            name + " reconstruction, K = " + std::to_string(k + 1)));
        }
        svg::write_file(dir / "truth.svg", svg::field_plot(*mesh, truth, "perturbation"));
        {
            std::ofstream os(dir / "mesh.txt");
            write_mesh(os, *mesh);
            std::ofstream ps(dir / "partition.txt");
            write_partition(ps, *part);
        }
        pc.seconds = seconds_since(tc);
        cases_json.push_back({{"name", name},
                              {"pixels", pc.pixels},
                              {"relative_errors", pc.relative_errors},
                              {"mesh", mesh_info(*mesh)}});
        outcome.cases.push_back(std::move(pc));
    }

    {
        std::ofstream os(out / "phantom_errors.csv");
        os << "case,K,relative_error\n";
        for (const auto& c : outcome.cases)
            for (std::size_t k = 0; k < c.relative_errors.size(); ++k)
                os << c.name << ',' << k + 1 << ',' << format_real(c.relative_errors[k]) << '\n';
    }
    outcome.total_seconds = seconds_since(t0);
    json timings = {{"data_seconds", outcome.data_seconds}, {"total_seconds", outcome.total_seconds}};
    for (const auto& c : outcome.cases) timings[c.name + "_seconds"] = c.seconds;
    write_meta(d, {{"data_mesh", mesh_info(*data_mesh)}, {"cases", cases_json}, {"timings", timings}});
    return outcome;
}

// ---------------------------------------------------------------- analytic sweep

SweepOutcome run_analytic_sweep(const RunDescriptor& d) {
    d.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out(d.out);
    fs::create_directories(out);
    const double rho4 = rho_or(d, 0.3);
    const double rho5 = rho_or(d, 1.0 / std::sqrt(2.0));
    SweepOutcome outcome;
    constexpr int grid = 151;
    constexpr int kmax = 4;

    for (int which = 0; which < 2; ++which) {
        const std::string name = which == 0 ? "fig4_left" : "fig4_right";
        const std::string var = which == 0 ? "kappa1" : "kappa2";
        std::ofstream os(out / (name + ".csv"));
        os << var << ",err_K1,err_K2,err_K3,err_K4\n";
        std::vector<svg::Series> series(kmax);
        auto& maxima = which == 0 ? outcome.fig4_left_max : outcome.fig4_right_max;
        for (int i = 0; i < grid; ++i) {
            const double k = -0.5 + 1.5 * i / (grid - 1);
            const disk::ConcentricPerturbation p{which == 0 ? k : 0.0, which == 0 ? 0.0 : k, rho4};
            const auto rec = disk::reconstruct_kappa(p, {1}, kmax, {which == 0, which == 1});
            os << format_real(k);
            for (int K = 0; K < kmax; ++K) {
                const double e = rec.signed_errors[K][which].real();
                os << ',' << format_real(e);
                series[K].x.push_back(k);
                series[K].y.push_back(e);
                maxima[K] = std::max(maxima[K], std::abs(e));
            }
            os << '\n';
        }
        for (int K = 0; K < kmax; ++K) series[K].label = "K = " + std::to_string(K + 1);
        svg::write_file(out / (name + ".svg"),
                        svg::line_plot(series, {"signed errors, rho = " + tick(rho4), var, "signed error"}));
    }

    {
        // radial profiles for kappa = (-0.5, 1)
        const disk::ConcentricPerturbation p{-0.5, 1.0, rho5};
        const auto rec = disk::reconstruct_kappa(p, d.span, kmax);
        std::ofstream os(out / "fig5_left.csv");
        os << "r,B,S1,S2,S3,S4\n";
        std::vector<svg::Series> series(kmax + 1);
        series[0].label = "B";
        for (int K = 0; K < kmax; ++K) series[K + 1].label = "K = " + std::to_string(K + 1);
        for (int i = 0; i < grid; ++i) {
            const double r = static_cast<double>(i) / (grid - 1);
            const int part = r < rho5 ? 1 : 0;
            const double b = part ? p.kappa2 : p.kappa1;
            os << format_real(r) << ',' << format_real(b);
            series[0].x.push_back(r);
            series[0].y.push_back(b);
            for (int K = 0; K < kmax; ++K) {
                const double s = rec.estimates[K][part].real();
                os << ',' << format_real(s);
                series[K + 1].x.push_back(r);
                series[K + 1].y.push_back(s);
            }
            os << '\n';
        }
        svg::write_file(out / "fig5_left.svg", svg::line_plot(series, {"radial reconstructions", "r", "value"}));
    }

    const auto deltas = disk::logspace(1e-3, 1e-1, d.deltas);
    const auto rows = disk::error_sweep(rho5, d.span, kmax, deltas, d.samples);
    {
        std::ofstream os(out / "fig5_right.csv");
        os << "delta,K,err\n";
        for (const auto& r : rows) os << format_real(r.delta) << ',' << r.K << ',' << format_real(r.err) << '\n';
    }
    std::vector<svg::Series> series(kmax);
    for (int K = 1; K <= kmax; ++K) {
        series[K - 1].label = "K = " + std::to_string(K);
        for (const auto& r : rows)
            if (r.K == K) {
                series[K - 1].x.push_back(r.delta);
                series[K - 1].y.push_back(r.err);
            }
        outcome.slopes.push_back(disk::loglog_slope(series[K - 1].x, series[K - 1].y));
        series[K - 1].label += " (slope " + tick(outcome.slopes.back()) + ")";
    }
    svg::PlotOptions o{"maximal reconstruction error", "delta", "err_K", true, true};
    svg::write_file(out / "fig5_right.svg", svg::line_plot(series, o));

    json slopes = json::array();
    for (std::size_t K = 0; K < outcome.slopes.size(); ++K) slopes.push_back({{"K", K + 1}, {"slope", outcome.slopes[K]}});
    write_text(out / "slopes.json", json({{"rho", rho5}, {"span", d.span}, {"slopes", slopes}}).dump(2) + "\n");
    write_meta(d, {{"rho_fig4", rho4}, {"rho_fig5", rho5}, {"grid_points", grid},
                   {"timings", {{"total_seconds", seconds_since(t0)}}}});
    return outcome;
}

// ---------------------------------------------------------------- forward / reconstruct

namespace {

struct ModelSetup {
    MeshPtr mesh;
    FeSpacePtr space;
    std::vector<double> coefficient;
};

// Mesh and true coefficient for the forward problem of the chosen geometry.
ModelSetup forward_model(const RunDescriptor& d, double h) {
    ModelSetup m;
    if (d.geometry == "phantom") {
        m.mesh = generate_disk_mesh(1.0, h, d.degree, phantom_shapes());
        m.coefficient = phantom_coefficient(d, *m.mesh);
    } else {
        const double rho = rho_or(d, 0.5);
        m.mesh = concentric_mesh(rho, h, d.degree);
        m.coefficient.resize(m.mesh->num_triangles());
        for (std::size_t t = 0; t < m.coefficient.size(); ++t)
            m.coefficient[t] = 1.0 + (m.mesh->regions()[t] == 1 ? d.kappa[1] : d.kappa[0]);
    }
    m.space = std::make_shared<const FeSpace>(m.mesh);
    return m;
}

// Background model on the reconstruction mesh with its parameter space.
std::unique_ptr<ForwardBackend> reconstruction_backend(const RunDescriptor& d, MeshPtr& mesh_out) {
    if (d.backend == "analytic") return std::make_unique<disk::SpectralBackend>(rho_or(d, 0.5), d.span);
    PartitionPtr part;
    if (d.geometry == "phantom") {
        mesh_out = generate_disk_mesh(1.0, d.recon_h, d.degree);
        part = build_pixel_partition(mesh_out, d.inner_radius, d.pixels);
    } else {
        const double rho = rho_or(d, 0.5);
        mesh_out = concentric_mesh(rho, d.recon_h, d.degree);
        part = concentric_partition(mesh_out, rho);
    }
    const auto space = std::make_shared<const FeSpace>(mesh_out);
    const std::vector<double> one(mesh_out->num_triangles(), 1.0);
    if (d.backend == "cm")
        return std::make_unique<FemBackend>(assemble_system(space, one), BoundaryBasis::trigonometric(*space, d.J), part);
    return std::make_unique<ScemBackend>(assemble_scem(space, one, electrode_layout(d)), part);
}

void write_datum(const fs::path& p, const RunDescriptor& d, const Eigen::MatrixXcd& m) {
    std::ofstream os(p);
    if (d.backend == "cm")
        write_nd_csv(os, m);
    else
        write_matrix_csv(os, "# " + std::string(d.backend == "scem" ? "EM" : "SPECTRAL") + " n=" +
                                 std::to_string(m.rows()), m);
}

}  // namespace

void run_forward(const RunDescriptor& d) {
    d.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out(d.out);
    fs::create_directories(out);
    json extra;
    Eigen::MatrixXcd datum, background;
    if (d.backend == "analytic") {
        if (d.geometry != "concentric") throw std::invalid_argument("the analytic backend needs the concentric geometry");
        const disk::SpectralBackend b(rho_or(d, 0.5), d.span);
        background = b.nd_matrix();
        datum = background + b.difference_datum({d.kappa[0], d.kappa[1], b.rho()});
    } else {
        const ModelSetup m = forward_model(d, d.mesh_h);
        const std::vector<double> one(m.mesh->num_triangles(), 1.0);
        if (d.backend == "cm") {
            const auto basis = BoundaryBasis::trigonometric(*m.space, d.J);
            datum = nd_matrix(*assemble_system(m.space, m.coefficient), basis);
            background = nd_matrix(*assemble_system(m.space, one), basis);
        } else {
            const ElectrodeLayout layout = electrode_layout(d);
            datum = electrode_matrix(*assemble_scem(m.space, m.coefficient, layout));
            background = electrode_matrix(*assemble_scem(m.space, one, layout));
            write_text(out / "layout.json", layout_to_json(layout) + "\n");
        }
        std::ofstream os(out / "mesh.txt");
        write_mesh(os, *m.mesh);
        extra["mesh"] = mesh_info(*m.mesh);
    }
    write_datum(out / "datum.csv", d, datum);
    write_datum(out / "background.csv", d, background);
    extra["timings"] = {{"total_seconds", seconds_since(t0)}};
    write_meta(d, extra);
}

void run_reconstruct(const RunDescriptor& d) {
    d.validate();
    const auto t0 = std::chrono::steady_clock::now();
    if (d.datum.empty()) throw std::invalid_argument("reconstruct needs a datum file");
    std::ifstream is(d.datum);
    if (!is) throw std::invalid_argument("cannot read datum " + d.datum);
    const Eigen::MatrixXcd datum = read_matrix_csv(is);
    if (d.backend == "analytic" && d.geometry != "concentric")
        throw std::invalid_argument("the analytic backend needs the concentric geometry");

    const fs::path out(d.out);
    fs::create_directories(out);
    const ReversionConfig cfg = reversion_config(d);
    MeshPtr mesh;
    const auto backend = reconstruction_backend(d, mesh);
    const Eigen::MatrixXcd nd = backend->nd_matrix();
    if (datum.rows() != nd.rows() || datum.cols() != nd.cols())
        throw std::invalid_argument("datum is " + std::to_string(datum.rows()) + "x" + std::to_string(datum.cols()) +
                                    " but the model expects " + std::to_string(nd.rows()) + "x" +
                                    std::to_string(nd.cols()));
    const ReversionResult res = reconstruct(*backend, datum - nd, cfg);
    write_result(out, res, cfg);

    json extra;
    if (d.geometry == "concentric") {
        json est = json::array();
        for (const auto& s : res.partial_sums) {
            std::array<double, 2> k{};
            if (const auto* sb = dynamic_cast<const disk::SpectralBackend*>(backend.get()))
                k = sb->expand(s);
            else
                k = {s[0].real(), s[1].real()};
            est.push_back(k);
        }
        write_text(out / "kappa.json", json({{"estimates", est}}).dump(2) + "\n");
    }
    if (mesh) {
        const auto* part = d.backend == "cm" ? static_cast<const FemBackend*>(backend.get())->partition().get() : nullptr;
        if (part)
            for (std::size_t k = 0; k < res.partial_sums.size(); ++k)
                svg::write_file(out / ("S" + std::to_string(k + 1) + ".svg"),
                                svg::field_plot(*mesh, per_triangle(*part, res.partial_sums[k]),
                                                "reconstruction, K = " + std::to_string(k + 1)));
        extra["mesh"] = mesh_info(*mesh);
    }
    extra["timings"] = {{"total_seconds", seconds_since(t0)}};
    write_meta(d, extra);
}

// ---------------------------------------------------------------- self test

namespace {

SelftestCheck check(std::string name, bool pass, const std::string& detail) {
    return {std::move(name), pass, detail};
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double relative_gap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).norm() / std::max(a.norm(), 1e-300);
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const RunDescriptor& d) {
    std::vector<SelftestCheck> checks;
    std::mt19937_64 rng(d.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            checks.push_back(body());
        } catch (const std::exception& e) {
            checks.push_back(check(name, false, std::string("exception: ") + e.what()));
        }
    };

    // mesh + partition
    const double rho = 0.5;
    const MeshPtr mesh = concentric_mesh(rho, 0.1, 2);
    const auto space = std::make_shared<const FeSpace>(mesh);
    guarded("mesh_area_conservation", [&] {
        const auto part = build_pixel_partition(mesh, 0.85, 40);
        double sum = part->outside_area();
        for (double a : part->areas()) sum += a;
        const double gap = std::abs(sum - mesh->total_area());
        return check("mesh_area_conservation", gap < 1e-12, "gap " + sci(gap));
    });

    // continuum model
    const std::vector<double> one(mesh->num_triangles(), 1.0);
    const auto sys = assemble_system(space, one);
    const auto basis = BoundaryBasis::trigonometric(*space, 6);
    guarded("fem_unit_disk_spectrum", [&] {
        const Eigen::MatrixXcd nd = nd_matrix(*sys, basis);
        double diag = 0.0, off = 0.0;
        for (int i = 0; i < nd.rows(); ++i)
            for (int j = 0; j < nd.cols(); ++j) {
                if (i == j) diag = std::max(diag, std::abs(nd(i, i).real() * (i / 2 + 1) - 1.0));
                else off = std::max(off, std::abs(nd(i, j)));
            }
        return check("fem_unit_disk_spectrum", diag < 1e-2 && off < 1e-3,
                     "diag rel " + sci(diag) + ", offdiag " + sci(off));
    });

    const auto part = concentric_partition(mesh, rho);
    const Eigen::VectorXcd b = Eigen::Vector2cd(0.3, 1.0);
    const CoefficientField bf(part, b);

    guarded("fem_derivative_fd_ratio", [&] {
        const Eigen::MatrixXcd nd0 = nd_matrix(*sys, basis);
        const Eigen::VectorXcd dl = dlambda_matrix(*sys, basis, *part) * b;
        std::vector<double> err;
        for (double t : {1e-2, 5e-3, 2.5e-3}) {
            const CoefficientField tb(part, t * b);
            const Eigen::MatrixXcd nd = nd_matrix(*assemble_system(space, triangle_coefficient(*mesh, 1.0, &tb)), basis);
            err.push_back((vec(nd - nd0) / t - dl).norm());
        }
        const double r1 = err[0] / err[1], r2 = err[1] / err[2];
        return check("fem_derivative_fd_ratio", r1 >= 1.8 && r1 <= 2.2 && r2 >= 1.8 && r2 <= 2.2,
                     "ratios " + tick(r1) + ", " + tick(r2));
    });

    guarded("fem_P_bound", [&] {
        const auto u = calderon::basis_solutions(*sys, basis);
        double worst = -1.0;
        for (int s = 0; s < 20; ++s) {
            const Eigen::VectorXcd bs = Eigen::Vector2cd(uni(rng), uni(rng));
            const FeFunction& y = u[s % u.size()];
            const double lhs = sys->energy_norm(sys->apply_P(CoefficientField(part, bs), y));
            const double rhs = bs.cwiseAbs().maxCoeff() / sys->coercivity() * sys->energy_norm(y);
            worst = std::max(worst, (lhs - rhs) / rhs);
        }
        return check("fem_P_bound", worst <= 1e-10, "max (lhs-rhs)/rhs " + sci(worst));
    });

    guarded("fem_reversion_equivalence", [&] {
        const FemBackend backend(sys, basis, part);
        const Eigen::MatrixXcd diff = backend.derivative_matrix().col(1).reshaped(6, 6) * 0.5;
        ReversionConfig cfg;
        const TruncatedPseudoinverse pinv(backend.derivative_matrix(), 0.0);
        const Eigen::VectorXcd F1 = compute_F1_from_difference(backend, diff, pinv);
        const ReversionResult pipe = compute_higher_terms(backend, F1, pinv, cfg);
        const auto thm = closed_form_terms(backend, F1, pinv);
        RecursionState st = start_recursion(backend, F1);
        double gap = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXcd rec = general_recursion_step(backend, st, pinv, true);
            gap = std::max({gap, relative_gap(pipe.terms[k + 1], thm[k]), relative_gap(pipe.terms[k + 1], rec)});
        }
        return check("fem_reversion_equivalence", gap < 1e-10, "max relative gap " + sci(gap));
    });

    // electrode model
    guarded("scem_symmetry_and_P_bound", [&] {
        const auto es = assemble_scem(space, one, equal_electrodes(8, 0.5, 2.0));
        const Eigen::MatrixXcd em = electrode_matrix(*es);
        const double asym = (em - em.transpose()).norm() / em.norm();
        const auto u = calderon::basis_solutions(*es);
        double worst = -1.0;
        for (int s = 0; s < 20; ++s) {
            const Eigen::VectorXcd bs = Eigen::Vector2cd(uni(rng), uni(rng));
            const ScemState& y = u[s % u.size()];
            const double lhs = es->h_norm(es->apply_P(CoefficientField(part, bs), y));
            const double c = std::min(es->coercivity(), es->layout().min_admittance());
            const double rhs = bs.cwiseAbs().maxCoeff() / c * es->h_norm(y);
            worst = std::max(worst, (lhs - rhs) / rhs);
        }
        return check("scem_symmetry_and_P_bound", asym < 1e-10 && worst <= 1e-10,
                     "asymmetry " + sci(asym) + ", max (lhs-rhs)/rhs " + sci(worst));
    });

    // analytic oracle
    guarded("analytic_transmission_invariant", [&] {
        disk::set_fault_injection(d.selftest_fault);
        std::uniform_real_distribution<double> r01(0.05, 0.95);
        std::uniform_int_distribution<int> freq(1, 8);
        double worst = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const std::array<double, 2> eta = {uni(rng), uni(rng)};
            const double rs = r01(rng);
            const auto m = disk::apply_P_eta(eta, rs, disk::neumann_mode(freq(rng)));
            const double scale = std::max({std::abs(m.alpha), std::abs(m.gamma), 1e-300});
            worst = std::max(worst, std::abs(disk::transmission_defect(m, rs)) / scale);
        }
        disk::set_fault_injection(false);
        return check("analytic_transmission_invariant", worst < 1e-12, "max relative defect " + sci(worst));
    });

    guarded("analytic_closed_form_F1", [&] {
        const auto rec = disk::reconstruct_kappa({0.0, 1.0, 0.3}, {1}, 1, {false, true});
        const double f1 = rec.estimates[0][1].real();
        return check("analytic_closed_form_F1", std::abs(f1 - 0.647249) < 1e-6, "F1 " + format_real(f1));
    });

    guarded("analytic_reversion_equivalence", [&] {
        const disk::SpectralBackend sb(1.0 / std::sqrt(2.0), {1, 2});
        const Eigen::MatrixXcd diff = sb.difference_datum({0.05, -0.04, sb.rho()});
        const TruncatedPseudoinverse pinv(sb.derivative_matrix(), 0.0);
        const Eigen::VectorXcd F1 = compute_F1_from_difference(sb, diff, pinv);
        const ReversionResult pipe = compute_higher_terms(sb, F1, pinv, ReversionConfig{});
        const auto thm = closed_form_terms(sb, F1, pinv);
        RecursionState st = start_recursion(sb, F1);
        double gap = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXcd rec = general_recursion_step(sb, st, pinv, true);
            gap = std::max({gap, relative_gap(pipe.terms[k + 1], thm[k]), relative_gap(pipe.terms[k + 1], rec)});
        }
        return check("analytic_reversion_equivalence", gap < 1e-12, "max relative gap " + sci(gap));
    });

    guarded("analytic_convergence_slopes", [&] {
        const auto deltas = disk::logspace(1e-3, 1e-1, 6);
        const auto rows = disk::error_sweep(1.0 / std::sqrt(2.0), {1, 2}, 4, deltas, 16);
        bool ok = true;
        std::string detail = "slopes";
        for (int K = 1; K <= 4; ++K) {
            std::vector<double> x, y;
            for (const auto& r : rows)
                if (r.K == K) x.push_back(r.delta), y.push_back(r.err);
            const double s = disk::loglog_slope(x, y);
            ok = ok && s >= K + 0.75 && s <= K + 1.25;
            detail += " " + tick(s);
        }
        return check("analytic_convergence_slopes", ok, detail);
    });

    guarded("io_csv_round_trip", [&] {
        Eigen::MatrixXcd m(3, 2);
        for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = {uni(rng) * 1e3, uni(rng) * 1e-7};
        std::stringstream ss;
        write_matrix_csv(ss, "# ROUND", m);
        const Eigen::MatrixXcd back = read_matrix_csv(ss);
        return check("io_csv_round_trip", back == m, back == m ? "bitwise equal" : "mismatch");
    });
    return checks;
}

std::string format_selftest(const std::vector<SelftestCheck>& checks) {
    std::ostringstream os;
    int failed = 0;
    for (const auto& c : checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        failed += !c.pass;
    }
    os << (failed ? std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed"
                  : "all " + std::to_string(checks.size()) + " checks passed")
       << '\n';
    return os.str();
}

RunReport run(const RunDescriptor& d) {
    RunReport r;
    try {
        d.validate();
        std::error_code ec;
        fs::create_directories(d.out, ec);
        if (ec || !std::ofstream(fs::path(d.out) / ".write_probe"))
            throw std::invalid_argument("output directory " + d.out + " is not writable");
        fs::remove(fs::path(d.out) / ".write_probe", ec);
        if (d.command == "phantom") {
            const auto o = run_phantom(d);
            std::ostringstream os;
            for (const auto& c : o.cases) {
                os << c.name << " relative errors:";
                for (double e : c.relative_errors) os << ' ' << tick(e);
                os << '\n';
            }
            r.message = os.str();
        } else if (d.command == "analytic-sweep") {
            const auto o = run_analytic_sweep(d);
            std::ostringstream os;
            os << "slopes:";
            for (double s : o.slopes) os << ' ' << tick(s);
            os << '\n';
            r.message = os.str();
        } else if (d.command == "selftest") {
            const auto checks = run_selftest(d);
            r.message = format_selftest(checks);
            fs::create_directories(d.out);
            write_text(fs::path(d.out) / "selftest.txt", r.message);
            write_meta(d, json::object());
            for (const auto& c : checks)
                if (!c.pass) r.exit_code = 1;
        } else if (d.command == "forward") {
            run_forward(d);
        } else {
            run_reconstruct(d);
        }
    } catch (const std::invalid_argument& e) {
        r.exit_code = 2;
        r.message = std::string("usage error: ") + e.what() + "\n";
    } catch (const json::exception& e) {
        r.exit_code = 2;
        r.message = std::string("usage error: ") + e.what() + "\n";
    } catch (const std::exception& e) {
        r.exit_code = 1;
        r.message = std::string("numerical failure: ") + e.what() + "\n";
    }
    return r;
}

}  // namespace calderon
