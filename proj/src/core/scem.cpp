#include "calderon/scem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "calderon/errors.hpp"
#include "shape.hpp"

namespace calderon {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void ElectrodeLayout::validate() const {
    if (arcs.empty()) throw std::invalid_argument("electrode layout: no electrodes");
    if (z.size() != arcs.size()) throw std::invalid_argument("electrode layout: one impedance per electrode required");
    for (double v : z)
        if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("electrode layout: impedances must be positive");
    std::vector<std::pair<double, double>> sorted;
    for (auto [a, b] : arcs) {
        if (!(b > a)) throw std::invalid_argument("electrode layout: arcs must have positive length");
        if (b - a >= kTwoPi) throw std::invalid_argument("electrode layout: arc covers the whole boundary");
        const double s = a - kTwoPi * std::floor(a / kTwoPi);
        sorted.emplace_back(s, s + (b - a));
    }
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double next = k + 1 < sorted.size() ? sorted[k + 1].first : sorted[0].first + kTwoPi;
        if (!(sorted[k].second < next))
            throw std::invalid_argument("electrode layout: electrodes overlap or touch");
    }
}

double ElectrodeLayout::min_admittance() const {
    double zmax = 0.0;
    for (double v : z) zmax = std::max(zmax, v);
    return 1.0 / zmax;
}

ElectrodeLayout equal_electrodes(int m, double coverage, double z, double phase) {
    if (m < 2) throw std::invalid_argument("equal_electrodes: need at least two electrodes");
    if (!(coverage > 0 && coverage < 1)) throw std::invalid_argument("equal_electrodes: coverage must lie in (0, 1)");
    ElectrodeLayout l;
    const double pitch = kTwoPi / m, half = 0.5 * coverage * pitch;
    for (int k = 0; k < m; ++k) {
        double c = phase + k * pitch;
        c -= kTwoPi * std::floor((c - half) / kTwoPi);
        l.arcs.emplace_back(c - half, c + half);
        l.z.push_back(z);
    }
    l.validate();
    return l;
}

ElectrodeLayout read_layout_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ElectrodeLayout l;
    for (const auto& a : j.at("arcs")) l.arcs.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    if (j.at("z").is_number())
        l.z.assign(l.arcs.size(), j.at("z").get<double>());
    else
        l.z = j.at("z").get<std::vector<double>>();
    if (j.contains("m") && j.at("m").get<int>() != l.size())
        throw std::invalid_argument("electrode layout: m does not match the number of arcs");
    l.validate();
    return l;
}

std::string layout_to_json(const ElectrodeLayout& layout) {
    nlohmann::json j;
    j["m"] = layout.size();
    j["arcs"] = nlohmann::json::array();
    for (auto [a, b] : layout.arcs) j["arcs"].push_back({a, b});
    j["z"] = layout.z;
    return j.dump();
}

ScemSystem::ScemSystem(FeSpacePtr space, std::vector<double> coefficient, ElectrodeLayout layout)
    : space_(std::move(space)), coefficient_(std::move(coefficient)), layout_(std::move(layout)) {
    if (!space_) throw std::invalid_argument("ScemSystem: null space");
    layout_.validate();
    for (auto& [a, b] : layout_.arcs) {
        const double shift = kTwoPi * std::floor(a / kTwoPi);
        a -= shift;
        b -= shift;
    }
    const Mesh& mesh = space_->mesh();
    if (coefficient_.size() != mesh.num_triangles())
        throw std::invalid_argument("ScemSystem: one coefficient per triangle required");
    c_a_ = coefficient_[0];
    for (double a : coefficient_) {
        if (!(a > 0) || !std::isfinite(a)) throw NonCoerciveError("non-coercive coefficient: value " + std::to_string(a));
        c_a_ = std::min(c_a_, a);
    }

    const auto n = static_cast<Eigen::Index>(space_->num_dofs());
    const int m = layout_.size();

    // Electrode integrals: clip every boundary edge against every arc.
    std::vector<double> gx, gw;
    gauss_legendre(BoundaryQuadrature::kPointsPerEdge, gx, gw);
    std::vector<Eigen::Triplet<double>> mass, mass_unit;
    electrode_load_ = Eigen::MatrixXd::Zero(m, n);
    electrode_length_ = Eigen::VectorXd::Zero(m);
    for (std::size_t e = 0; e < mesh.boundary().size(); ++e) {
        const auto& be = mesh.boundary()[e];
        const auto dofs = mesh.boundary_dofs(e);
        const double span = be.theta1 - be.theta0;
        for (int j = 0; j < m; ++j) {
            const double zeta = 1.0 / layout_.z[j];
            for (double shift : {-kTwoPi, 0.0, kTwoPi}) {
                const double lo = std::max(be.theta0, layout_.arcs[j].first + shift);
                const double hi = std::min(be.theta1, layout_.arcs[j].second + shift);
                if (!(hi > lo)) continue;
                for (std::size_t q = 0; q < gx.size(); ++q) {
                    const double theta = lo + gx[q] * (hi - lo);
                    const double w = mesh.boundary_scale() * (hi - lo) * gw[q];
                    const auto phi = detail::edge_shape(mesh.degree(), (theta - be.theta0) / span);
                    electrode_length_[j] += w;
                    for (std::size_t a = 0; a < dofs.size(); ++a) {
                        electrode_load_(j, dofs[a]) += w * phi[a];
                        for (std::size_t b = 0; b < dofs.size(); ++b) {
                            mass.emplace_back(dofs[a], dofs[b], zeta * w * phi[a] * phi[b]);
                            mass_unit.emplace_back(dofs[a], dofs[b], w * phi[a] * phi[b]);
                        }
                    }
                }
            }
        }
    }
    electrode_mass_.resize(n, n);
    electrode_mass_.setFromTriplets(mass.begin(), mass.end());
    electrode_mass_unit_.resize(n, n);
    electrode_mass_unit_.setFromTriplets(mass_unit.begin(), mass_unit.end());

    matrix_ = space_->stiffness(coefficient_) + electrode_mass_;
    matrix_.conservativeResize(n + m, n + m);
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < m; ++j) {
        const double zeta = 1.0 / layout_.z[j];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = electrode_load_(j, i);
            if (v == 0.0) continue;
            trips.emplace_back(i, n + j, -zeta * v);
            trips.emplace_back(n + j, i, -zeta * v);
        }
        trips.emplace_back(n + j, n + j, zeta * electrode_length_[j]);
    }
    matrix_.setZero();
    matrix_.setFromTriplets(trips.begin(), trips.end());

    for (int j = 0; j < m; ++j) {
        trips.emplace_back(n + j, n + m, 1.0);
        trips.emplace_back(n + m, n + j, 1.0);
    }
    Eigen::SparseMatrix<double> kkt(n + m + 1, n + m + 1);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    lu_.compute(kkt);
    if (lu_.info() != Eigen::Success) throw NumericalError("ScemSystem: factorization failed");

    current_basis_ = Eigen::MatrixXd::Zero(m, m - 1);
    for (int k = 1; k < m; ++k) {
        const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        current_basis_.col(k - 1).head(k).setConstant(s);
        current_basis_(k, k - 1) = -k * s;
    }
}

Eigen::VectorXd ScemSystem::solve_real(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd b(rhs.size() + 1);
    b.head(rhs.size()) = rhs;
    b[rhs.size()] = 0.0;
    Eigen::VectorXd x = lu_.solve(b);
    if (!x.allFinite()) throw NumericalError("ScemSystem: solve produced non-finite values");
    return x.head(rhs.size());
}

Eigen::VectorXcd ScemSystem::stack(const ScemState& s) const {
    Eigen::VectorXcd v(s.u.size() + s.U.size());
    v << s.u, s.U;
    return v;
}

ScemState ScemSystem::unstack(const Eigen::VectorXcd& v) const {
    const auto n = static_cast<Eigen::Index>(space_->num_dofs());
    if (v.size() != n + electrodes()) throw std::invalid_argument("ScemSystem: state size mismatch");
    return {v.head(n), v.tail(electrodes())};
}

ScemState ScemSystem::solve(const FeFunction& rhs_u, const Eigen::VectorXcd& rhs_U) const {
    if (rhs_u.size() != static_cast<Eigen::Index>(space_->num_dofs()) || rhs_U.size() != electrodes())
        throw std::invalid_argument("ScemSystem::solve: right-hand side size mismatch");
    const Eigen::VectorXcd b = stack({rhs_u, rhs_U});
    Eigen::VectorXcd x(b.size());
    x.real() = solve_real(b.real());
    const Eigen::VectorXd im = b.imag();
    if (im.cwiseAbs().maxCoeff() > 0)
        x.imag() = solve_real(im);
    else
        x.imag().setZero();
    return unstack(x);
}

ScemState ScemSystem::solve_current(const Eigen::VectorXcd& current) const {
    if (current.size() != electrodes()) throw std::invalid_argument("solve_current: one current per electrode required");
    if (std::abs(current.sum()) > 1e-10 * std::max(1.0, current.norm()))
        throw std::invalid_argument("solve_current: electrode currents must sum to zero");
    return solve(FeFunction::Zero(static_cast<Eigen::Index>(space_->num_dofs())), current);
}

ScemState ScemSystem::apply_P(const CoefficientField& b, const ScemState& y) const {
    if (y.U.size() != electrodes()) throw std::invalid_argument("apply_P: electrode vector size mismatch");
    return solve(-space_->weighted_stiffness_apply(b, y.u), Eigen::VectorXcd::Zero(electrodes()));
}

double ScemSystem::h_norm(const ScemState& s) const {
    const double g = space_->gradient_norm(s.u);
    const Eigen::VectorXcd lu = electrode_load_.cast<std::complex<double>>() * s.u;
    double e = s.u.dot(electrode_mass_unit_.cast<std::complex<double>>() * s.u).real();
    for (int j = 0; j < electrodes(); ++j)
        e += std::norm(s.U[j]) * electrode_length_[j] - 2.0 * (std::conj(s.U[j]) * lu[j]).real();
    return std::sqrt(g * g + std::max(0.0, e));
}

double ScemSystem::residual(const ScemState& s, const FeFunction& rhs_u, const Eigen::VectorXcd& rhs_U) const {
    const Eigen::VectorXcd rhs = stack({rhs_u, rhs_U});
    Eigen::VectorXcd r = matrix_.cast<std::complex<double>>() * stack(s) - rhs;
    // test functions have mean-free electrode parts, which removes the multiplier
    r.tail(electrodes()).array() -= r.tail(electrodes()).mean();
    return r.norm() / std::max(rhs.norm(), 1e-300);
}

ScemSystemPtr assemble_scem(FeSpacePtr space, std::vector<double> coefficient, ElectrodeLayout layout) {
    return std::make_shared<const ScemSystem>(std::move(space), std::move(coefficient), std::move(layout));
}

std::vector<ScemState> basis_solutions(const ScemSystem& sys) {
    std::vector<ScemState> out;
    for (Eigen::Index k = 0; k < sys.current_basis().cols(); ++k)
        out.push_back(sys.solve_current(sys.current_basis().col(k).cast<std::complex<double>>()));
    return out;
}

Eigen::MatrixXcd electrode_trace_matrix(const ScemSystem& sys, const std::vector<ScemState>& w) {
    Eigen::MatrixXcd out(sys.current_basis().cols(), static_cast<Eigen::Index>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = sys.current_basis().transpose().cast<std::complex<double>>() * w[k].U;
    return out;
}

Eigen::MatrixXcd electrode_matrix(const ScemSystem& sys) { return electrode_trace_matrix(sys, basis_solutions(sys)); }

Eigen::MatrixXcd dlambda_e_matrix(const ScemSystem& sys, const PixelPartition& partition) {
    if (partition.size() == 0) throw std::invalid_argument("dlambda_e_matrix: empty partition");
    std::vector<FeFunction> u;
    for (auto& s : basis_solutions(sys)) u.push_back(std::move(s.u));
    return sys.space().pixel_gradient_products(partition, u);
}

}  // namespace calderon
