#include "calderon/fem_cm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "calderon/errors.hpp"

namespace calderon {

BoundaryBasis::BoundaryBasis(const FeSpace& space, Eigen::MatrixXd evaluations, Kind kind)
    : kind_(kind), weights_(space.boundary().weights), evaluations_(std::move(evaluations)) {
    load_ = (evaluations_.transpose() * weights_.asDiagonal()) * space.boundary().trace;
}

BoundaryBasis BoundaryBasis::trigonometric(const FeSpace& space, int J) {
    if (J < 1) throw std::invalid_argument("BoundaryBasis: J must be >= 1");
    const auto& th = space.boundary().theta;
    const double scale = space.mesh().boundary_scale();
    // normalised for the measure scale * dtheta
    const double c = 1.0 / std::sqrt(std::numbers::pi * scale);
    Eigen::MatrixXd e(static_cast<Eigen::Index>(th.size()), J);
    for (int k = 0; k < J; ++k) {
        const int freq = k / 2 + 1;
        for (std::size_t q = 0; q < th.size(); ++q)
            e(static_cast<Eigen::Index>(q), k) = c * (k % 2 == 0 ? std::cos(freq * th[q]) : std::sin(freq * th[q]));
    }
    return BoundaryBasis(space, std::move(e), Kind::Trigonometric);
}

BoundaryBasis BoundaryBasis::from_functions(const FeSpace& space,
                                            const std::vector<std::function<double(double)>>& functions) {
    if (functions.empty()) throw std::invalid_argument("BoundaryBasis: no functions given");
    const auto& th = space.boundary().theta;
    const Eigen::VectorXd& w = space.boundary().weights;
    const double length = w.sum();
    Eigen::MatrixXd e(static_cast<Eigen::Index>(th.size()), static_cast<Eigen::Index>(functions.size()));
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
        for (std::size_t q = 0; q < th.size(); ++q) e(static_cast<Eigen::Index>(q), k) = functions[k](th[q]);
        e.col(k).array() -= w.dot(e.col(k)) / length;
        // modified Gram-Schmidt, twice for stability
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index l = 0; l < k; ++l) e.col(k) -= e.col(l).dot(w.asDiagonal() * e.col(k)) * e.col(l);
        const double n = std::sqrt(e.col(k).dot(w.asDiagonal() * e.col(k)));
        if (!(n > 1e-10)) throw std::invalid_argument("BoundaryBasis: functions are linearly dependent modulo constants");
        e.col(k) /= n;
    }
    return BoundaryBasis(space, std::move(e), Kind::UserSupplied);
}

Eigen::MatrixXd BoundaryBasis::gram() const {
    return evaluations_.transpose() * weights_.asDiagonal() * evaluations_;
}

Eigen::VectorXd BoundaryBasis::means() const { return evaluations_.transpose() * weights_; }

std::vector<double> triangle_coefficient(const Mesh& mesh, double base, const CoefficientField* field) {
    std::vector<double> a(mesh.num_triangles(), base);
    if (field) {
        if (&field->partition().mesh() != &mesh)
            throw std::invalid_argument("triangle_coefficient: field lives on a different mesh");
        for (std::size_t t = 0; t < a.size(); ++t) a[t] += field->on_triangle(t).real();
    }
    return a;
}

FemSystem::FemSystem(FeSpacePtr space, std::vector<double> coefficient)
    : space_(std::move(space)), coefficient_(std::move(coefficient)) {
    if (!space_) throw std::invalid_argument("FemSystem: null space");
    if (coefficient_.size() != space_->mesh().num_triangles())
        throw std::invalid_argument("FemSystem: one coefficient per triangle required");
    c_a_ = coefficient_.empty() ? 0.0 : coefficient_[0];
    for (double a : coefficient_) {
        if (!(a > 0) || !std::isfinite(a)) throw NonCoerciveError("non-coercive coefficient: value " + std::to_string(a));
        c_a_ = std::min(c_a_, a);
    }
    stiffness_ = space_->stiffness(coefficient_);

    const auto n = static_cast<Eigen::Index>(space_->num_dofs());
    const Eigen::VectorXd& c = space_->boundary_integrals();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(stiffness_.nonZeros() + 2 * n);
    for (Eigen::Index k = 0; k < stiffness_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(stiffness_, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (c[i] == 0.0) continue;
        trips.emplace_back(i, n, c[i]);
        trips.emplace_back(n, i, c[i]);
    }
    Eigen::SparseMatrix<double> kkt(n + 1, n + 1);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    lu_.compute(kkt);
    if (lu_.info() != Eigen::Success) throw NumericalError("FemSystem: factorization failed");
}

Eigen::VectorXd FemSystem::solve_real(const Eigen::VectorXd& rhs) const {
    const auto n = rhs.size();
    Eigen::VectorXd b(n + 1);
    b.head(n) = rhs;
    b[n] = 0.0;
    Eigen::VectorXd x = lu_.solve(b);
    if (!x.allFinite()) throw NumericalError("FemSystem: solve produced non-finite values");
    return x.head(n);
}

FeFunction FemSystem::solve(const FeFunction& rhs) const {
    if (rhs.size() != static_cast<Eigen::Index>(space_->num_dofs()))
        throw std::invalid_argument("FemSystem::solve: right-hand side size mismatch");
    const Eigen::VectorXd re = rhs.real(), im = rhs.imag();
    FeFunction out(rhs.size());
    out.real() = solve_real(re);
    if (im.cwiseAbs().maxCoeff() > 0)
        out.imag() = solve_real(im);
    else
        out.imag().setZero();
    return out;
}

FeFunction FemSystem::solve_neumann(const BoundaryBasis& basis, const Eigen::VectorXcd& f) const {
    if (f.size() != basis.size()) throw std::invalid_argument("solve_neumann: coefficient vector does not match the basis");
    if (basis.load().cols() != static_cast<Eigen::Index>(space_->num_dofs()))
        throw std::invalid_argument("solve_neumann: basis belongs to a different space");
    return solve(basis.load().transpose().cast<std::complex<double>>() * f);
}

FeFunction FemSystem::apply_P(const CoefficientField& b, const FeFunction& y) const {
    return solve(-space_->weighted_stiffness_apply(b, y));
}

double FemSystem::energy_norm(const FeFunction& w) const {
    const std::complex<double> e = w.dot(stiffness_ * w);
    return std::sqrt(std::max(0.0, e.real()));
}

double FemSystem::residual(const FeFunction& w, const FeFunction& rhs) const {
    const double r = (stiffness_.cast<std::complex<double>>() * w - rhs).norm();
    return r / std::max(rhs.norm(), 1e-300);
}

FemSystemPtr assemble_system(FeSpacePtr space, std::vector<double> coefficient) {
    return std::make_shared<const FemSystem>(std::move(space), std::move(coefficient));
}

std::vector<FeFunction> basis_solutions(const FemSystem& sys, const BoundaryBasis& basis) {
    std::vector<FeFunction> u;
    u.reserve(basis.size());
    for (int j = 0; j < basis.size(); ++j) u.push_back(sys.solve_neumann(basis, Eigen::VectorXcd::Unit(basis.size(), j)));
    return u;
}

Eigen::MatrixXcd trace_matrix(const BoundaryBasis& basis, const std::vector<FeFunction>& w) {
    Eigen::MatrixXcd out(basis.size(), static_cast<Eigen::Index>(w.size()));
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j].size() != basis.load().cols()) throw std::invalid_argument("trace_matrix: function size mismatch");
        out.col(static_cast<Eigen::Index>(j)) = basis.load().cast<std::complex<double>>() * w[j];
    }
    return out;
}

Eigen::MatrixXcd nd_matrix(const FemSystem& sys, const BoundaryBasis& basis) {
    return trace_matrix(basis, basis_solutions(sys, basis));
}

Eigen::MatrixXcd dlambda_matrix(const FemSystem& sys, const std::vector<FeFunction>& u,
                                const PixelPartition& partition) {
    return sys.space().pixel_gradient_products(partition, u);
}

Eigen::MatrixXcd dlambda_matrix(const FemSystem& sys, const BoundaryBasis& basis, const PixelPartition& partition) {
    if (partition.size() == 0) throw std::invalid_argument("dlambda_matrix: empty partition");
    return dlambda_matrix(sys, basis_solutions(sys, basis), partition);
}

}  // namespace calderon
