#include "calderon/fe_space.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "shape.hpp"

namespace calderon {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

BoundaryQuadrature::BoundaryQuadrature(const Mesh& mesh) {
    std::vector<double> gl_x, gl_w;
    gauss_legendre(kPointsPerEdge, gl_x, gl_w);
    const std::size_t ne = mesh.boundary().size();
    const std::size_t nq = ne * kPointsPerEdge;
    theta.resize(nq);
    weights.resize(static_cast<Eigen::Index>(nq));
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& be = mesh.boundary()[e];
        const auto dofs = mesh.boundary_dofs(e);
        const double span = be.theta1 - be.theta0;
        for (int k = 0; k < kPointsPerEdge; ++k) {
            const std::size_t q = e * kPointsPerEdge + k;
            const double t = gl_x[k];
            theta[q] = be.theta0 + t * span;
            weights[static_cast<Eigen::Index>(q)] = mesh.boundary_scale() * span * gl_w[k];
            const auto phi = detail::edge_shape(mesh.degree(), t);
            for (std::size_t a = 0; a < dofs.size(); ++a)
                trips.emplace_back(static_cast<int>(q), dofs[a], phi[a]);
        }
    }
    trace.resize(static_cast<Eigen::Index>(nq), static_cast<Eigen::Index>(mesh.num_dofs()));
    trace.setFromTriplets(trips.begin(), trips.end());
}

FeSpace::FeSpace(MeshPtr mesh) : mesh_(std::move(mesh)), boundary_(*mesh_) {
    boundary_integrals_ = boundary_.trace.transpose() * boundary_.weights;

    const int per = mesh_->dofs_per_triangle();
    const auto rule = detail::triangle_rule(triangle_quadrature_degree());
    element_k_.assign(mesh_->num_triangles() * per * per, 0.0);
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
        const detail::TriangleGeometry geo(*mesh_, t);
        Eigen::Map<Eigen::MatrixXd> k(element_k_.data() + t * per * per, per, per);
        for (const auto& qp : rule) {
            const auto grads = detail::shape_gradients(mesh_->degree(), qp.lambda, geo);
            for (int a = 0; a < per; ++a)
                for (int b = 0; b < per; ++b)
                    k(a, b) += qp.weight * geo.area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
        }
    }
    unit_stiffness_ = stiffness(std::vector<double>(mesh_->num_triangles(), 1.0));
}

Eigen::Map<const Eigen::MatrixXd> FeSpace::element_stiffness(std::size_t t) const {
    const int per = mesh_->dofs_per_triangle();
    return {element_k_.data() + t * per * per, per, per};
}

Eigen::SparseMatrix<double> FeSpace::stiffness(const std::vector<double>& coefficient) const {
    if (coefficient.size() != mesh_->num_triangles())
        throw std::invalid_argument("FeSpace::stiffness: one coefficient per triangle required");
    const int per = mesh_->dofs_per_triangle();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh_->num_triangles() * per * per);
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
        const auto dofs = mesh_->triangle_dofs(t);
        const auto k = element_stiffness(t);
        for (int a = 0; a < per; ++a)
            for (int b = 0; b < per; ++b) trips.emplace_back(dofs[a], dofs[b], coefficient[t] * k(a, b));
    }
    const auto n = static_cast<Eigen::Index>(num_dofs());
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

FeFunction FeSpace::weighted_stiffness_apply(const CoefficientField& b, const FeFunction& y) const {
    if (&b.partition().mesh() != mesh_.get())
        throw std::invalid_argument("weighted_stiffness_apply: field lives on a different mesh");
    if (y.size() != static_cast<Eigen::Index>(num_dofs()))
        throw std::invalid_argument("weighted_stiffness_apply: function size does not match the space");
    const int per = mesh_->dofs_per_triangle();
    FeFunction out = FeFunction::Zero(y.size());
    Eigen::VectorXcd local(per);
    for (int p = 0; p < b.size(); ++p) {
        const std::complex<double> bp = b.values()[p];
        if (bp == std::complex<double>{}) continue;
        for (int t : b.partition().triangles_of(p)) {
            const auto dofs = mesh_->triangle_dofs(t);
            for (int a = 0; a < per; ++a) local[a] = y[dofs[a]];
            const Eigen::VectorXcd r = element_stiffness(t) * local;
            for (int a = 0; a < per; ++a) out[dofs[a]] += bp * r[a];
        }
    }
    return out;
}

double FeSpace::gradient_norm(const FeFunction& w) const {
    const std::complex<double> e = w.dot(unit_stiffness_ * w);
    return std::sqrt(std::max(0.0, e.real()));
}

std::complex<double> FeSpace::boundary_mean(const FeFunction& w) const {
    return boundary_integrals_.cast<std::complex<double>>().dot(w);
}

Eigen::MatrixXcd FeSpace::pixel_gradient_products(const PixelPartition& partition,
                                                  const std::vector<FeFunction>& u) const {
    if (partition.size() == 0) throw std::invalid_argument("pixel_gradient_products: empty partition");
    if (&partition.mesh() != mesh_.get())
        throw std::invalid_argument("pixel_gradient_products: partition lives on a different mesh");
    const int nj = static_cast<int>(u.size());
    const int per = mesh_->dofs_per_triangle();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(nj) * nj, partition.size());
    Eigen::MatrixXcd local(per, nj);
    Eigen::MatrixXcd block(nj, nj);
    for (int p = 0; p < partition.size(); ++p) {
        block.setZero();
        for (int t : partition.triangles_of(p)) {
            const auto dofs = mesh_->triangle_dofs(t);
            for (int j = 0; j < nj; ++j)
                for (int a = 0; a < per; ++a) local(a, j) = u[j][dofs[a]];
            block.noalias() += local.adjoint() * (element_stiffness(t) * local);
        }
        out.col(p) = -Eigen::Map<const Eigen::VectorXcd>(block.data(), block.size());
    }
    return out;
}

Eigen::VectorXd FeSpace::interpolate(const std::function<double(double, double)>& f) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(num_dofs()));
    const auto& pts = mesh_->dof_points();
    for (std::size_t i = 0; i < pts.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(pts[i].x, pts[i].y);
    return v;
}

double FeSpace::l2_error(const FeFunction& w, const std::function<double(double, double)>& f) const {
    const auto rule = detail::triangle_rule(4);
    const int per = mesh_->dofs_per_triangle();
    double s = 0.0;
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
        const detail::TriangleGeometry geo(*mesh_, t);
        const auto dofs = mesh_->triangle_dofs(t);
        for (const auto& qp : rule) {
            const auto phi = detail::shape_values(mesh_->degree(), qp.lambda);
            std::complex<double> value = 0.0;
            for (int a = 0; a < per; ++a) value += phi[a] * w[dofs[a]];
            const Point x = geo.point(qp.lambda);
            s += qp.weight * geo.area * std::norm(value - f(x.x, x.y));
        }
    }
    return std::sqrt(s);
}

}  // namespace calderon
