#ifndef CALDERON_FE_SPACE_HPP
#define CALDERON_FE_SPACE_HPP

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "calderon/mesh.hpp"
#include "calderon/partition.hpp"

namespace calderon {

using FeFunction = Eigen::VectorXcd;

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss rule on every boundary edge, in the loop parameter theta.
/// `weights` already include the boundary measure scale.
struct BoundaryQuadrature {
    static constexpr int kPointsPerEdge = 8;

    std::vector<double> theta;
    Eigen::VectorXd weights;
    Eigen::SparseMatrix<double, Eigen::RowMajor> trace;  // node values of every dof

    explicit BoundaryQuadrature(const Mesh& mesh);
    std::size_t size() const { return theta.size(); }
};

/// Lagrange space on a mesh with cached unit-coefficient element stiffness
/// matrices. Triangle rules are exact to degree 2 * element degree.
class FeSpace {
public:
    explicit FeSpace(MeshPtr mesh);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    std::size_t num_dofs() const { return mesh_->num_dofs(); }
    int triangle_quadrature_degree() const { return 2 * mesh_->degree(); }

    const BoundaryQuadrature& boundary() const { return boundary_; }
    /// \int_Gamma phi_i dS for each dof.
    const Eigen::VectorXd& boundary_integrals() const { return boundary_integrals_; }

    /// Unit element stiffness of triangle t, local dof order.
    Eigen::Map<const Eigen::MatrixXd> element_stiffness(std::size_t t) const;

    /// Global stiffness for per-triangle coefficients.
    Eigen::SparseMatrix<double> stiffness(const std::vector<double>& coefficient) const;
    const Eigen::SparseMatrix<double>& unit_stiffness() const { return unit_stiffness_; }

    /// sum_T b_T K_T y for a pixel field b (matrix free).
    FeFunction weighted_stiffness_apply(const CoefficientField& b, const FeFunction& y) const;

    /// ||grad w||_{L2(Omega)}
    double gradient_norm(const FeFunction& w) const;
    /// \int_Gamma Tw dS
    std::complex<double> boundary_mean(const FeFunction& w) const;

    /// Columns: for each pixel n, the J x J matrix [-\int_{Omega_n} grad u_j . conj(grad u_i)]
    /// vectorised with i fastest.
    Eigen::MatrixXcd pixel_gradient_products(const PixelPartition& partition,
                                             const std::vector<FeFunction>& u) const;

    /// Values at the dofs of a function given pointwise (interpolation).
    Eigen::VectorXd interpolate(const std::function<double(double, double)>& f) const;
    /// L2(Omega) norm of (w - f), with f evaluated at quadrature points.
    double l2_error(const FeFunction& w, const std::function<double(double, double)>& f) const;

private:
    MeshPtr mesh_;
    BoundaryQuadrature boundary_;
    Eigen::VectorXd boundary_integrals_;
    std::vector<double> element_k_;
    Eigen::SparseMatrix<double> unit_stiffness_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

}  // namespace calderon

#endif
