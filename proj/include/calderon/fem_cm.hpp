#ifndef CALDERON_FEM_CM_HPP
#define CALDERON_FEM_CM_HPP

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "calderon/fe_space.hpp"
#include "calderon/partition.hpp"

namespace calderon {

/// Orthonormal, mean-free functions on the boundary, stored by their values
/// at the boundary quadrature nodes.
class BoundaryBasis {
public:
    enum class Kind { Trigonometric, UserSupplied };

    /// cos(theta)/sqrt(pi), sin(theta)/sqrt(pi), cos(2 theta)/sqrt(pi), ...
    static BoundaryBasis trigonometric(const FeSpace& space, int J);
    /// Functions of the loop parameter; made mean free and orthonormalised
    /// (Gram-Schmidt, in the given order) under the boundary quadrature.
    static BoundaryBasis from_functions(const FeSpace& space,
                                        const std::vector<std::function<double(double)>>& functions);

    int size() const { return static_cast<int>(evaluations_.cols()); }
    Kind kind() const { return kind_; }
    const Eigen::MatrixXd& evaluations() const { return evaluations_; }
    /// Row i: \int_Gamma f_i phi_k dS for every dof k. Serves both as the
    /// Neumann load and as the trace functional <Tw, f_i>.
    const Eigen::MatrixXd& load() const { return load_; }

    Eigen::MatrixXd gram() const;
    Eigen::VectorXd means() const;

private:
    BoundaryBasis(const FeSpace& space, Eigen::MatrixXd evaluations, Kind kind);

    Kind kind_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd evaluations_;
    Eigen::MatrixXd load_;
};

/// Per-triangle conductivity base + Re(field) (zero outside the partition).
std::vector<double> triangle_coefficient(const Mesh& mesh, double base, const CoefficientField* field = nullptr);

/// Stiffness of <u, v>_A with the boundary-mean gauge imposed by one
/// Lagrange multiplier. The factorization is computed once and shared by all
/// solves; solves are const and may run concurrently.
class FemSystem {
public:
    FemSystem(FeSpacePtr space, std::vector<double> coefficient);

    const FeSpace& space() const { return *space_; }
    const FeSpacePtr& space_ptr() const { return space_; }
    const std::vector<double>& coefficient() const { return coefficient_; }
    double coercivity() const { return c_a_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

    /// Solves K w = rhs with \int_Gamma Tw = 0 (rhs must annihilate constants).
    FeFunction solve(const FeFunction& rhs) const;
    FeFunction solve_neumann(const BoundaryBasis& basis, const Eigen::VectorXcd& f) const;
    /// <w, v>_A = -<y, v>_b for all v.
    FeFunction apply_P(const CoefficientField& b, const FeFunction& y) const;

    /// sqrt(<w, w>_A)
    double energy_norm(const FeFunction& w) const;
    /// ||K w - rhs|| / max(||rhs||, tiny), gauge not included.
    double residual(const FeFunction& w, const FeFunction& rhs) const;

private:
    Eigen::VectorXd solve_real(const Eigen::VectorXd& rhs) const;

    FeSpacePtr space_;
    std::vector<double> coefficient_;
    double c_a_ = 0.0;
    Eigen::SparseMatrix<double> stiffness_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

using FemSystemPtr = std::shared_ptr<const FemSystem>;

FemSystemPtr assemble_system(FeSpacePtr space, std::vector<double> coefficient);

/// u_j = N f_j for every basis function.
std::vector<FeFunction> basis_solutions(const FemSystem& sys, const BoundaryBasis& basis);
/// [<T w_j, f_i>]_{ij}
Eigen::MatrixXcd trace_matrix(const BoundaryBasis& basis, const std::vector<FeFunction>& w);
Eigen::MatrixXcd nd_matrix(const FemSystem& sys, const BoundaryBasis& basis);
/// Column n: vec of [-\int_{Omega_n} grad u_j . conj(grad u_i)], i fastest.
Eigen::MatrixXcd dlambda_matrix(const FemSystem& sys, const BoundaryBasis& basis, const PixelPartition& partition);
Eigen::MatrixXcd dlambda_matrix(const FemSystem& sys, const std::vector<FeFunction>& u,
                                const PixelPartition& partition);

}  // namespace calderon

#endif
