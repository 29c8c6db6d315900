#ifndef CALDERON_SCEM_HPP
#define CALDERON_SCEM_HPP

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "calderon/fe_space.hpp"
#include "calderon/partition.hpp"

namespace calderon {

/// Electrodes as arcs [theta_start, theta_end) of the boundary loop with
/// contact impedances z_j (contact admittance 1/z_j). An arc may wrap past
/// 2*pi, in which case theta_end is given larger than 2*pi.
struct ElectrodeLayout {
    std::vector<std::pair<double, double>> arcs;
    std::vector<double> z;

    int size() const { return static_cast<int>(arcs.size()); }
    /// Throws std::invalid_argument on empty, overlapping or touching arcs,
    /// zero-length arcs or non-positive impedances.
    void validate() const;
    double min_admittance() const;
};

/// m electrodes of equal angular width `coverage * 2pi/m`, first centred at `phase`.
ElectrodeLayout equal_electrodes(int m, double coverage, double z, double phase = 0.0);

/// JSON {"m": 8, "arcs": [[a, b], ...], "z": [...]}
ElectrodeLayout read_layout_json(const std::string& text);
std::string layout_to_json(const ElectrodeLayout& layout);

/// Solution pair: FE potential and electrode potentials.
struct ScemState {
    FeFunction u;
    Eigen::VectorXcd U;
};

/// Standard complete electrode model: unknowns (u, U) with the gauge
/// sum(U) = 0 imposed by one Lagrange multiplier.
class ScemSystem {
public:
    ScemSystem(FeSpacePtr space, std::vector<double> coefficient, ElectrodeLayout layout);

    const FeSpace& space() const { return *space_; }
    const ElectrodeLayout& layout() const { return layout_; }
    int electrodes() const { return layout_.size(); }
    const std::vector<double>& coefficient() const { return coefficient_; }
    double coercivity() const { return c_a_; }
    /// (n + m) x (n + m) matrix of a_A without the gauge row.
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
    /// Columns: orthonormal basis of mean-free vectors in R^m.
    const Eigen::MatrixXd& current_basis() const { return current_basis_; }

    ScemState solve(const FeFunction& rhs_u, const Eigen::VectorXcd& rhs_U) const;
    /// Rejects currents with |sum I| > 1e-10 * ||I||.
    ScemState solve_current(const Eigen::VectorXcd& current) const;
    /// a_A[(w, W), (v, V)] = -<y, v>_b
    ScemState apply_P(const CoefficientField& b, const ScemState& y) const;

    /// ||grad v||^2 + sum_j ||v - V_j||^2_{L2(E_j)}
    double h_norm(const ScemState& s) const;
    /// Relative residual of a_A[(u,U), .] against the given right-hand side.
    double residual(const ScemState& s, const FeFunction& rhs_u, const Eigen::VectorXcd& rhs_U) const;

    Eigen::VectorXcd stack(const ScemState& s) const;
    ScemState unstack(const Eigen::VectorXcd& v) const;

private:
    Eigen::VectorXd solve_real(const Eigen::VectorXd& rhs) const;

    FeSpacePtr space_;
    std::vector<double> coefficient_;
    ElectrodeLayout layout_;
    double c_a_ = 0.0;
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SparseMatrix<double> electrode_mass_;       // sum_j zeta_j \int_{E_j} phi_a phi_b dS
    Eigen::SparseMatrix<double> electrode_mass_unit_;  // same without zeta
    Eigen::MatrixXd electrode_load_;              // m x n: \int_{E_j} phi dS
    Eigen::VectorXd electrode_length_;
    Eigen::MatrixXd current_basis_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

using ScemSystemPtr = std::shared_ptr<const ScemSystem>;

ScemSystemPtr assemble_scem(FeSpacePtr space, std::vector<double> coefficient, ElectrodeLayout layout);

/// Solutions for the currents given by the columns of current_basis().
std::vector<ScemState> basis_solutions(const ScemSystem& sys);
/// [<U_k, q_i>] for the current basis q_i.
Eigen::MatrixXcd electrode_trace_matrix(const ScemSystem& sys, const std::vector<ScemState>& w);
/// (m-1) x (m-1) current-to-voltage matrix in the current basis.
Eigen::MatrixXcd electrode_matrix(const ScemSystem& sys);
/// Column n: vec of [-\int_{Omega_n} grad u_J . conj(grad u_I)], I fastest.
Eigen::MatrixXcd dlambda_e_matrix(const ScemSystem& sys, const PixelPartition& partition);

}  // namespace calderon

#endif
