#ifndef CALDERON_BACKENDS_HPP
#define CALDERON_BACKENDS_HPP

#include "calderon/fem_cm.hpp"
#include "calderon/reversion.hpp"
#include "calderon/scem.hpp"

namespace calderon {

/// Continuum model around a FEM background; parameters live on `partition`.
class FemBackend : public ForwardBackend {
public:
    FemBackend(FemSystemPtr sys, BoundaryBasis basis, PartitionPtr partition);

    int measurement_dim() const override { return basis_.size(); }
    int parameter_dim() const override { return partition_->size(); }
    const std::vector<Field>& basis_solutions() const override { return u_; }
    Field apply_P(const Eigen::VectorXcd& b, const Field& y) const override;
    Eigen::MatrixXcd trace_matrix(const std::vector<Field>& w) const override;
    Eigen::MatrixXcd nd_matrix() const override { return nd_; }
    Eigen::MatrixXcd derivative_matrix() const override { return dl_; }

    const FemSystem& system() const { return *sys_; }
    const BoundaryBasis& basis() const { return basis_; }
    const PartitionPtr& partition() const { return partition_; }

private:
    FemSystemPtr sys_;
    BoundaryBasis basis_;
    PartitionPtr partition_;
    std::vector<Field> u_;
    Eigen::MatrixXcd nd_, dl_;
};

/// Electrode model; fields are stacked (u, U), measurements use the
/// orthonormal mean-free current basis.
class ScemBackend : public ForwardBackend {
public:
    ScemBackend(ScemSystemPtr sys, PartitionPtr partition);

    int measurement_dim() const override { return sys_->electrodes() - 1; }
    int parameter_dim() const override { return partition_->size(); }
    const std::vector<Field>& basis_solutions() const override { return u_; }
    Field apply_P(const Eigen::VectorXcd& b, const Field& y) const override;
    Eigen::MatrixXcd trace_matrix(const std::vector<Field>& w) const override;
    Eigen::MatrixXcd nd_matrix() const override { return nd_; }
    Eigen::MatrixXcd derivative_matrix() const override { return dl_; }

    const ScemSystem& system() const { return *sys_; }

private:
    ScemSystemPtr sys_;
    PartitionPtr partition_;
    std::vector<Field> u_;
    Eigen::MatrixXcd nd_, dl_;
};

}  // namespace calderon

#endif
