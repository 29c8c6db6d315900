#include "calderon/backends.hpp"

#include <stdexcept>

namespace calderon {

FemBackend::FemBackend(FemSystemPtr sys, BoundaryBasis basis, PartitionPtr partition)
    : sys_(std::move(sys)), basis_(std::move(basis)), partition_(std::move(partition)) {
    if (!sys_ || !partition_) throw std::invalid_argument("FemBackend: null system or partition");
    if (&partition_->mesh() != &sys_->space().mesh())
        throw std::invalid_argument("FemBackend: partition lives on a different mesh");
    u_ = calderon::basis_solutions(*sys_, basis_);
    nd_ = calderon::trace_matrix(basis_, u_);
    dl_ = dlambda_matrix(*sys_, u_, *partition_);
}

Field FemBackend::apply_P(const Eigen::VectorXcd& b, const Field& y) const {
    return sys_->apply_P(CoefficientField(partition_, b), y);
}

Eigen::MatrixXcd FemBackend::trace_matrix(const std::vector<Field>& w) const {
    return calderon::trace_matrix(basis_, w);
}

ScemBackend::ScemBackend(ScemSystemPtr sys, PartitionPtr partition)
    : sys_(std::move(sys)), partition_(std::move(partition)) {
    if (!sys_ || !partition_) throw std::invalid_argument("ScemBackend: null system or partition");
    if (&partition_->mesh() != &sys_->space().mesh())
        throw std::invalid_argument("ScemBackend: partition lives on a different mesh");
    std::vector<FeFunction> grads;
    std::vector<ScemState> states = calderon::basis_solutions(*sys_);
    nd_ = electrode_trace_matrix(*sys_, states);
    for (const auto& s : states) {
        u_.push_back(sys_->stack(s));
        grads.push_back(s.u);
    }
    dl_ = sys_->space().pixel_gradient_products(*partition_, grads);
}

Field ScemBackend::apply_P(const Eigen::VectorXcd& b, const Field& y) const {
    return sys_->stack(sys_->apply_P(CoefficientField(partition_, b), sys_->unstack(y)));
}

Eigen::MatrixXcd ScemBackend::trace_matrix(const std::vector<Field>& w) const {
    std::vector<ScemState> states;
    for (const auto& f : w) states.push_back(sys_->unstack(f));
    return electrode_trace_matrix(*sys_, states);
}

}  // namespace calderon
