#ifndef CALDERON_ANALYTIC_DISK_HPP
#define CALDERON_ANALYTIC_DISK_HPP

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "calderon/reversion.hpp"

namespace calderon::disk {

/// Unit disk, conductivity 1 + kappa1 on the annulus rho < r < 1 and
/// 1 + kappa2 on the inner disk r < rho.
struct ConcentricPerturbation {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double rho = 0.5;

    void validate() const;
};

/// Coefficients of alpha r^|j| + beta r^-|j| (annulus) and gamma r^|j| (inner
/// disk), times e^{ij theta}.
struct ModeTriple {
    int j = 1;
    std::complex<double> alpha, beta, gamma;
};

/// Eigenvalue of the ND map for e^{ij theta}.
double nd_eigenvalue(const ConcentricPerturbation& p, int j);
/// nd_eigenvalue(p, j) - 1/|j| evaluated without cancellation.
double nd_eigenvalue_difference(const ConcentricPerturbation& p, int j);
/// Eigenvalue of the derivative at the unit conductivity in direction eta.
double dlambda_eigenvalue(const std::array<double, 2>& eta, double rho, int j);

/// N(1) f_j for f_j = e^{ij theta}/sqrt(2 pi).
ModeTriple neumann_mode(int j);
/// P(eta) at the unit conductivity, acting on one mode.
ModeTriple apply_P_eta(const std::array<double, 2>& eta, double rho, const ModeTriple& m);
/// alpha + beta
std::complex<double> trace_mode(const ModeTriple& m);
/// alpha + rho^{-2|j|} beta - gamma
std::complex<double> transmission_defect(const ModeTriple& m, double rho);

/// Flips the sign of the inner-disk contribution to gamma in apply_P_eta
/// (negative control for the self test). Off by default.
void set_fault_injection(bool on);

/// Spectral backend for the reversion: fields are the stacked triples of the
/// span frequencies, parameters are the free entries of (kappa1, kappa2).
class SpectralBackend : public ForwardBackend {
public:
    SpectralBackend(double rho, std::vector<int> span, std::array<bool, 2> free = {true, true});

    int measurement_dim() const override { return static_cast<int>(span_.size()); }
    int parameter_dim() const override { return static_cast<int>(params_.size()); }
    const std::vector<Field>& basis_solutions() const override { return u_; }
    Field apply_P(const Eigen::VectorXcd& b, const Field& y) const override;
    Eigen::MatrixXcd trace_matrix(const std::vector<Field>& w) const override;
    Eigen::MatrixXcd nd_matrix() const override;
    Eigen::MatrixXcd derivative_matrix() const override;

    /// Datum minus background for the true perturbation.
    Eigen::MatrixXcd difference_datum(const ConcentricPerturbation& truth) const;
    std::array<double, 2> expand(const Eigen::VectorXcd& b) const;

    double rho() const { return rho_; }
    const std::vector<int>& span() const { return span_; }
    const std::vector<int>& free_parameters() const { return params_; }

private:
    double rho_;
    std::vector<int> span_;
    std::vector<int> params_;
    std::vector<Field> u_;
};

struct KappaReconstruction {
    std::array<double, 2> truth;
    /// estimates[K-1] = sum_{k<=K} F_k expanded to (kappa1, kappa2)
    std::vector<std::array<std::complex<double>, 2>> estimates;
    std::vector<std::array<std::complex<double>, 2>> signed_errors;
};

/// Synthesises the datum from the closed form and runs the reversion.
/// Parameters that are not free must be zero in the truth (they are known).
/// Throws NumericalError when the span-restricted derivative is singular.
KappaReconstruction reconstruct_kappa(const ConcentricPerturbation& truth, const std::vector<int>& span, int K,
                                      std::array<bool, 2> free = {true, true});

/// {"truth": [k1, k2], "estimates_per_order": [[re, im], ...] per order, "signed_errors": same}
std::string to_json(const KappaReconstruction& r);

struct SweepRow {
    double delta;
    int K;
    double err;
};

/// err_K(delta): max over samples on |kappa| = delta of the L2(Omega) norm
/// of kappa - sum_{k<=K} F_k as a two-valued piecewise constant function.
/// For rho = 1/sqrt(2) this is sqrt(pi/2) times the Euclidean error.
std::vector<SweepRow> error_sweep(double rho, const std::vector<int>& span, int K_max,
                                  const std::vector<double>& deltas, int samples_per_circle);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);
/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace calderon::disk

#endif
