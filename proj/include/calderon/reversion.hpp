#ifndef CALDERON_REVERSION_HPP
#define CALDERON_REVERSION_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace calderon {

using Field = Eigen::VectorXcd;

/// What the reversion needs from a forward model around the background A.
/// Parameters are coefficient vectors on the pixel space W; fields are the
/// backend's own state vectors.
class ForwardBackend {
public:
    virtual ~ForwardBackend() = default;

    /// J (boundary functions) or m-1 (electrode currents).
    virtual int measurement_dim() const = 0;
    /// N, the dimension of W.
    virtual int parameter_dim() const = 0;
    /// u_j = N(A) f_j, j = 1..J.
    virtual const std::vector<Field>& basis_solutions() const = 0;
    /// P_A(b) y
    virtual Field apply_P(const Eigen::VectorXcd& b, const Field& y) const = 0;
    /// [<T w_j, f_i>]_{ij}
    virtual Eigen::MatrixXcd trace_matrix(const std::vector<Field>& w) const = 0;
    /// Projected ND map of the background.
    virtual Eigen::MatrixXcd nd_matrix() const = 0;
    /// J^2 x N derivative matrix, column n = vec of the J x J block, i fastest.
    virtual Eigen::MatrixXcd derivative_matrix() const = 0;
};

/// Column-major vectorisation (row index fastest).
Eigen::VectorXcd vec(const Eigen::MatrixXcd& m);

struct ReversionConfig {
    int K = 4;
    double alpha = 0.0;
    double beta = 0.0;
    /// Drop singular values below alpha * sigma_max instead of alpha.
    bool relative_threshold = false;
    bool experimental_general_recursion = false;

    void validate() const;
};

/// Moore-Penrose inverse of D after zeroing singular values below the threshold.
class TruncatedPseudoinverse {
public:
    TruncatedPseudoinverse(const Eigen::MatrixXcd& D, double alpha, bool relative = false);

    Eigen::VectorXcd apply(const Eigen::VectorXcd& data) const;
    /// M applied to a J x J matrix.
    Eigen::VectorXcd apply(const Eigen::MatrixXcd& block) const { return apply(vec(block)); }
    Eigen::MatrixXcd matrix() const;

    const Eigen::VectorXd& singular_values() const { return sigma_; }
    int kept() const { return kept_; }
    double threshold() const { return threshold_; }
    bool all_truncated() const { return kept_ == 0 && sigma_.size() > 0; }
    int rows() const { return static_cast<int>(u_.rows()); }
    int cols() const { return static_cast<int>(v_.rows()); }

private:
    Eigen::MatrixXcd u_, v_;
    Eigen::VectorXd sigma_;
    double threshold_ = 0.0;
    int kept_ = 0;
};

/// pinv(vec(datum - background ND matrix))
Eigen::VectorXcd compute_F1(const ForwardBackend& backend, const Eigen::MatrixXcd& datum,
                            const TruncatedPseudoinverse& pinv);
/// Same from an already formed difference datum - Lambda(A).
Eigen::VectorXcd compute_F1_from_difference(const ForwardBackend& backend, const Eigen::MatrixXcd& difference,
                                                const TruncatedPseudoinverse& pinv);

/// tau_beta(partial_sum) - previous_sum, tau_beta zeroing entries with |value| < beta.
Eigen::VectorXcd apply_contrast_cutoff(const Eigen::VectorXcd& partial_sum, const Eigen::VectorXcd& previous_sum,
                                       double beta);

struct ReversionDiagnostics {
    std::vector<double> singular_values;
    double threshold = 0.0;
    int kept = 0;
    bool all_truncated = false;
    bool conjectural = false;
    std::vector<double> term_sup_norms;
    /// ||vec(difference) - D * partial_sum_k||, the linearised data misfit.
    std::vector<double> linear_residuals;
    std::vector<std::string> warnings;
};

struct ReversionResult {
    std::vector<Eigen::VectorXcd> terms;
    std::vector<Eigen::VectorXcd> partial_sums;
    ReversionDiagnostics diagnostics;
};

/// F_2..F_K from the sequences h, v (F_2), w, p, q (F_3), r, x, y, z (F_4).
/// K <= 4 unless the experimental flag is set, in which case the orders
/// beyond 4 come from the recursion. The contrast cut-off (beta > 0) is
/// applied to every term before the next order is computed.
ReversionResult compute_higher_terms(const ForwardBackend& backend, const Eigen::VectorXcd& F1,
                                     const TruncatedPseudoinverse& pinv, const ReversionConfig& config);

/// F_2, F_3, F_4 from the closed expressions in terms of G_k and the
/// composite L, R, C, V, H terms (no cut-off).
std::vector<Eigen::VectorXcd> closed_form_terms(const ForwardBackend& backend, const Eigen::VectorXcd& F1,
                                                const TruncatedPseudoinverse& pinv);

/// State of the general recursion: ptilde[n-1][j] = Ptilde_n u_j and
/// pf[n-1][j] = P(F_n) u_j.
struct RecursionState {
    std::vector<Eigen::VectorXcd> terms;
    std::vector<std::vector<Field>> ptilde;
    std::vector<std::vector<Field>> pf;
};

RecursionState start_recursion(const ForwardBackend& backend, const Eigen::VectorXcd& F1);
/// Ptilde_j = sum_{n<j} P(F_{j-n}) (Ptilde_n - P(F_n)), F_j = M Ptilde_j N.
/// Requires the experimental flag; appends F_j and returns it.
Eigen::VectorXcd general_recursion_step(const ForwardBackend& backend, RecursionState& state,
                                        const TruncatedPseudoinverse& pinv, bool experimental);
/// Replaces the newest term (e.g. after a cut-off) and refreshes its P(F_n) u_j.
void replace_last_term(const ForwardBackend& backend, RecursionState& state, const Eigen::VectorXcd& term);

/// Full run: pseudoinverse of the backend derivative, F_1 from the
/// difference datum, then the higher orders.
ReversionResult reconstruct(const ForwardBackend& backend, const Eigen::MatrixXcd& difference,
                            const ReversionConfig& config);

/// terms.csv and partial_sums.csv (one column per order, one row per
/// pixel, complex entries "re+imi") and diagnostics.json.
void write_result(const std::filesystem::path& dir, const ReversionResult& result, const ReversionConfig& config);

}  // namespace calderon

#endif
