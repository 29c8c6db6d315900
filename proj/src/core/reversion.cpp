#include "calderon/reversion.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "calderon/io.hpp"

namespace calderon {

namespace {

using Fields = std::vector<Field>;

Fields apply_all(const ForwardBackend& backend, const Eigen::VectorXcd& b, const Fields& y) {
    Fields out;
    out.reserve(y.size());
    for (const auto& f : y) out.push_back(backend.apply_P(b, f));
    return out;
}

Fields add(const Fields& a, const Fields& b) {
    Fields out(a);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += b[j];
    return out;
}

Fields add(const Fields& a, const Fields& b, const Fields& c) { return add(add(a, b), c); }

Fields negate(Fields a) {
    for (auto& f : a) f = -f;
    return a;
}

Eigen::VectorXcd reduce(const ForwardBackend& backend, const TruncatedPseudoinverse& pinv, const Fields& w) {
    return pinv.apply(backend.trace_matrix(w));
}

double sup_norm(const Eigen::VectorXcd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) { return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size()); }

void ReversionConfig::validate() const {
    if (K < 1) throw std::invalid_argument("reversion: K must be >= 1");
    if (K > 4 && !experimental_general_recursion)
        throw std::invalid_argument("reversion: K > 4 requires the experimental general recursion flag");
    if (!(alpha >= 0)) throw std::invalid_argument("reversion: alpha must be non-negative");
    if (!(beta >= 0)) throw std::invalid_argument("reversion: beta must be non-negative");
}

TruncatedPseudoinverse::TruncatedPseudoinverse(const Eigen::MatrixXcd& D, double alpha, bool relative) {
    if (!(alpha >= 0)) throw std::invalid_argument("pseudoinverse: alpha must be non-negative");
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma_ = svd.singularValues();
    threshold_ = relative && sigma_.size() ? alpha * sigma_[0] : alpha;
    // alpha = 0 still drops exact zeros and rounding-level values
    const double floor = sigma_.size() ? sigma_[0] * 1e-14 * std::max(D.rows(), D.cols()) : 0.0;
    kept_ = 0;
    for (Eigen::Index k = 0; k < sigma_.size(); ++k)
        if (sigma_[k] >= threshold_ && sigma_[k] > floor) ++kept_;
    u_ = svd.matrixU().leftCols(kept_);
    v_ = svd.matrixV().leftCols(kept_);
    for (int k = 0; k < kept_; ++k) v_.col(k) /= sigma_[k];
    if (kept_ == 0) {
        u_.resize(D.rows(), 0);
        v_.resize(D.cols(), 0);
    }
}

Eigen::VectorXcd TruncatedPseudoinverse::apply(const Eigen::VectorXcd& data) const {
    if (data.size() != u_.rows()) throw std::invalid_argument("pseudoinverse: data size does not match");
    if (kept_ == 0) return Eigen::VectorXcd::Zero(v_.rows());
    return v_ * (u_.adjoint() * data);
}

Eigen::MatrixXcd TruncatedPseudoinverse::matrix() const {
    if (kept_ == 0) return Eigen::MatrixXcd::Zero(v_.rows(), u_.rows());
    return v_ * u_.adjoint();
}

Eigen::VectorXcd compute_F1_from_difference(const ForwardBackend& backend, const Eigen::MatrixXcd& difference,
                                                const TruncatedPseudoinverse& pinv) {
    const int J = backend.measurement_dim();
    if (difference.rows() != J || difference.cols() != J)
        throw std::invalid_argument("compute_F1: datum does not match the measurement dimension");
    if (pinv.cols() != backend.parameter_dim() || pinv.rows() != J * J)
        throw std::invalid_argument("compute_F1: pseudoinverse does not match the backend");
    return pinv.apply(difference);
}

Eigen::VectorXcd compute_F1(const ForwardBackend& backend, const Eigen::MatrixXcd& datum,
                            const TruncatedPseudoinverse& pinv) {
    const int J = backend.measurement_dim();
    if (datum.rows() != J || datum.cols() != J)
        throw std::invalid_argument("compute_F1: datum does not match the measurement dimension");
    return compute_F1_from_difference(backend, datum - backend.nd_matrix(), pinv);
}

Eigen::VectorXcd apply_contrast_cutoff(const Eigen::VectorXcd& partial_sum, const Eigen::VectorXcd& previous_sum,
                                       double beta) {
    if (partial_sum.size() != previous_sum.size()) throw std::invalid_argument("contrast cutoff: size mismatch");
    Eigen::VectorXcd t = partial_sum;
    for (Eigen::Index k = 0; k < t.size(); ++k)
        if (std::abs(t[k]) < beta) t[k] = 0.0;
    return t - previous_sum;
}

RecursionState start_recursion(const ForwardBackend& backend, const Eigen::VectorXcd& F1) {
    const Fields& u = backend.basis_solutions();
    RecursionState s;
    s.terms.push_back(F1);
    Fields zero;
    for (const auto& f : u) zero.push_back(Field::Zero(f.size()));
    s.ptilde.push_back(std::move(zero));
    s.pf.push_back(apply_all(backend, F1, u));
    return s;
}

Eigen::VectorXcd general_recursion_step(const ForwardBackend& backend, RecursionState& state,
                                        const TruncatedPseudoinverse& pinv, bool experimental) {
    if (!experimental) throw std::invalid_argument("general recursion requires the experimental flag");
    if (state.terms.empty()) throw std::invalid_argument("general recursion: F1 missing");
    const int j = static_cast<int>(state.terms.size()) + 1;
    const std::size_t nu = backend.basis_solutions().size();
    Fields pt;
    for (int n = 1; n <= j - 1; ++n) {
        Fields d(nu);
        for (std::size_t k = 0; k < nu; ++k) d[k] = state.ptilde[n - 1][k] - state.pf[n - 1][k];
        Fields c = apply_all(backend, state.terms[j - n - 1], d);
        pt = pt.empty() ? std::move(c) : add(pt, c);
    }
    const Eigen::VectorXcd Fj = reduce(backend, pinv, pt);
    state.terms.push_back(Fj);
    state.ptilde.push_back(std::move(pt));
    state.pf.push_back(apply_all(backend, Fj, backend.basis_solutions()));
    return Fj;
}

void replace_last_term(const ForwardBackend& backend, RecursionState& state, const Eigen::VectorXcd& term) {
    state.terms.back() = term;
    state.pf.back() = apply_all(backend, term, backend.basis_solutions());
}

ReversionResult compute_higher_terms(const ForwardBackend& backend, const Eigen::VectorXcd& F1,
                                     const TruncatedPseudoinverse& pinv, const ReversionConfig& config) {
    config.validate();
    if (F1.size() != backend.parameter_dim()) throw std::invalid_argument("compute_higher_terms: F1 size mismatch");
    const Fields& u = backend.basis_solutions();
    ReversionResult res;

    auto push = [&](Eigen::VectorXcd F) {
        const Eigen::VectorXcd prev =
            res.partial_sums.empty() ? Eigen::VectorXcd::Zero(F.size()) : res.partial_sums.back();
        if (config.beta > 0) F = apply_contrast_cutoff(prev + F, prev, config.beta);
        res.partial_sums.push_back(prev + F);
        res.terms.push_back(std::move(F));
        return res.terms.back();
    };

    const Eigen::VectorXcd f1 = push(F1);
    if (config.K == 1) return res;

    const Fields h = negate(apply_all(backend, f1, u));
    const Fields v = apply_all(backend, f1, h);
    const Eigen::VectorXcd f2 = push(reduce(backend, pinv, v));
    if (config.K == 2) return res;

    const Fields w = negate(apply_all(backend, f2, u));
    const Fields p = apply_all(backend, f2, h);
    const Fields q = apply_all(backend, f1, add(v, w));
    const Fields pq = add(p, q);
    const Eigen::VectorXcd f3 = push(reduce(backend, pinv, pq));
    if (config.K == 3) return res;

    const Fields r = negate(apply_all(backend, f3, u));
    const Fields x = apply_all(backend, f3, h);
    const Fields y = apply_all(backend, f2, add(v, w));
    const Fields z = apply_all(backend, f1, add(pq, r));
    const Fields xyz = add(x, y, z);
    const Eigen::VectorXcd f4 = push(reduce(backend, pinv, xyz));
    if (config.K == 4) return res;

    // Beyond order 4 the recursion takes over from the pipeline sequences.
    RecursionState state;
    state.terms = {f1, f2, f3, f4};
    Fields zero;
    for (const auto& f : u) zero.push_back(Field::Zero(f.size()));
    state.ptilde = {zero, v, pq, xyz};
    state.pf = {negate(h), negate(w), negate(r), apply_all(backend, f4, u)};
    res.diagnostics.conjectural = true;
    for (int j = 5; j <= config.K; ++j) {
        const Eigen::VectorXcd Fj = general_recursion_step(backend, state, pinv, true);
        const Eigen::VectorXcd kept = push(Fj);
        if (config.beta > 0) replace_last_term(backend, state, kept);
    }
    return res;
}

std::vector<Eigen::VectorXcd> closed_form_terms(const ForwardBackend& backend, const Eigen::VectorXcd& F1,
                                                const TruncatedPseudoinverse& pinv) {
    const Fields& u = backend.basis_solutions();
    // M P(b_0) P(b_1) ... P(b_last) N, the rightmost operator acting first
    auto term = [&](std::initializer_list<const Eigen::VectorXcd*> chain) {
        std::vector<const Eigen::VectorXcd*> ops(chain);
        Fields y = u;
        for (auto it = ops.rbegin(); it != ops.rend(); ++it) y = apply_all(backend, **it, y);
        return reduce(backend, pinv, y);
    };
    const auto& f = F1;
    const Eigen::VectorXcd G2 = term({&f, &f});
    const Eigen::VectorXcd G3 = term({&f, &f, &f});
    const Eigen::VectorXcd G4 = term({&f, &f, &f, &f});
    const Eigen::VectorXcd G22 = term({&G2, &G2});
    const Eigen::VectorXcd L21 = term({&f, &G2});
    const Eigen::VectorXcd R21 = term({&G2, &f});
    const Eigen::VectorXcd L31 = term({&f, &G3});
    const Eigen::VectorXcd R31 = term({&G3, &f});
    const Eigen::VectorXcd LL22 = term({&f, &L21});
    const Eigen::VectorXcd RR22 = term({&R21, &f});
    const Eigen::VectorXcd RL22 = term({&L21, &f});
    const Eigen::VectorXcd LR22 = term({&f, &R21});
    const Eigen::VectorXcd C22 = term({&f, &G2, &f});
    const Eigen::VectorXcd V22 = term({&f, &f, &G2});
    const Eigen::VectorXcd H22 = term({&G2, &f, &f});

    const Eigen::VectorXcd F2 = -G2;
    const Eigen::VectorXcd F3 = -G3 + L21 + R21;
    const Eigen::VectorXcd F4 = -G4 - G22 + C22 + V22 + L31 - LL22 - LR22 + H22 + R31 - RR22 - RL22;
    return {F2, F3, F4};
}

ReversionResult reconstruct(const ForwardBackend& backend, const Eigen::MatrixXcd& difference,
                            const ReversionConfig& config) {
    config.validate();
    const Eigen::MatrixXcd D = backend.derivative_matrix();
    const TruncatedPseudoinverse pinv(D, config.alpha, config.relative_threshold);
    const Eigen::VectorXcd F1 = compute_F1_from_difference(backend, difference, pinv);
    ReversionResult res = compute_higher_terms(backend, F1, pinv, config);

    auto& d = res.diagnostics;
    d.singular_values.assign(pinv.singular_values().data(),
                             pinv.singular_values().data() + pinv.singular_values().size());
    d.threshold = pinv.threshold();
    d.kept = pinv.kept();
    d.all_truncated = pinv.all_truncated();
    if (d.all_truncated) d.warnings.push_back("all singular values truncated; pseudoinverse is the zero map");
    if (config.K > 4) d.warnings.push_back("orders above 4 come from the unproven general recursion");
    const Eigen::VectorXcd data = vec(difference);
    for (std::size_t k = 0; k < res.terms.size(); ++k) {
        d.term_sup_norms.push_back(sup_norm(res.terms[k]));
        d.linear_residuals.push_back((data - D * res.partial_sums[k]).norm());
    }
    return res;
}

void write_result(const std::filesystem::path& dir, const ReversionResult& result, const ReversionConfig& config) {
    std::filesystem::create_directories(dir);
    auto write_columns = [&](const std::string& name, const std::vector<Eigen::VectorXcd>& cols, const char* prefix) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        os << "pixel";
        for (std::size_t k = 0; k < cols.size(); ++k) os << ',' << prefix << k + 1;
        os << '\n';
        const Eigen::Index n = cols.empty() ? 0 : cols[0].size();
        for (Eigen::Index p = 0; p < n; ++p) {
            os << p + 1;
            for (const auto& c : cols) os << ',' << format_complex(c[p]);
            os << '\n';
        }
    };
    write_columns("terms.csv", result.terms, "F");
    write_columns("partial_sums.csv", result.partial_sums, "S");

    const auto& d = result.diagnostics;
    nlohmann::json j;
    j["config"] = {{"K", config.K},
                   {"alpha", config.alpha},
                   {"beta", config.beta},
                   {"relative_threshold", config.relative_threshold},
                   {"experimental_general_recursion", config.experimental_general_recursion}};
    j["threshold"] = d.threshold;
    j["singular_values_kept"] = std::vector<double>(d.singular_values.begin(), d.singular_values.begin() + d.kept);
    j["singular_values_dropped"] = std::vector<double>(d.singular_values.begin() + d.kept, d.singular_values.end());
    j["all_truncated"] = d.all_truncated;
    j["conjectural"] = d.conjectural;
    j["term_sup_norms"] = d.term_sup_norms;
    j["linear_residuals"] = d.linear_residuals;
    j["warnings"] = d.warnings;
    std::ofstream os(dir / "diagnostics.json");
    os << j.dump(2) << '\n';
}

}  // namespace calderon
