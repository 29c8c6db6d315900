#include "calderon/analytic_disk.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "calderon/errors.hpp"

namespace calderon::disk {

namespace {

std::atomic<bool> g_fault{false};

int abs_freq(int j) {
    if (j == 0) throw std::invalid_argument("frequency 0 is not a mean-free mode");
    return std::abs(j);
}

void check_rho(double rho) {
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("rho must lie in (0, 1)");
}

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

}  // namespace

void ConcentricPerturbation::validate() const {
    check_rho(rho);
    if (!(kappa1 > -1) || !(kappa2 > -1) || !std::isfinite(kappa1) || !std::isfinite(kappa2))
        throw std::invalid_argument("kappa values must lie in (-1, inf)");
}

double nd_eigenvalue(const ConcentricPerturbation& p, int j) {
    p.validate();
    const int n = abs_freq(j);
    const double s = p.kappa1 + p.kappa2 + 2.0;
    const double d = (p.kappa2 - p.kappa1) * std::pow(p.rho, 2 * n);
    return (s - d) / ((p.kappa1 + 1.0) * n * (s + d));
}

double nd_eigenvalue_difference(const ConcentricPerturbation& p, int j) {
    p.validate();
    const int n = abs_freq(j);
    const double s = p.kappa1 + p.kappa2 + 2.0;
    const double d = (p.kappa2 - p.kappa1) * std::pow(p.rho, 2 * n);
    return (-p.kappa1 * s - (p.kappa1 + 2.0) * d) / ((p.kappa1 + 1.0) * n * (s + d));
}

double dlambda_eigenvalue(const std::array<double, 2>& eta, double rho, int j) {
    check_rho(rho);
    const int n = abs_freq(j);
    const double r = std::pow(rho, 2 * n);
    return (eta[0] * (r - 1.0) - eta[1] * r) / n;
}

ModeTriple neumann_mode(int j) {
    const double a = 1.0 / (kSqrt2Pi * abs_freq(j));
    return {j, a, 0.0, a};
}

ModeTriple apply_P_eta(const std::array<double, 2>& eta, double rho, const ModeTriple& m) {
    check_rho(rho);
    const int n = abs_freq(m.j);
    const double r = std::pow(rho, 2 * n), ri = 1.0 / r;
    const auto [a, b, g] = std::array{m.alpha, m.beta, m.gamma};
    const double sign = g_fault.load(std::memory_order_relaxed) ? -1.0 : 1.0;
    ModeTriple out{m.j, 0.0, 0.0, 0.0};
    out.alpha = 0.5 * (eta[0] * ((r - 2.0) * a + b) - eta[1] * r * g);
    out.beta = 0.5 * (eta[0] * (r * a - b) - eta[1] * r * g);
    out.gamma = 0.5 * (eta[0] * ((r - 1.0) * a + (1.0 - ri) * b) - sign * eta[1] * r * (1.0 + ri) * g);
    return out;
}

std::complex<double> trace_mode(const ModeTriple& m) { return m.alpha + m.beta; }

std::complex<double> transmission_defect(const ModeTriple& m, double rho) {
    return m.alpha + std::pow(rho, -2 * abs_freq(m.j)) * m.beta - m.gamma;
}

void set_fault_injection(bool on) { g_fault.store(on); }

SpectralBackend::SpectralBackend(double rho, std::vector<int> span, std::array<bool, 2> free)
    : rho_(rho), span_(std::move(span)) {
    check_rho(rho_);
    if (span_.empty()) throw std::invalid_argument("span selection must not be empty");
    for (std::size_t a = 0; a < span_.size(); ++a) {
        if (span_[a] <= 0) throw std::invalid_argument("span frequencies must be positive");
        for (std::size_t b = 0; b < a; ++b)
            if (span_[a] == span_[b]) throw std::invalid_argument("span frequencies must be distinct");
    }
    for (int k = 0; k < 2; ++k)
        if (free[k]) params_.push_back(k);
    if (params_.empty()) throw std::invalid_argument("no free parameter");
    const auto s = static_cast<Eigen::Index>(span_.size());
    for (Eigen::Index k = 0; k < s; ++k) {
        Field f = Field::Zero(3 * s);
        const ModeTriple m = neumann_mode(span_[k]);
        f.segment(3 * k, 3) << m.alpha, m.beta, m.gamma;
        u_.push_back(std::move(f));
    }
}

std::array<double, 2> SpectralBackend::expand(const Eigen::VectorXcd& b) const {
    if (b.size() != parameter_dim()) throw std::invalid_argument("parameter vector size mismatch");
    std::array<double, 2> eta{0.0, 0.0};
    for (std::size_t k = 0; k < params_.size(); ++k) eta[params_[k]] = b[static_cast<Eigen::Index>(k)].real();
    return eta;
}

Field SpectralBackend::apply_P(const Eigen::VectorXcd& b, const Field& y) const {
    if (y.size() != 3 * measurement_dim()) throw std::invalid_argument("field size mismatch");
    // P is linear in b; split complex directions into real and imaginary parts
    const Eigen::VectorXd bre = b.real(), bim = b.imag();
    const auto eta_re = expand(bre.cast<std::complex<double>>());
    const auto eta_im = expand(bim.cast<std::complex<double>>());
    const bool has_im = bim.size() && bim.cwiseAbs().maxCoeff() > 0;
    Field out(y.size());
    for (int k = 0; k < measurement_dim(); ++k) {
        const ModeTriple m{span_[k], y[3 * k], y[3 * k + 1], y[3 * k + 2]};
        ModeTriple r = apply_P_eta(eta_re, rho_, m);
        if (has_im) {
            const ModeTriple i = apply_P_eta(eta_im, rho_, m);
            const std::complex<double> I(0.0, 1.0);
            r.alpha += I * i.alpha;
            r.beta += I * i.beta;
            r.gamma += I * i.gamma;
        }
        out.segment(3 * k, 3) << r.alpha, r.beta, r.gamma;
    }
    return out;
}

Eigen::MatrixXcd SpectralBackend::trace_matrix(const std::vector<Field>& w) const {
    Eigen::MatrixXcd out(measurement_dim(), static_cast<Eigen::Index>(w.size()));
    for (std::size_t c = 0; c < w.size(); ++c)
        for (int k = 0; k < measurement_dim(); ++k)
            out(k, static_cast<Eigen::Index>(c)) = kSqrt2Pi * (w[c][3 * k] + w[c][3 * k + 1]);
    return out;
}

Eigen::MatrixXcd SpectralBackend::nd_matrix() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(measurement_dim(), measurement_dim());
    for (int k = 0; k < measurement_dim(); ++k) m(k, k) = 1.0 / span_[k];
    return m;
}

Eigen::MatrixXcd SpectralBackend::derivative_matrix() const {
    const int J = measurement_dim();
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(J * J, parameter_dim());
    for (int n = 0; n < parameter_dim(); ++n) {
        std::array<double, 2> eta{0.0, 0.0};
        eta[params_[n]] = 1.0;
        for (int k = 0; k < J; ++k) D(k + J * k, n) = dlambda_eigenvalue(eta, rho_, span_[k]);
    }
    return D;
}

Eigen::MatrixXcd SpectralBackend::difference_datum(const ConcentricPerturbation& truth) const {
    if (std::abs(truth.rho - rho_) > 0) throw std::invalid_argument("datum radius differs from the backend radius");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(measurement_dim(), measurement_dim());
    for (int k = 0; k < measurement_dim(); ++k) m(k, k) = nd_eigenvalue_difference(truth, span_[k]);
    return m;
}

KappaReconstruction reconstruct_kappa(const ConcentricPerturbation& truth, const std::vector<int>& span, int K,
                                      std::array<bool, 2> free) {
    truth.validate();
    if ((!free[0] && truth.kappa1 != 0.0) || (!free[1] && truth.kappa2 != 0.0))
        throw std::invalid_argument("known parameters must be zero");
    const SpectralBackend backend(truth.rho, span, free);
    const Eigen::MatrixXcd D = backend.derivative_matrix();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(D).singularValues();
    if (sv.size() < backend.parameter_dim() || !(sv[sv.size() - 1] > 1e-12 * sv[0]))
        throw NumericalError("span-restricted derivative is singular");

    ReversionConfig cfg;
    cfg.K = K;
    const ReversionResult res = reconstruct(backend, backend.difference_datum(truth), cfg);
    KappaReconstruction out;
    out.truth = {truth.kappa1, truth.kappa2};
    for (const auto& s : res.partial_sums) {
        std::array<std::complex<double>, 2> est{0.0, 0.0};
        for (std::size_t k = 0; k < backend.free_parameters().size(); ++k)
            est[backend.free_parameters()[k]] = s[static_cast<Eigen::Index>(k)];
        out.estimates.push_back(est);
        out.signed_errors.push_back({out.truth[0] - est[0], out.truth[1] - est[1]});
    }
    return out;
}

std::vector<SweepRow> error_sweep(double rho, const std::vector<int>& span, int K_max,
                                  const std::vector<double>& deltas, int samples_per_circle) {
    check_rho(rho);
    if (samples_per_circle < 1) throw std::invalid_argument("error_sweep: need at least one sample per circle");
    const double area_annulus = std::numbers::pi * (1.0 - rho * rho), area_disk = std::numbers::pi * rho * rho;
    std::vector<SweepRow> rows;
    for (double delta : deltas) {
        if (!(delta > 0) || !(delta < 1))
            throw std::invalid_argument("error_sweep: delta must lie in (0, 1) to keep kappa admissible");
        std::vector<double> worst(K_max, 0.0);
        for (int s = 0; s < samples_per_circle; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / samples_per_circle;
            const ConcentricPerturbation p{delta * std::cos(phi), delta * std::sin(phi), rho};
            const auto rec = reconstruct_kappa(p, span, K_max);
            for (int K = 0; K < K_max; ++K) {
                const auto& e = rec.signed_errors[K];
                const double err = std::sqrt(area_annulus * std::norm(e[0]) + area_disk * std::norm(e[1]));
                worst[K] = std::max(worst[K], err);
            }
        }
        for (int K = 0; K < K_max; ++K) rows.push_back({delta, K + 1, worst[K]});
    }
    return rows;
}

std::vector<double> logspace(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0) || !(hi > 0)) throw std::invalid_argument("logspace: invalid range");
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k)
        out[k] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (n - 1));
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += std::log(x[k]) / n;
        my += std::log(y[k]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

std::string to_json(const KappaReconstruction& r) {
    auto rows = [](const std::vector<std::array<std::complex<double>, 2>>& v) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& e : v)
            out.push_back({{e[0].real(), e[0].imag()}, {e[1].real(), e[1].imag()}});
        return out;
    };
    return nlohmann::json{{"truth", r.truth}, {"estimates_per_order", rows(r.estimates)},
                          {"signed_errors", rows(r.signed_errors)}}
        .dump(2);
}

}  // namespace calderon::disk
