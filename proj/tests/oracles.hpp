// Closed forms derived by hand for the concentric disk, kept separate from
// the library so the tests do not check the library against itself.
#ifndef CALDERON_TEST_ORACLES_HPP
#define CALDERON_TEST_ORACLES_HPP

#include <cmath>
#include <numbers>

namespace oracle {

// Conductivity s1 on rho < r < 1, s2 on r < rho, flux e^{in theta} at r = 1.
// u = a r^n + b r^-n outside, c r^n inside; continuity and flux matching at
// rho give b = a t mu with t = rho^{2n}, mu = (s1 - s2)/(s1 + s2), and the
// boundary flux fixes a = 1/(s1 n (1 - t mu)). The eigenvalue is a + b.
inline double nd_eigenvalue(double kappa1, double kappa2, double rho, int n) {
    const double s1 = 1 + kappa1, s2 = 1 + kappa2;
    const double t = std::pow(rho, 2 * n), mu = (s1 - s2) / (s1 + s2);
    return (1 + t * mu) / (s1 * n * (1 - t * mu));
}

// -\int_{Omega_k} |grad u|^2 for u = r^n cos(n theta)/(n sqrt(pi)), whose
// gradient has squared length r^{2n-2}/pi.
inline double dlambda_annulus(double rho, int n) { return -(1 - std::pow(rho, 2 * n)) / n; }
inline double dlambda_disk(double rho, int n) { return -std::pow(rho, 2 * n) / n; }

// One-mode reversion with kappa1 = 0 known: F1 = (lambda - 1)/dlambda_disk.
inline double one_mode_F1(double kappa2, double rho) {
    return (nd_eigenvalue(0, kappa2, rho, 1) - 1) / dlambda_disk(rho, 1);
}

}  // namespace oracle

#endif
