#pragma once

#include <complex>

namespace blowup {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

// Parameters of one instance of the profile equation
//   (1 - i eps)(Q'' + (d-1)/xi Q') + i kappa xi Q' + i kappa/sigma Q - omega Q
//       + (1 + i delta)|Q|^{2 sigma} Q = 0.
struct ProfileParams {
    int d = 1;
    double sigma = 1.0;
    double eps = 0.0;
    double delta = 0.0;
    double kappa = 1.0;
    double omega = 1.0;

    bool operator==(const ProfileParams&) const = default;
};

// Throws DomainError unless d in {1,2,3}, sigma > 2/d, eps, delta >= 0, kappa > 0.
void validate(const ProfileParams& p);

// Exponent of the algebraic decay at infinity: -1/sigma - i omega/kappa.
inline cplx decay_exponent(const ProfileParams& p)
{
    return cplx(-1.0 / p.sigma, -p.omega / p.kappa);
}

// Kummer variable z(xi) = -i kappa xi^2 / (2 (1 - i eps)).
inline cplx kummer_z(const ProfileParams& p, double xi)
{
    return cplx(0.0, -p.kappa) * (0.5 * xi * xi) / cplx(1.0, -p.eps);
}

}  // namespace blowup
