#pragma once

// Confluent hypergeometric machinery for the far field of the profile
// equation: Kummer U and V, the fundamental pair (P, E), the Wronskian, the
// variation-of-constants kernel, the algebraic far-field expansion and a
// fixed-point validator for the far-field solution family.

#include <span>
#include <utility>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

// Gamma function for complex argument (Lanczos, reflection for Re z < 1/2).
// Throws DomainError at the poles z = 0, -1, -2, ...
cplx gamma_complex(cplx z);

struct KummerArgs {
    cplx a;
    cplx b;
    cplx z;
};

struct QuadratureResult {
    cplx value;
    double error;  // estimated relative error
};

struct SeriesResult {
    cplx value;
    double omitted;  // |first omitted term| including the z^{-a} prefactor
};

// U(a,b,z) = z^{-a}/Gamma(a) * int_0^inf e^{-s} s^{a-1} (1 + s/z)^{b-a-1} ds,
// valid for Re a > 0 and |arg z| < pi. Adaptive Gauss-Kronrod on the
// substituted variable s = t^{1/Re a}. Throws AccuracyError when the panel
// budget is exhausted before the relative error estimate drops below tol.
QuadratureResult kummer_u_quadrature(const KummerArgs& args, double tol = 1e-13);

// Truncated asymptotic expansion z^{-a} sum_{k<n} (a)_k (1+a-b)_k / k! (-z)^{-k}.
SeriesResult kummer_u_series(const KummerArgs& args, int n);

// U through the asymptotic series when it reaches tol at its optimal
// truncation, through quadrature otherwise.
cplx kummer_u(const KummerArgs& args, double tol = 1e-13);

// V(a,b,z) = e^z U(b-a, b, -z).
cplx kummer_v(const KummerArgs& args, double tol = 1e-13);

// U V' - V U' in the z variable: e^{+-i pi (b-a)} z^{-b} e^z, with the
// upper sign for Im z > 0.
cplx kummer_wronskian_closed_form(const KummerArgs& args);

struct FundamentalPair {
    cplx p;
    cplx p_prime;
    cplx e;
    cplx e_prime;
    cplx w;  // closed form of P E' - P' E
};

// Kummer parameters (a, b) of the linearized profile equation.
KummerArgs kummer_args(const ProfileParams& params, double xi);

// P = U(a,b,z(xi)), E = V(a,b,z(xi)) and their xi-derivatives, computed with
// dU/dz = -a U(a+1, b+1, z).
FundamentalPair fundamental_pair(const ProfileParams& params, double xi, double tol = 1e-13);

// Same pair with E and E' divided by e^{z(xi)}; W is divided by e^{z(xi)} too.
// Used where e^{Re z} would overflow or where the exponentials cancel.
FundamentalPair fundamental_pair_scaled(const ProfileParams& params, double xi,
                                        double tol = 1e-13);

cplx wronskian_closed_form(const ProfileParams& params, double xi);

// Variation-of-constants kernel for the linearized operator on (xi1, inf).
cplx kernel_k(const ProfileParams& params, double xi, double eta);

struct FarFieldExpansion {
    cplx exponent;              // -1/sigma - i omega/kappa
    std::vector<cplx> coeffs;   // a_0 .. a_n
    int n_terms = 1;            // coeffs.size()
};

// Coefficients of F = xi^s sum_l a_l xi^{-2l} up to l = n (n <= 2), obtained by
// matching powers of xi in the profile equation. The cubic term
// |F|^{2 sigma} F contributes at the same order as a_1 and is included
// with weight `nonlinear` (0 gives the linearized recursion).
// Throws UnsupportedOrderError for n > 2.
FarFieldExpansion farfield_coeffs(const ProfileParams& params, cplx a0, int n,
                                  double nonlinear = 1.0);

// (F(xi), F'(xi)) of the truncated series.
std::pair<cplx, cplx> farfield_eval(const FarFieldExpansion& expansion, double xi);

// Expansion with n_terms terms whose value at xi equals beta.
FarFieldExpansion farfield_match(const ProfileParams& params, cplx beta, double xi,
                                 int n_terms);

// F'(xi)/F(xi) for the n_terms expansion passing through beta at xi.
cplx farfield_log_derivative(const ProfileParams& params, cplx beta, double xi,
                             int n_terms);

struct PicardOptions {
    int iters = 200;
    double stall = 1e-10;     // sup-norm change that counts as converged
    double cutoff = 1e-14;    // truncation level for the tail integrals
    double step = 2.5e-3;     // internal quadrature spacing
};

struct PicardResult {
    std::vector<cplx> values;  // u on the requested grid
    int sweeps = 0;
    double last_change = 0.0;
};

// Fixed-point iteration u <- gamma P + c [P(xi) int_{xi1}^{xi} E W^{-1} N
//                                          + E(xi) int_{xi}^{inf} P W^{-1} N],
// N = |u|^{2 sigma} u, c = (1 + i delta)/(1 - i eps), with gamma fixed each
// sweep so that u(xi1) = beta. Requires eps > 0. Throws ConvergenceError when
// the sweeps grow instead of contracting.
PicardResult picard_farfield(cplx beta, const ProfileParams& params, double xi1,
                             std::span<const double> grid, const PicardOptions& opts = {});

}  // namespace blowup
