#pragma once

#include <array>
#include <optional>
#include <vector>

#include "blowup/integrator.hpp"
#include "blowup/params.hpp"

namespace blowup {

// Gauge fixing of the scaling symmetry.
enum class Normalization {
    FixOmega,      // omega = 1, unknowns (mu, kappa)
    FixAmplitude,  // Q(0) = 1, unknowns (kappa, omega)
};

const char* to_string(Normalization n);
Normalization normalization_from_string(const std::string& name);

struct ShootingOptions {
    double xi1 = 30.0;
    int n_terms = 2;  // terms of the far-field expansion in the boundary condition
    IntegratorOptions integrator{};
    // Largest Re z(xi) the forward leg may cross (eps > 0); beyond it the
    // boundary condition is transported back to the matching point.
    double growth_budget = 4.0;
    // Largest integral of the local growth-rate gap between the two linear
    // modes; at small kappa the region xi < 2/kappa behaves like Q'' = Q and
    // the forward leg would otherwise have to hold a recessive tail there.
    double evanescent_budget = 20.0;
};

struct ResidualDetail {
    cplx f;
    double xi_match;  // equals xi1 unless the residual was matched at an interior point
    cplx q_match;     // Q(xi_match) from the forward leg
    cplx beta;        // far-field amplitude Q(xi1)
};

// Boundary mismatch of the IVP solution with Q(0) = mu:
//   f = xi1 (Q'(xi1) - (F'/F)(xi1) Q(xi1)) exp(-z(xi1)) / max(1, |Q(xi1)|),
// where F'/F is the n_terms far-field log-derivative through Q(xi1). When
// either growth budget runs out before xi1, the far-field solution is
// integrated backward to xi_m with Re z(xi_m) = budget, its amplitude is
// solved so that the values agree at xi_m, and the derivative jump there
// (with the same scaling) is returned. Past the evanescent budget, or when no
// far-field amplitude reaches the forward value, the boundary condition is
// transported on the linearized equation instead. All forms vanish on the
// same roots.
// The factor exp(-z) has modulus 1 when eps = 0; it strips the phase
// kappa xi^2 / 2 that the E component would otherwise imprint on f.
// Throws EscapeError when the IVP leaves the guard.
ResidualDetail residual_detail(const ProfileParams& params, double mu,
                               const ShootingOptions& opts = {});
cplx residual(const ProfileParams& params, double mu, const ShootingOptions& opts = {});

struct RootPoint {
    ProfileParams params;
    cplx mu = 1.0;
    double residual_norm = 0.0;
    double xi1 = 30.0;
    int n_terms = 2;
    int branch_index = 0;  // local maxima of |Q| extended evenly; 0 = unassigned
    Normalization normalization = Normalization::FixOmega;
    int iterations = 0;

    // Unknown pair in the order used by newton_root: (mu, kappa) or (kappa, omega).
    std::array<double, 2> unknowns() const;
};

// The shooting problem as a map R^2 -> C over the chosen unknowns.
struct ShootingProblem {
    Normalization normalization = Normalization::FixOmega;
    ProfileParams fixed;  // d, sigma, eps, delta (+ omega or mu fixed by the normalization)
    ShootingOptions options;

    ProfileParams params_at(std::array<double, 2> x) const;
    double mu_at(std::array<double, 2> x) const;
    cplx operator()(std::array<double, 2> x) const;
};

struct NewtonOptions {
    double tol = 1e-8;
    double step_tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 8;
};

// Damped Newton with a central-difference Jacobian (step 1e-6 (1 + |x|)).
// Throws ConvergenceError on non-convergence, DegenerateError on a singular
// Jacobian.
RootPoint newton_root(std::array<double, 2> guess, const ShootingProblem& problem,
                      const NewtonOptions& newton = {});

// Gauge change through (Q, kappa, omega) -> (l^{1/sigma} Q(l xi), l^2 kappa, l^2 omega).
RootPoint normalize_convert(const RootPoint& root, Normalization target);

// Strict local maxima of |Q| extended evenly to [-xi_end, xi_end]: a maximum
// at the origin counts once, any other twice.
int profile_maxima_count(const ProfileTrajectory& traj, double plateau = 1e-9);

// Q on [0, xi1]. When the residual is matched at an interior point, the part
// beyond it comes from the backward far-field leg, since forward integration
// there amplifies errors by exp(Re z).
ProfileTrajectory profile_trajectory(const ProfileParams& params, double mu,
                                     const ShootingOptions& opts = {});
// profile_trajectory at the root's own xi1 and boundary order.
ProfileTrajectory root_trajectory(const RootPoint& root, const ShootingOptions& opts = {});

struct Rect {
    double x_lo;
    double x_hi;
    double y_lo;
    double y_hi;

    double diameter() const;
};

struct ShootingContext {
    ShootingProblem problem;
    NewtonOptions newton{};
    double zero_threshold = 1e-6;  // min |f| on a boundary before the degree is distrusted
    double mu_floor = 0.05;        // FixOmega scans stay above the trivial zero at mu = 0
    // Bisection levels applied regardless of degree. Neighbouring roots carry
    // opposite degrees, so a zero count on a large cell proves nothing.
    int forced_depth = 4;
    int jobs = 1;
};

// Winding number of f along the positively oriented boundary of rect. Each
// side starts with per_side segments; segments whose argument jumps by pi/2 or
// more are bisected down to 1/4096 of the side. Throws UnreliableDegreeError
// (suspected boundary zero or unresolved argument) or ExcludedRegionError
// (IVP escape on the boundary).
int winding_degree(const Rect& rect, int per_side, const ShootingContext& ctx);

struct LocateResult {
    std::vector<RootPoint> roots;
    std::vector<Rect> unreliable;  // cells dropped because their degree could not be trusted
    std::vector<Rect> excluded;    // cells dropped because the IVP escaped on their boundary
};

// Recursive bisection (unconditional for the first forced_depth levels, then
// only for cells of nonzero degree) down to cells of diameter < 1e-2 (or
// max_depth), each candidate polished by newton_root; roots closer than 1e-4
// are merged.
LocateResult locate_roots(const Rect& rect, int max_depth, const ShootingContext& ctx,
                          int per_side = 32);

}  // namespace blowup
