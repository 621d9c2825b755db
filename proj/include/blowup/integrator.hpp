#pragma once

#include <utility>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

struct TrajectoryNode {
    double xi;
    cplx q;
    cplx q_prime;
    cplx q_second;  // from the ODE; used for Hermite interpolation of Q'
};

// Solution G(mu, kappa, omega, eps, delta; xi) of the profile IVP on
// [xi0, xi_end], Q(0) = mu, Q'(0) = 0, at the accepted steps of the integrator.
struct ProfileTrajectory {
    ProfileParams params;
    cplx mu;
    std::vector<TrajectoryNode> nodes;
    double xi_end = 0.0;
    double tol = 0.0;
};

struct IntegratorOptions {
    double tol = 1e-11;
    double xi0 = 1e-3;            // Taylor hand-off point; 0 is allowed for d = 1
    double blowup_guard = 1e8;
    double nonlinear = 1.0;       // weight of the |Q|^{2 sigma} Q term
    double initial_step = 1e-3;
    long max_steps = 2'000'000;
};

struct ProfileState {
    cplx q;
    cplx q_prime;
};

// Q'' from the profile equation at (xi, Q, Q'). At xi = 0 the (d-1)/xi Q'
// term is replaced by its limit (d-1) Q''(0).
cplx profile_second_derivative(const ProfileParams& params, double xi, cplx q, cplx q_prime,
                               double nonlinear = 1.0);

// (Q(xi0), Q'(xi0)) from Q = mu + c2 xi^2 + c4 xi^4 + O(xi^6) with
// c2 = -(i kappa mu/sigma - omega mu + (1 + i delta)|mu|^{2 sigma} mu) / (2 d (1 - i eps))
// and c4 from the xi^2 coefficient of the equation.
ProfileState taylor_start(const ProfileParams& params, cplx mu, double xi0,
                          double nonlinear = 1.0);

// Dormand-Prince 5(4) with PI step control from (xi_from, start) to xi_to
// (either direction). Accepted nodes are appended to `record` when given.
// Throws EscapeError when |Q| exceeds the guard and StiffnessError on step
// underflow.
ProfileState integrate_span(const ProfileParams& params, double xi_from, ProfileState start,
                            double xi_to, const IntegratorOptions& opts,
                            std::vector<TrajectoryNode>* record = nullptr);

ProfileTrajectory integrate(const ProfileParams& params, cplx mu, double xi_end,
                            const IntegratorOptions& opts = {});

// Final state only; skips node storage.
ProfileState integrate_to(const ProfileParams& params, cplx mu, double xi_end,
                          const IntegratorOptions& opts = {});

// Cubic Hermite interpolation of (Q, Q') between bracketing nodes. Throws
// RangeError outside [first node, xi_end].
ProfileState sample(const ProfileTrajectory& traj, double xi);

}  // namespace blowup
