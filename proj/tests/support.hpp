#pragma once

#include <cmath>
#include <stdexcept>

#include "blowup/continuation.hpp"
#include "blowup/shooting.hpp"

namespace blowup::testing {

inline ShootingProblem omega_problem(int d, double sigma, double eps = 0.0, double delta = 0.0)
{
    ShootingProblem p;
    p.fixed.d = d;
    p.fixed.sigma = sigma;
    p.fixed.omega = 1.0;
    p.fixed.eps = eps;
    p.fixed.delta = delta;
    return p;
}

inline RootPoint seed_root(int d, double sigma, double mu, double kappa)
{
    RootPoint r = newton_root({mu, kappa}, omega_problem(d, sigma));
    r.branch_index = profile_maxima_count(root_trajectory(r));
    return r;
}

enum class Part { Upper, Lower };

// Root at eps = target on the upper (before the fold) or lower (after it)
// part of the delta = 0 branch through `seed`: the nearest traced point seeds
// a Newton solve at the fixed eps.
inline RootPoint root_on_branch(const RootPoint& seed, double target, Part part)
{
    ContinuationOptions o;
    o.stop.kappa_min = 0.05;
    o.stop.points_after_turn = part == Part::Upper ? 1 : -1;
    const Branch b = trace_branch(seed, DeltaRule::zero(), o);
    if (!b.turning_point) throw std::runtime_error("branch has no fold");
    const double s_star = b.turning_point->arclength;
    const BranchPoint* best = nullptr;
    for (const auto& p : b.points) {
        if ((part == Part::Upper) != (p.arclength < s_star)) continue;
        if (best == nullptr || std::abs(p.eps - target) < std::abs(best->eps - target)) best = &p;
    }
    if (best == nullptr || std::abs(best->eps - target) > 0.02) {
        throw std::runtime_error("branch part does not reach the requested eps");
    }
    RootPoint r = newton_root({best->mu, best->kappa}, omega_problem(seed.params.d, seed.params.sigma, target));
    r.branch_index = seed.branch_index;
    return r;
}

}  // namespace blowup::testing
