#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/shooting.hpp"

namespace blowup {

enum class Stability { Unknown, Stable, Unstable };

const char* to_string(Stability s);
Stability stability_from_string(const std::string& name);

// delta as a function of eps: identically zero, or r * eps.
struct DeltaRule {
    enum class Kind { Zero, Proportional };
    Kind kind = Kind::Zero;
    double r = 0.0;

    double operator()(double eps) const { return kind == Kind::Zero ? 0.0 : r * eps; }
    bool operator==(const DeltaRule&) const = default;

    static DeltaRule zero() { return {}; }
    static DeltaRule proportional(double r) { return {Kind::Proportional, r}; }
    // "0" or "r*eps" forms such as "0.1*eps".
    static DeltaRule parse(const std::string& text);
    std::string to_string() const;
};

// Points live in the scaled coordinates y = (mu, kappa, eps_scale * eps);
// arclength and tangents are measured in that metric.
struct BranchPoint {
    double eps = 0.0;
    double mu = 0.0;
    double kappa = 0.0;
    double arclength = 0.0;
    std::array<double, 3> tangent{};  // unit vector in the scaled metric
    double residual_norm = 0.0;
    Stability stability = Stability::Unknown;
    double step = 0.0;      // step length to try next (persisted for resume)
    int easy_streak = 0;    // consecutive easy corrector solves (persisted for resume)

    bool operator==(const BranchPoint&) const = default;
};

struct TurningPoint {
    double eps_star = 0.0;
    double arclength = 0.0;
    double mu = 0.0;
    double kappa = 0.0;

    bool operator==(const TurningPoint&) const = default;
};

struct Branch {
    int index_j = 0;
    int d = 1;
    double sigma = 1.0;
    DeltaRule delta_rule;
    double xi1 = 30.0;
    int n_terms = 2;
    double eps_scale = 10.0;
    std::vector<BranchPoint> points;
    std::optional<TurningPoint> turning_point;

    bool operator==(const Branch&) const = default;

    ProfileParams params_at(const BranchPoint& p) const;
};

struct StopRule {
    double kappa_min = 0.01;     // small-kappa regime where the branch collapses
    double eps_max = 2.0;
    int points_after_turn = -1;  // stop this many points past the fold; -1 = never
};

struct ContinuationOptions {
    double h0 = 0.01;
    double h_min = 1e-6;
    double h_max = 0.05;
    double grow = 1.3;
    int easy_needed = 3;        // easy successes before the step grows
    int easy_iterations = 3;    // corrector iterations that still count as easy
    int max_corrector_iter = 8;
    int max_points = 2000;
    double tol = 1e-8;
    ShootingOptions shooting{};
    StopRule stop{};
};

// Thrown when the corrector fails at the minimum step; carries the branch so far.
class StallError : public Error {
public:
    StallError(const std::string& what, Branch partial) : Error(what), partial_(std::move(partial)) {}
    const Branch& partial() const noexcept { return partial_; }

private:
    Branch partial_;
};

// Pseudo-arclength continuation of f(mu, kappa, eps) = 0 (omega = 1) from an
// eps = 0 root. Stops on max_points, a return to eps < 0, or the stop rule.
Branch trace_branch(const RootPoint& seed, const DeltaRule& delta_rule,
                    const ContinuationOptions& opts = {});

// Continues a (loaded) branch from its last point with its persisted step.
Branch resume_branch(const Branch& partial, const ContinuationOptions& opts = {});

// Fold where the eps-component of the tangent changes sign: secant iteration on
// the Hermite reconstruction between the bracketing points, then one corrector
// solve there.
std::optional<TurningPoint> detect_turning_point(const Branch& branch,
                                                 const ContinuationOptions& opts = {});

struct EndpointSnapshot {
    double kappa;
    double mu;
    std::vector<double> maxima;  // xi >= 0 locations of the local maxima of |Q|
};

struct EndpointReport {
    bool regime_reached = false;  // kappa_end < 0.05
    double kappa_end = 0.0;
    double mu_end = 0.0;
    int maxima_count = 0;
    std::vector<double> maxima_locations;
    std::vector<EndpointSnapshot> history;  // last (up to) 10 points, in branch order
};

EndpointReport branch_endpoint_diagnostics(const Branch& branch, const ShootingOptions& opts = {});

// Locations xi >= 0 of the local maxima of |Q| (0 included when it is one).
std::vector<double> maxima_locations(const ProfileTrajectory& traj, double plateau = 1e-9);

// One header line, then one JSON object per point, then optionally a
// turning-point line; decimals at 17 significant digits.
void save_branch(const Branch& branch, const std::string& path);
void append_branch_point(const BranchPoint& point, const std::string& path);
Branch load_branch(const std::string& path);

std::string branch_header_json(const Branch& branch);
std::string branch_point_json(const BranchPoint& point);

}  // namespace blowup
