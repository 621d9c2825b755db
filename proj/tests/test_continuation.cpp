#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "blowup/continuation.hpp"
#include "blowup/errors.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

RootPoint seed(int d, double sigma, double mu, double kappa)
{
    ShootingProblem p;
    p.fixed.d = d;
    p.fixed.sigma = sigma;
    p.fixed.omega = 1.0;
    RootPoint r = newton_root({mu, kappa}, p);
    r.branch_index = profile_maxima_count(root_trajectory(r));
    return r;
}

ContinuationOptions through_fold(int after = 3)
{
    ContinuationOptions o;
    o.stop.points_after_turn = after;
    return o;
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("blowup_test_" + name)).string();
}

}  // namespace

TEST_CASE("first d = 1 branch through its fold")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    const Branch b = trace_branch(s, DeltaRule::zero(), through_fold());
    REQUIRE(b.turning_point.has_value());
    CHECK(std::abs(b.turning_point->eps_star - 0.06064) < 5e-3);

    double eps_max = 0.0;
    for (const auto& p : b.points) eps_max = std::max(eps_max, p.eps);
    CHECK(eps_max <= b.turning_point->eps_star + 1e-9);
    CHECK(eps_max > b.turning_point->eps_star - 1e-3);

    // the branch starts at the seed
    CHECK(std::abs(b.points[0].mu - s.mu.real()) < 1e-10);
    CHECK(std::abs(b.points[0].kappa - s.params.kappa) < 1e-10);
    CHECK(b.points[0].eps == 0.0);

    ShootingOptions so;
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        CHECK(std::sqrt(dot3(p.tangent, p.tangent)) == doctest::Approx(1.0).epsilon(1e-12));
        // independent re-evaluation of the shooting residual
        CHECK(std::abs(residual(b.params_at(p), p.mu, so)) <= 1e-8);
        if (i > 0) {
            CHECK(dot3(p.tangent, b.points[i - 1].tangent) > 0.0);
            CHECK(p.arclength > b.points[i - 1].arclength);
        }
    }

    // the detector run on the finished branch agrees with the inline one
    const auto again = detect_turning_point(b);
    REQUIRE(again.has_value());
    CHECK(std::abs(again->eps_star - b.turning_point->eps_star) < 1e-12);
}

TEST_CASE("no fold on a monotone piece")
{
    Branch b;
    b.points.resize(2);
    b.points[0].tangent = {0.0, 0.0, 1.0};
    b.points[1].tangent = {0.0, 0.0, 1.0};
    CHECK_FALSE(detect_turning_point(b).has_value());

    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    ContinuationOptions o;
    o.max_points = 5;
    const Branch short_branch = trace_branch(s, DeltaRule::zero(), o);
    CHECK_FALSE(short_branch.turning_point.has_value());
    CHECK_FALSE(detect_turning_point(short_branch).has_value());
}

TEST_CASE("rejected parameters")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    ContinuationOptions o;
    o.h0 = 0.0;
    CHECK_THROWS_AS(trace_branch(s, DeltaRule::zero(), o), DomainError);
    RootPoint moved = s;
    moved.params.eps = 0.01;
    CHECK_THROWS_AS(trace_branch(moved, DeltaRule::zero()), DomainError);
}

TEST_CASE("second d = 3 branch folds later than the first")
{
    const Branch b1 = trace_branch(seed(3, 1.0, 1.88529, 0.91737), DeltaRule::zero(), through_fold());
    const Branch b2 = trace_branch(seed(3, 1.0, 0.83559, 0.32091), DeltaRule::zero(), through_fold());
    REQUIRE(b1.turning_point.has_value());
    REQUIRE(b2.turning_point.has_value());
    CHECK(std::abs(b1.turning_point->eps_star - 0.19813) < 5e-3);
    CHECK(std::abs(b2.turning_point->eps_star - 0.24402) < 5e-3);
    CHECK(b2.turning_point->eps_star > b1.turning_point->eps_star);
}

TEST_CASE("fifth d = 1 branch")
{
    const Branch b = trace_branch(seed(1, 2.3, 1.07947, 0.21643), DeltaRule::zero(), through_fold());
    REQUIRE(b.turning_point.has_value());
    CHECK(std::abs(b.turning_point->eps_star - 0.03455) < 5e-3);
}

TEST_CASE("proportional delta moves the fold toward zero")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    const auto star = [&](const DeltaRule& rule) {
        const Branch b = trace_branch(s, rule, through_fold(1));
        REQUIRE(b.turning_point.has_value());
        return b.turning_point->eps_star;
    };
    const double e0 = star(DeltaRule::zero());
    const double e01 = star(DeltaRule::proportional(0.1));
    const double e1 = star(DeltaRule::proportional(1.0));
    CHECK(e1 < e01);
    CHECK(e01 < e0);
}

TEST_CASE("halving the initial step reproduces the fold")
{
    const RootPoint s = seed(1, 2.3, 0.78308, 0.49323);
    ContinuationOptions coarse = through_fold(2), fine = through_fold(2);
    fine.h0 = coarse.h0 / 2;
    fine.h_max = coarse.h_max / 2;
    const Branch a = trace_branch(s, DeltaRule::zero(), coarse);
    const Branch b = trace_branch(s, DeltaRule::zero(), fine);
    REQUIRE(a.turning_point.has_value());
    REQUIRE(b.turning_point.has_value());
    CHECK(std::abs(a.turning_point->eps_star - b.turning_point->eps_star) < 1e-4);
    CHECK(std::abs(a.turning_point->mu - b.turning_point->mu) < 1e-4);
    CHECK(std::abs(a.turning_point->kappa - b.turning_point->kappa) < 1e-4);
}

TEST_CASE("branch files")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    const Branch b = trace_branch(s, DeltaRule::proportional(0.1), through_fold(2));
    REQUIRE(b.turning_point.has_value());
    const std::string path = temp_path("branch.jsonl");

    SUBCASE("round trip is exact")
    {
        save_branch(b, path);
        const Branch back = load_branch(path);
        CHECK(back == b);
    }
    SUBCASE("truncated file reports the broken line")
    {
        save_branch(b, path);
        std::ifstream in(path);
        std::stringstream text;
        text << in.rdbuf();
        in.close();
        std::string content = text.str();
        // cut the file in the middle of its fourth line
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) pos = content.find('\n', pos) + 1;
        const std::size_t end = content.find('\n', pos);
        content = content.substr(0, pos + (end - pos) / 2);
        std::ofstream(path) << content;
        try {
            load_branch(path);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
        }
    }
    SUBCASE("append grows the file by one point")
    {
        Branch head = b;
        head.points.resize(3);
        head.turning_point.reset();
        save_branch(head, path);
        append_branch_point(b.points[3], path);
        const Branch back = load_branch(path);
        REQUIRE(back.points.size() == 4);
        CHECK(back.points[3] == b.points[3]);
    }
    SUBCASE("non-increasing arclength is rejected")
    {
        Branch bad = b;
        bad.turning_point.reset();
        bad.points[2].arclength = bad.points[1].arclength;
        save_branch(bad, path);
        CHECK_THROWS_AS(load_branch(path), ParseError);
    }
    std::remove(path.c_str());
}

TEST_CASE("resume continues exactly where the run stopped")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    ContinuationOptions full;
    full.max_points = 12;
    const Branch uninterrupted = trace_branch(s, DeltaRule::zero(), full);

    ContinuationOptions part = full;
    part.max_points = 8;
    const std::string path = temp_path("resume.jsonl");
    save_branch(trace_branch(s, DeltaRule::zero(), part), path);
    const Branch resumed = resume_branch(load_branch(path), full);
    std::remove(path.c_str());

    REQUIRE(resumed.points.size() == uninterrupted.points.size());
    for (std::size_t i = 8; i < resumed.points.size(); ++i) {
        const auto& a = resumed.points[i];
        const auto& b = uninterrupted.points[i];
        CHECK(std::abs(a.mu - b.mu) < 1e-8);
        CHECK(std::abs(a.kappa - b.kappa) < 1e-8);
        CHECK(std::abs(a.eps - b.eps) < 1e-8);
    }
}

TEST_CASE("stall carries the partial branch")
{
    const RootPoint s = seed(1, 2.3, 1.23204, 0.85311);
    ContinuationOptions o;
    o.max_corrector_iter = 0;
    try {
        trace_branch(s, DeltaRule::zero(), o);
        FAIL("expected a stall");
    } catch (const StallError& e) {
        CHECK(e.partial().points.size() == 1);
        CHECK(e.partial().points[0].step < o.h_min);
    }
}

TEST_CASE("delta rules")
{
    CHECK(DeltaRule::parse("0") == DeltaRule::zero());
    const DeltaRule r = DeltaRule::parse("0.5*eps");
    CHECK(r(0.2) == doctest::Approx(0.1));
    CHECK(DeltaRule::parse(r.to_string()) == r);
    CHECK_THROWS_AS(DeltaRule::parse("eps"), UsageError);
}

TEST_CASE("endpoint diagnostics")
{
    SUBCASE("branch short of the small-kappa regime")
    {
        ContinuationOptions o;
        o.max_points = 5;
        const Branch b = trace_branch(seed(1, 2.3, 1.23204, 0.85311), DeltaRule::zero(), o);
        const EndpointReport r = branch_endpoint_diagnostics(b);
        CHECK_FALSE(r.regime_reached);
        CHECK(r.maxima_count == 1);
    }
    SUBCASE("first branch keeps its maximum at the origin")
    {
        ContinuationOptions o;
        o.stop.kappa_min = 0.05;
        const Branch b = trace_branch(seed(1, 2.3, 1.23204, 0.85311), DeltaRule::zero(), o);
        const EndpointReport r = branch_endpoint_diagnostics(b);
        CHECK(r.regime_reached);
        // the lower part approaches the ground state of -u'' + u = |u|^(2 sigma) u,
        // u = (sigma + 1)^(1 / (2 sigma)) sech^(1 / sigma)(sigma xi)
        CHECK(std::abs(r.mu_end - std::pow(3.3, 1 / 4.6)) < 1e-2);
        REQUIRE(r.maxima_locations.size() == 1);
        CHECK(r.maxima_locations[0] == 0.0);
        for (const auto& h : r.history) {
            REQUIRE_FALSE(h.maxima.empty());
            CHECK(h.maxima[0] == 0.0);
        }
    }
    SUBCASE("second branch: maxima drift outward as kappa decreases")
    {
        ContinuationOptions o;
        o.stop.kappa_min = 0.05;
        const Branch b = trace_branch(seed(1, 2.3, 0.78308, 0.49323), DeltaRule::zero(), o);
        const EndpointReport r = branch_endpoint_diagnostics(b);
        CHECK(r.regime_reached);
        REQUIRE(r.history.size() >= 2);
        for (std::size_t i = 1; i < r.history.size(); ++i) {
            REQUIRE_FALSE(r.history[i].maxima.empty());
            CHECK(r.history[i].kappa < r.history[i - 1].kappa);
            CHECK(r.history[i].maxima.back() > r.history[i - 1].maxima.back());
        }
    }
}
