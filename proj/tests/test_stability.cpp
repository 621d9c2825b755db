#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "blowup/errors.hpp"
#include "blowup/stability.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace blowup;
using namespace blowup::testing;

namespace {

const RootPoint& first_root()
{
    static const RootPoint r = seed_root(1, 2.3, 1.23204, 0.85311);
    return r;
}

ProfileTrajectory trajectory(const RootPoint& r, double xi1 = 30.0)
{
    ShootingOptions o;
    o.xi1 = xi1;
    return profile_trajectory(r.params, r.mu.real(), o);
}

}  // namespace

TEST_CASE("symmetry modes")
{
    const RootPoint& r = first_root();
    const auto traj = trajectory(r);
    LinearizationGrid grid;
    const auto modes = symmetry_modes(traj, r.params, grid);
    const auto nodes = grid.nodes();
    REQUIRE(modes.y1.size() == nodes.size());
    for (std::size_t k = 1; k < nodes.size(); k += 37) {
        CHECK(std::abs(modes.y1[k] - I * sample(traj, nodes[k]).q) < 1e-15);
    }
    // Y2 = O(xi^(-1/sigma - 2)): the scaled mode does not grow toward xi1
    const double p = 1.0 / r.params.sigma + 2.0;
    double near = 0.0, far = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double v = std::abs(modes.y2[k]) * std::pow(nodes[k], p);
        if (nodes[k] >= 10.0 && nodes[k] < 20.0) near = std::max(near, v);
        if (nodes[k] >= 20.0) far = std::max(far, v);
    }
    CHECK(far <= 2.0 * near);
}

TEST_CASE("analytic modes satisfy the discrete operator")
{
    const RootPoint& r = first_root();
    const auto traj = trajectory(r);
    LinearizationGrid grid;
    const Matrix m = assemble(traj, r.params, grid);
    CHECK(m.rows() == 2 * static_cast<std::size_t>(grid.unknowns()));
    const auto modes = symmetry_modes(traj, r.params, grid);
    CHECK(mode_residual(m, real_stack(modes.y1), 0.0) <= 1e-3);
    CHECK(mode_residual(m, real_stack(modes.y2), 2.0 * r.params.kappa) <= 1e-3);
}

TEST_CASE("second-order residual falls about fourfold per grid doubling")
{
    const RootPoint& r = first_root();
    const auto traj = trajectory(r);
    double prev = 0.0;
    for (int n : {600, 1200}) {
        LinearizationGrid grid;
        grid.n = n;
        grid.scheme = Scheme::Central2;
        const Matrix m = assemble(traj, r.params, grid);
        const auto modes = symmetry_modes(traj, r.params, grid);
        const double res = mode_residual(m, real_stack(modes.y1), 0.0);
        if (prev > 0.0) {
            CHECK(prev / res > 3.0);
            CHECK(prev / res < 5.0);
        }
        prev = res;
    }
}

TEST_CASE("decoupled limit is nearly skew")
{
    ProfileParams p;
    p.d = 1;
    p.sigma = 2.3;
    p.kappa = 1e-6;
    p.omega = 1.0;
    const ProfileTrajectory zero = integrate(p, 0.0, 30.0);
    LinearizationGrid grid;
    grid.n = 200;
    grid.scheme = Scheme::Central2;
    grid.closure = Closure::Robin;
    const auto eigs = eigenvalues(assemble(zero, p, grid));
    double top = 0.0, re = 0.0;
    for (const cplx& l : eigs) {
        top = std::max(top, std::abs(l));
        re = std::max(re, std::abs(l.real()));
    }
    // i (Laplacian - 1) stacked as a real matrix: +-i times a symmetrizable spectrum
    CHECK(re <= 1e-5 * top);
}

TEST_CASE("classification on synthetic spectra")
{
    const double k = 0.5;
    SUBCASE("stable rest")
    {
        const Spectrum s = classify({{1e-4, 0.0}, {1.0002, 0.0}, {-0.5, 1.0}, {-0.5, -1.0}}, k);
        CHECK(s.verdict == Verdict::Stable);
        CHECK(s.max_real_rest == -0.5);
        CHECK(s.index_zero == 0);
        CHECK(s.index_two_kappa == 1);
    }
    SUBCASE("margin band")
    {
        CHECK(classify({0.0, 1.0, {5e-4, 2.0}, {5e-4, -2.0}}, k).verdict == Verdict::Inconclusive);
        CHECK(classify({0.0, 1.0, {-5e-4, 2.0}, {-5e-4, -2.0}}, k).verdict == Verdict::Inconclusive);
        CHECK(classify({0.0, 1.0, {2e-3, 2.0}, {2e-3, -2.0}}, k).verdict == Verdict::Unstable);
        CHECK(classify({0.0, 1.0, {2e-3, 2.0}, {2e-3, -2.0}}, k, 1e-2).verdict == Verdict::Inconclusive);
    }
    SUBCASE("exactly one of each doublet member is removed")
    {
        const Spectrum s = classify({0.0, 0.0, 1.0, {-1.0, 0.0}}, k);
        CHECK(s.max_real_rest == 0.0);
        CHECK(s.verdict == Verdict::Inconclusive);
    }
    SUBCASE("missing doublet")
    {
        CHECK_THROWS_AS(classify({0.0, {-1.0, 0.0}, {-2.0, 0.0}}, k), DoubletNotFoundError);
        CHECK_THROWS_AS(classify({0.3, 1.0, {-2.0, 0.0}}, k), DoubletNotFoundError);
    }
}

TEST_CASE("grid checks")
{
    const RootPoint& r = first_root();
    const auto traj = trajectory(r);
    LinearizationGrid grid;
    grid.n = 150;
    CHECK_THROWS_AS(assemble(traj, r.params, grid), ResolutionError);
    grid.n = 200;
    CHECK_THROWS_AS(assemble(traj, r.params, grid), ResolutionError);  // 1.6 nodes per wave at xi1
    grid.n = 600;
    CHECK_NOTHROW(assemble(traj, r.params, grid));
}

TEST_CASE("first profile: doublet, outputs and kernel equivalence")
{
    const RootPoint& r = first_root();
    StabilityOptions o;
    const Spectrum s = analyze_stability(r.params, r.mu.real(), o);
    CHECK(std::abs(s.lambda_zero) <= 1e-3);
    CHECK(std::abs(s.lambda_two_kappa - 2.0 * r.params.kappa) <= 1e-3);
    CHECK(s.separation_zero > 10.0 * std::abs(s.lambda_zero));
    CHECK(s.separation_two_kappa > 10.0 * std::abs(s.lambda_two_kappa - 2.0 * r.params.kappa));
    for (const cplx& l : s.eigenvalues) {
        if (std::abs(l.imag()) <= 1e-12) continue;
        double nearest = 1e300;
        for (const cplx& m : s.eigenvalues) nearest = std::min(nearest, std::abs(m - std::conj(l)));
        CHECK(nearest <= 1e-9 * std::max(1.0, std::abs(l)));
    }

    std::ostringstream csv;
    write_spectrum_csv(csv, s);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "re,im,is_doublet");
    int rows = 0, flagged = 0;
    while (std::getline(lines, line)) {
        ++rows;
        if (line.back() == '1') ++flagged;
    }
    CHECK(rows == static_cast<int>(s.eigenvalues.size()));
    CHECK(flagged == 2);

    const auto j = nlohmann::json::parse(verdict_json(s, 0.0, r.params.kappa, r.mu.real()));
    for (const char* key : {"eps", "kappa", "mu", "lambda0_re", "lambda0_im", "lambda2k_re", "lambda2k_im",
                            "max_real_rest", "verdict"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["kappa"].get<double>() == r.params.kappa);

    if (const kernels::Table* simd = kernels::avx2()) {
        const Matrix m = assemble(trajectory(r), r.params, o.grid);
        auto a = eigenvalues(m, kernels::scalar());
        auto b = eigenvalues(m, *simd);
        const auto order = [](cplx x, cplx y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); };
        std::sort(a.begin(), a.end(), order);
        std::sort(b.begin(), b.end(), order);
        REQUIRE(a.size() == b.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("verdicts along the first two d = 1 branches")
{
    const RootPoint j1 = seed_root(1, 2.3, 1.23204, 0.85311);
    const RootPoint j2 = seed_root(1, 2.3, 0.78308, 0.49323);
    const auto verdict = [](const RootPoint& r) {
        return analyze_stability(r.params, r.mu.real()).verdict;
    };
    CHECK(verdict(root_on_branch(j1, 0.03, Part::Upper)) == Verdict::Stable);
    CHECK(verdict(root_on_branch(j2, 0.03, Part::Upper)) == Verdict::Unstable);
    CHECK(verdict(root_on_branch(j2, 0.03, Part::Lower)) == Verdict::Unstable);
}
