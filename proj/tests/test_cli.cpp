#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

#include "blowup/commands.hpp"
#include "blowup/config.hpp"
#include "blowup/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace blowup;

namespace {

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("blowup_cli_" + name)).string();
}

}  // namespace

TEST_CASE("config round trip")
{
    RunConfig a;
    parse_config(a, "# comment\nd = 3\nsigma = 1\neps = 0.1\nxi1 = 42.5\nscheme = central2\n"
                    "closure = robin\ntol = 1e-9\n\nbranch_file = b.jsonl\n");
    CHECK(a.d == 3);
    CHECK(a.sigma == 1.0);
    CHECK(a.xi1 == 42.5);
    CHECK(a.scheme == Scheme::Central2);
    CHECK(a.closure == Closure::Robin);
    const std::string text = format_config(a);
    RunConfig b;
    parse_config(b, text);
    CHECK(format_config(b) == text);
    CHECK(b.tol == a.tol);
    CHECK(b.branch_file == "b.jsonl");

    RunConfig c;
    c.eps = 0.1 + 0.2;  // not representable in a short decimal
    RunConfig e;
    parse_config(e, format_config(c));
    CHECK(e.eps == c.eps);
}

TEST_CASE("config errors carry the line")
{
    RunConfig c;
    try {
        parse_config(c, "d = 1\n\nsigma = two\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    try {
        parse_config(c, "d = 1\ncolour = red\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_config(c, "just words\n"), ParseError);
    CHECK_THROWS_AS(set_config_value(c, "nope", "1"), std::invalid_argument);
}

TEST_CASE("solve reports both normalizations")
{
    RunConfig cfg;
    std::ostringstream out;
    CHECK(cmd_solve(cfg, {1.23, 0.85}, out) == kExitOk);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(std::abs(j["mu"].get<double>() - 1.23204) < 2e-3);
    CHECK(std::abs(j["kappa"].get<double>() - 0.85311) < 2e-3);
    CHECK(j["j"].get<int>() == 1);
    CHECK(j["residual"].get<double>() < 1e-8);
    // Q(0) = 1 chart of the same profile: kappa / omega is invariant
    const double mu = j["mu"].get<double>(), kappa = j["kappa"].get<double>();
    const double omega_q1 = j["fix_amplitude"]["omega"].get<double>();
    CHECK(std::abs(omega_q1 - std::pow(mu, -2.0 * cfg.sigma)) < 1e-9 * omega_q1);
    CHECK(std::abs(j["fix_amplitude"]["kappa"].get<double>() - kappa * omega_q1) < 1e-9);
}

TEST_CASE("exit codes")
{
    std::ostringstream err;
    CHECK(run_guarded([] { return static_cast<int>(parse_numbers("1.2,x", 2).size()); }, err) == kExitUsage);
    CHECK(run_guarded([] { return static_cast<int>(parse_numbers("1.2", 2).size()); }, err) == kExitUsage);
    CHECK(run_guarded([] { throw ParseError("bad", 4); return 0; }, err) == kExitUsage);
    CHECK(run_guarded([] { throw ConvergenceError("no"); return 0; }, err) == kExitNumerical);
    CHECK(run_guarded([] { return kExitOk; }, err) == kExitOk);
    CHECK(err.str().find("line 4") != std::string::npos);

    RunConfig bad;
    bad.d = 4;
    std::ostringstream out;
    CHECK(run_guarded([&] { return cmd_solve(bad, {1.0, 1.0}, out); }, err) != kExitOk);
}

TEST_CASE("kummer-check passes")
{
    std::ostringstream out;
    CHECK(cmd_kummer_check(out) == kExitOk);
    CHECK(out.str().find("FAIL") == std::string::npos);
}

TEST_CASE("tables detect a shifted reference value")
{
    RunConfig cfg;
    TablesOptions o;
    o.rows_table1 = 1;
    o.rows_table2 = 0;
    std::ostringstream good;
    CHECK(cmd_tables(cfg, o, reference_rows(), good) == kExitOk);

    auto refs = reference_rows();
    for (auto& r : refs) {
        if (r.table == 1 && r.j == 1) r.kappa += 0.01;
    }
    std::ostringstream bad;
    CHECK(cmd_tables(cfg, o, refs, bad) == kExitNumerical);
}

TEST_CASE("branch stall writes the partial file and resume extends it")
{
    RunConfig cfg;
    cfg.branch_file = temp_path("branch.jsonl");
    std::ostringstream out, err;

    BranchCommand stall;
    stall.seed = std::array<double, 2>{1.23204, 0.85311};
    stall.continuation.max_corrector_iter = 0;
    CHECK(run_guarded([&] { return cmd_branch(cfg, stall, out); }, err) == kExitNumerical);
    const std::size_t partial = load_branch(cfg.branch_file).points.size();
    CHECK(partial == 1);

    BranchCommand resume;
    resume.resume = cfg.branch_file;
    resume.continuation.max_points = 5;
    CHECK(cmd_branch(cfg, resume, out) == kExitOk);
    const Branch b = load_branch(cfg.branch_file);
    CHECK(b.points.size() == 5);
    CHECK(b.index_j == 1);
    std::remove(cfg.branch_file.c_str());
}

TEST_CASE("scan output does not depend on the worker count")
{
    RunConfig cfg;
    ScanOptions o;
    o.rect = {1.1, 1.4, 0.75, 0.95};
    o.depth = 6;
    o.per_side = 32;
    o.forced_depth = 0;
    std::ostringstream a, sa, b, sb;
    o.jobs = 1;
    CHECK(cmd_scan(cfg, o, a, sa) == kExitOk);
    o.jobs = 3;
    CHECK(cmd_scan(cfg, o, b, sb) == kExitOk);
    CHECK(a.str() == b.str());
    CHECK(sa.str() == sb.str());
    CHECK(a.str().find("mu,kappa,residual,j\n") == 0);
    CHECK(a.str().find(",1\n") != std::string::npos);  // the first profile lies inside

    o.rect = {1.4, 1.1, 0.75, 0.95};
    std::ostringstream err;
    CHECK(run_guarded([&] { return cmd_scan(cfg, o, a, sa); }, err) == kExitUsage);
}
