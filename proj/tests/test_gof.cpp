#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "closedpop/gof.hpp"
#include "closedpop/simulate.hpp"
#include "oracles.hpp"

using namespace closedpop;
namespace oracle = closedpop::testing;

namespace {

FitResult synthetic_ms_fit(const SufficientStats& stats, const ModelSpec& spec,
                           const std::vector<double>& working) {
    FitResult fit;
    fit.spec = spec;
    fit.approach = Approach::Unconditional;
    fit.T = stats.T;
    fit.n = stats.n;
    fit.working = working;
    fit.loglik = eval_loglik(stats, spec, working);
    fit.n_free = static_cast<int>(working.size());
    fit.rho_hat = eval_rho(stats, spec, working);
    fit.N_hat = stats.n + std::exp(working.back());
    fit.converged = true;
    return fit;
}

}  // namespace

TEST_CASE("observed equal to expected gives a zero statistic and p-value one") {
    std::vector<GofCell> cells;
    for (int i = 0; i < 8; ++i)
        cells.push_back({"first", "cell" + std::to_string(i), 4.0 + i, 4.0 + i, 0.0});
    const GofReport report = pearson_from_cells(cells, 1, 2);
    CHECK(report.X2 == doctest::Approx(0.0).epsilon(1e-15));
    REQUIRE(report.df == 8 - 1 - 2);
    REQUIRE(report.p_value.has_value());
    CHECK(*report.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("contributions are (O-E)^2/E and moving mass off proportion raises X2") {
    std::vector<GofCell> even = {{"c", "a", 10.0, 12.0, 0.0}, {"c", "b", 14.0, 12.0, 0.0}};
    const GofReport r1 = pearson_from_cells(even, 1, 0);
    CHECK(r1.X2 == doctest::Approx(4.0 / 12.0 + 4.0 / 12.0).epsilon(1e-12));

    std::vector<GofCell> further = {{"c", "a", 8.0, 12.0, 0.0}, {"c", "b", 16.0, 12.0, 0.0}};
    const GofReport r2 = pearson_from_cells(further, 1, 0);
    CHECK(r2.X2 > r1.X2);
    for (const GofCell& cell : r2.cells)
        CHECK(cell.contribution ==
              doctest::Approx((cell.observed - cell.expected) * (cell.observed - cell.expected) /
                              cell.expected)
                  .epsilon(1e-12));
}

TEST_CASE("zero-probability cell with observations makes the statistic infinite") {
    std::vector<GofCell> cells = {{"c", "a", 3.0, 0.0, 0.0},
                                  {"c", "b", 5.0, 5.0, 0.0},
                                  {"c", "d", 7.0, 7.0, 0.0},
                                  {"c", "e", 6.0, 6.0, 0.0}};
    const GofReport report = pearson_from_cells(cells, 1, 0);
    CHECK(std::isinf(report.X2));
    CHECK(report.degenerate);
    REQUIRE(report.p_value.has_value());
    CHECK(*report.p_value == 0.0);
    CHECK(report.note.find("zero-probability") != std::string::npos);
}

TEST_CASE("non-positive degrees of freedom suppress the p-value") {
    std::vector<GofCell> cells = {{"c", "a", 5.0, 5.0, 0.0}, {"c", "b", 7.0, 7.0, 0.0}};
    const GofReport report = pearson_from_cells(cells, 1, 2);
    CHECK(report.df <= 0);
    CHECK_FALSE(report.p_value.has_value());
    CHECK(report.note.find("df") != std::string::npos);
}

TEST_CASE("small expected counts are flagged, never pooled") {
    std::vector<GofCell> cells = {{"c", "a", 2.0, 2.5, 0.0},
                                  {"c", "b", 30.0, 29.5, 0.0},
                                  {"c", "d", 4.0, 4.0, 0.0},
                                  {"c", "e", 8.0, 8.0, 0.0}};
    const GofReport report = pearson_from_cells(cells, 1, 1);
    CHECK(report.small_cells == 2);
    CHECK(report.cells.size() == 4);
    CHECK(report.note.find("expected < 5") != std::string::npos);
}

TEST_CASE("cell expectations sum to their conditioning totals") {
    const Scenario sc = preset_scenario("lo2");
    const Dataset d = simulate_dataset(sc, 19);
    const SufficientStats stats = sufficient_stats(d);
    const FitResult fit = fit_model(stats, parse_model_spec("Mh^2"));
    REQUIRE(fit.converged);

    const GofReport report = pearson_gof(stats, fit);

    std::map<std::string, double> exp_sum, obs_sum;
    for (const GofCell& cell : report.cells) {
        exp_sum[cell.component] += cell.expected;
        obs_sum[cell.component] += cell.observed;
    }

    // First-capture component: both sides total N_hat.
    REQUIRE(exp_sum.count("first"));
    CHECK(exp_sum["first"] == doctest::Approx(fit.N_hat).epsilon(1e-8));
    CHECK(obs_sum["first"] == doctest::Approx(fit.N_hat).epsilon(1e-8));

    // Recapture components: both sides total the individuals at risk.
    for (const auto& [component, total] : exp_sum) {
        if (component == "first") continue;
        CHECK(total == doctest::Approx(obs_sum[component]).epsilon(1e-8));
    }

    CHECK(report.n_components >= 1);
    CHECK(report.X2 >= 0.0);
}

TEST_CASE("goodness of fit is invariant to state relabelling") {
    const Scenario sc = preset_scenario("lo2");
    const Dataset d = simulate_dataset(sc, 23);
    Dataset d_perm = d;
    for (EncounterHistory& h : d_perm.histories)
        for (int& e : h.entries)
            if (e > 0) e = 3 - e;

    const SufficientStats stats = sufficient_stats(d);
    const SufficientStats stats_perm = sufficient_stats(d_perm);
    const ModelSpec spec = parse_model_spec("Mh^2");

    // The same parameter point, expressed in both labellings.
    std::vector<double> w(working_dim(spec, stats.T));
    std::mt19937_64 rng(4);
    for (double& x : w) x = oracle::urange(rng, -0.8, 0.8);
    const FitResult fit = synthetic_ms_fit(stats, spec, w);

    MsParams params = apply_constraints(w, spec, stats.T, stats.n);
    MsParams flipped = params;
    for (int t = 0; t < stats.T; ++t) {
        flipped.p(t, 0) = params.p(t, 1);
        flipped.p(t, 1) = params.p(t, 0);
        flipped.c(t, 0) = params.c(t, 1);
        flipped.c(t, 1) = params.c(t, 0);
    }
    for (std::size_t m = 0; m < params.psi.size(); ++m)
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s) flipped.psi[m](r, s) = params.psi[m](1 - r, 1 - s);
    flipped.alpha = {params.alpha[1], params.alpha[0]};
    const FitResult fit_perm =
        synthetic_ms_fit(stats_perm, spec, ms_to_working(flipped, spec, stats_perm.n));

    const GofReport a = pearson_gof(stats, fit);
    const GofReport b = pearson_gof(stats_perm, fit_perm);
    CHECK(a.X2 == doctest::Approx(b.X2).epsilon(1e-8));
    CHECK(a.df == b.df);
}

TEST_CASE("single-state fits are assessed on state-collapsed data") {
    const Scenario sc = preset_scenario("lo2");
    const Dataset d = simulate_dataset(sc, 29);
    const SufficientStats stats = sufficient_stats(d);

    const FitResult fit = fit_model(stats, parse_model_spec("M0"));
    REQUIRE(fit.converged);
    const GofReport report = pearson_gof(stats, fit);
    CHECK(report.cells.size() > 0);
    CHECK(std::isfinite(report.X2));

    // Cell ids refer to the collapsed single state only.
    for (const GofCell& cell : report.cells)
        CHECK(cell.cell.find("r=2") == std::string::npos);
}

TEST_CASE("support matrix: mixtures are out, everything else is in") {
    CHECK(gof_supported(parse_model_spec("Mh^2")));
    CHECK(gof_supported(parse_model_spec("M0^3")));
    CHECK(gof_supported(parse_model_spec("M0")));
    CHECK(gof_supported(parse_model_spec("Mt")));
    CHECK(gof_supported(parse_model_spec("Mb")));
    CHECK_FALSE(gof_supported(parse_model_spec("Mh2")));
    CHECK_FALSE(gof_supported(parse_model_spec("Mhbe")));
    CHECK_FALSE(gof_supported(parse_model_spec("Mhb-be")));

    const Scenario sc = preset_scenario("lo2");
    const Dataset d = simulate_dataset(sc, 31);
    const SufficientStats stats = sufficient_stats(d);
    const FitResult fit = fit_model(stats, parse_model_spec("Mh2"));
    CHECK_THROWS(pearson_gof(stats, fit));
}

TEST_CASE("csv rendering carries the exact header and one row per cell") {
    std::vector<GofCell> cells = {{"first", "t=1,r=1", 5.0, 4.5, 0.0},
                                  {"first", "never", 3.0, 3.5, 0.0}};
    const GofReport report = pearson_from_cells(cells, 1, 0);
    const std::string csv = gof_csv(report);

    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "component,cell-id,observed,expected,contribution");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    CHECK(csv.find("t=1,r=1") != std::string::npos);
}
