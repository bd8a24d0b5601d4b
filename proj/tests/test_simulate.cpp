#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "closedpop/simulate.hpp"
#include "closedpop/ss_models.hpp"
#include "oracles.hpp"

using namespace closedpop;
namespace oracle = closedpop::testing;

namespace {

MsParams truth_params(const Scenario& sc) {
    MsParams params;
    params.T = sc.T;
    params.R = sc.R;
    params.p = Grid2(sc.T, sc.R);
    params.c = Grid2(sc.T, sc.R);
    for (int t = 0; t < sc.T; ++t)
        for (int r = 0; r < sc.R; ++r) {
            params.p(t, r) = sc.p[r];
            params.c(t, r) = sc.c.empty() ? sc.p[r] : sc.c[r];
        }
    params.psi.assign(sc.T - 1, sc.psi[0]);
    if (sc.psi.size() > 1)
        for (int t = 0; t + 1 < sc.T; ++t) params.psi[t] = sc.psi[t];
    params.alpha = sc.alpha;
    params.N = sc.N;
    return params;
}

}  // namespace

TEST_CASE("equal seeds reproduce the dataset byte for byte") {
    const Scenario sc = preset_scenario("lo2");
    const Dataset a = simulate_dataset(sc, 77);
    const Dataset b = simulate_dataset(sc, 77);
    CHECK(format_dataset(a) == format_dataset(b));

    const Dataset c = simulate_dataset(sc, 78);
    CHECK(format_dataset(a) != format_dataset(c));
}

TEST_CASE("certain capture means every individual appears on every occasion") {
    Scenario sc = preset_scenario("lo2");
    sc.p = {1.0, 1.0};
    sc.c.clear();
    const Dataset d = simulate_dataset(sc, 5);
    CHECK(d.n() == sc.N);
    for (const EncounterHistory& h : d.histories)
        for (int e : h.entries) CHECK(e > 0);
}

TEST_CASE("first-capture frequencies agree with the model probabilities") {
    Scenario sc = preset_scenario("lo2");
    sc.N = 10000;
    const Dataset d = simulate_dataset(sc, 123);
    const MsProbs probs = compute_probs(truth_params(sc));

    Grid2 counts(sc.T, sc.R);
    for (const EncounterHistory& h : d.histories) {
        const int t = h.first_capture();
        counts(t, h.entries[t] - 1) += 1.0;
    }

    double x2 = 0.0;
    int cells = 0;
    for (int t = 0; t < sc.T; ++t)
        for (int r = 0; r < sc.R; ++r) {
            const double expected = sc.N * probs.zeta(t, r);
            x2 += (counts(t, r) - expected) * (counts(t, r) - expected) / expected;
            ++cells;
        }
    const double never_obs = sc.N - d.n();
    const double never_exp = sc.N * probs.rho;
    x2 += (never_obs - never_exp) * (never_obs - never_exp) / never_exp;
    ++cells;

    const boost::math::chi_squared dist(cells - 1);
    const double p_value = boost::math::cdf(boost::math::complement(dist, x2));
    CHECK(p_value > 0.001);
}

TEST_CASE("mean sample size across replicates matches N(1 - rho)") {
    const Scenario sc = preset_scenario("lo2");
    const double rho = never_observed_prob(truth_params(sc));

    const int reps = 500;
    std::vector<double> sizes(reps);
    for (int k = 0; k < reps; ++k) sizes[k] = simulate_dataset(sc, 9000 + k).n();

    const double mean = std::accumulate(sizes.begin(), sizes.end(), 0.0) / reps;
    double var = 0.0;
    for (double s : sizes) var += (s - mean) * (s - mean);
    var /= reps - 1;
    const double mc_se = std::sqrt(var / reps);

    CHECK(std::abs(mean - sc.N * (1.0 - rho)) <= 3.0 * mc_se);
}

TEST_CASE("parallel and serial studies produce identical results") {
    Scenario sc = preset_scenario("lo2");
    sc.replicates = 3;
    sc.models = {{parse_model_spec("M0"), Approach::Unconditional, "M0"},
                 {parse_model_spec("Mt"), Approach::Unconditional, "Mt"}};

    const StudySummary parallel = run_study(sc);
    const StudySummary serial = run_study_serial(sc);
    CHECK(study_csv(parallel) == study_csv(serial));
    REQUIRE(parallel.models.size() == 2);
    CHECK(parallel.models[0].requested == 3);
}

TEST_CASE("preset scenarios carry the published generating values") {
    const Scenario lo2 = preset_scenario("lo2");
    CHECK(lo2.N == 100);
    CHECK(lo2.T == 6);
    CHECK(lo2.R == 2);
    CHECK(lo2.alpha == std::vector<double>{0.4, 0.6});
    CHECK(lo2.p == std::vector<double>{0.15, 0.4});
    CHECK(lo2.psi[0](0, 0) == doctest::Approx(0.7));
    CHECK(lo2.psi[0](0, 1) == doctest::Approx(0.3));
    CHECK(lo2.psi[0](1, 0) == doctest::Approx(0.2));
    CHECK(lo2.psi[0](1, 1) == doctest::Approx(0.8));

    const Scenario hi2 = preset_scenario("hi2");
    CHECK(hi2.psi[0](0, 0) == doctest::Approx(0.1));
    CHECK(hi2.psi[0](0, 1) == doctest::Approx(0.9));
    CHECK(hi2.psi[0](1, 0) == doctest::Approx(0.6));

    const Scenario lo3 = preset_scenario("lo3");
    CHECK(lo3.R == 3);
    CHECK(lo3.alpha == std::vector<double>{0.33, 0.40, 0.27});
    CHECK(lo3.p == std::vector<double>{0.15, 0.25, 0.4});
    CHECK(lo3.psi[0](0, 0) == doctest::Approx(0.76));
    CHECK(lo3.psi[0](0, 1) == doctest::Approx(0.12));
    CHECK(lo3.psi[0](2, 2) == doctest::Approx(0.7));

    const Scenario hi3 = preset_scenario("hi3");
    CHECK(hi3.psi[0](0, 0) == doctest::Approx(0.28));
    CHECK(hi3.psi[0](0, 1) == doctest::Approx(0.36));
    CHECK(hi3.psi[0](2, 2) == doctest::Approx(0.1));

    CHECK_THROWS_AS(preset_scenario("lo9"), std::invalid_argument);
}

TEST_CASE("default study models: multi-state pair first, then the competitors") {
    const std::vector<StudyModel> models = default_study_models(2);
    REQUIRE(models.size() == 9);
    CHECK(models[0].spec.name() == "Mh^2");
    CHECK(models[0].approach == Approach::Unconditional);
    CHECK(models[1].spec.name() == "Mh^2");
    CHECK(models[1].approach == Approach::Conditional);
    CHECK(models[1].label != models[0].label);
    CHECK(models[2].spec.name() == "M0");
    CHECK(models.back().spec.name() == "Mh(b-be)");
}

TEST_CASE("state labels can be dropped and a single-state mixture still fits") {
    const Scenario sc = preset_scenario("lo2");
    Dataset d = simulate_dataset(sc, 37);
    for (EncounterHistory& h : d.histories)
        for (int& e : h.entries) e = e > 0 ? 1 : 0;
    d.R = 1;

    const SufficientStats stats = sufficient_stats(d);
    const FitResult fit = fit_model(stats, parse_model_spec("Mh2"));
    CHECK(fit.converged);
    CHECK(std::isfinite(fit.loglik));
    CHECK(fit.N_hat >= stats.n);
}

TEST_CASE("precision ranking orders by interquartile range with sd tiebreak") {
    StudySummary summary;
    ModelSummary tight;
    tight.model = "A";
    tight.requested = 10;
    tight.converged = 10;
    tight.q1_N = 95.0;
    tight.q3_N = 105.0;
    tight.sd_N = 8.0;
    ModelSummary wide = tight;
    wide.model = "B";
    wide.q3_N = 125.0;
    ModelSummary sparse = tight;
    sparse.model = "C";
    sparse.converged = 1;
    summary.models = {wide, tight, sparse};

    const std::vector<PrecisionRow> rows = precision_comparison(summary);
    REQUIRE(rows.size() == 3);
    int rank_a = 0, rank_b = 0;
    bool c_insufficient = false;
    for (const PrecisionRow& row : rows) {
        if (row.model == "A") rank_a = row.rank;
        if (row.model == "B") rank_b = row.rank;
        if (row.model == "C") c_insufficient = row.insufficient;
    }
    CHECK(rank_a < rank_b);
    CHECK(c_insufficient);
}

TEST_CASE("study csv: exact header and full-precision replicate rows") {
    Scenario sc = preset_scenario("lo2");
    sc.replicates = 2;
    sc.models = {{parse_model_spec("M0"), Approach::Unconditional, "M0"}};
    const StudySummary summary = run_study_serial(sc);
    const std::string csv = study_csv(summary);

    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "scenario,replicate,model,param,estimate,converged,boundary");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(summary.rows.size()));
    CHECK(rows >= 2 * 2);  // two replicates, at least N and p per fit
    CHECK(csv.find("lo2") != std::string::npos);
}

TEST_CASE("scenario validation rejects inconsistent generating processes") {
    Scenario sc = preset_scenario("lo2");
    sc.alpha = {0.5};
    CHECK_THROWS_AS(validate_scenario(sc), std::invalid_argument);

    sc = preset_scenario("lo2");
    sc.p = {0.5};
    CHECK_THROWS_AS(validate_scenario(sc), std::invalid_argument);

    sc = preset_scenario("lo2");
    sc.psi[0](0, 0) = 0.9;  // row no longer sums to one
    CHECK_THROWS_AS(validate_scenario(sc), std::invalid_argument);

    sc = preset_scenario("lo2");
    sc.N = 0;
    CHECK_THROWS_AS(validate_scenario(sc), std::invalid_argument);

    sc = preset_scenario("lo2");
    sc.p = {0.15, 1.4};
    CHECK_THROWS_AS(validate_scenario(sc), std::invalid_argument);
}

TEST_CASE("thread cap reports at least one lane") { CHECK(study_threads() >= 1); }
