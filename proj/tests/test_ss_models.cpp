#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/mathutil.hpp"
#include "closedpop/ss_models.hpp"
#include "oracles.hpp"

using namespace closedpop;
namespace oracle = closedpop::testing;

namespace {

using HistoryProb = std::function<double(const std::vector<int>&)>;

double perhistory_loglik(const Dataset& d, const HistoryProb& prob, double pi0, double N) {
    const int n = d.n();
    double ll = std::lgamma(N + 1.0) - std::lgamma(N - n + 1.0);
    if (N > n) ll += (N - n) * std::log(pi0);
    for (const EncounterHistory& h : d.histories) ll += std::log(prob(h.entries));
    return ll;
}

}  // namespace

TEST_CASE("worked constant-probability value: one animal caught twice") {
    const Dataset d = parse_dataset("1 1\n", 1);
    const SufficientStats stats = sufficient_stats(d);
    CHECK(loglik_m0(stats, 0.5, 1.0) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("constant-probability likelihood matches the per-history product") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int T = 2 + static_cast<int>(oracle::urand(rng) * 5);
        const Dataset d = oracle::random_dataset(rng, T, 1, 40);
        const SufficientStats stats = sufficient_stats(d);
        const double p = oracle::urange(rng, 0.05, 0.95);
        const double N = d.n() + oracle::urange(rng, 0.0, 30.0);
        const double expected = perhistory_loglik(
            d, [&](const std::vector<int>& h) { return oracle::ss_prob_m0(h, p); },
            std::pow(1.0 - p, T), N);
        CHECK(loglik_m0(stats, p, N) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("time-varying likelihood: equal probabilities collapse, worked value holds") {
    const Dataset d = parse_dataset("1 0\n0 1\n", 1);
    const SufficientStats stats = sufficient_stats(d);
    const std::vector<double> p = {0.5, 0.5};
    CHECK(loglik_mt(stats, p, 2.0) == doctest::Approx(std::log(0.25 * 0.25 * 2.0)).epsilon(1e-12));

    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 10; ++rep) {
        const int T = 2 + static_cast<int>(oracle::urand(rng) * 5);
        const Dataset data = oracle::random_dataset(rng, T, 1, 40);
        const SufficientStats s = sufficient_stats(data);
        const double q = oracle::urange(rng, 0.1, 0.9);
        const double N = data.n() + oracle::urange(rng, 0.0, 20.0);
        const std::vector<double> tied(T, q);
        CHECK(loglik_mt(s, tied, N) == doctest::Approx(loglik_m0(s, q, N)).epsilon(1e-12));
    }
}

TEST_CASE("time-varying likelihood matches the per-history product") {
    std::mt19937_64 rng(33);
    for (int rep = 0; rep < 15; ++rep) {
        const int T = 2 + static_cast<int>(oracle::urand(rng) * 5);
        const Dataset d = oracle::random_dataset(rng, T, 1, 40);
        const SufficientStats stats = sufficient_stats(d);
        std::vector<double> p(T);
        for (double& x : p) x = oracle::urange(rng, 0.05, 0.95);
        const double N = d.n() + oracle::urange(rng, 0.0, 30.0);
        double pi0 = 1.0;
        for (double x : p) pi0 *= 1.0 - x;
        const double expected = perhistory_loglik(
            d, [&](const std::vector<int>& h) { return oracle::ss_prob_mt(h, p); }, pi0, N);
        CHECK(loglik_mt(stats, p, N) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("behavioural likelihood: worked value, collapse, and per-history product") {
    const Dataset d = parse_dataset("0 1 1\n", 1);
    const SufficientStats stats = sufficient_stats(d);
    CHECK(loglik_mb(stats, 0.5, 0.5, 1.0) == doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-12));

    std::mt19937_64 rng(34);
    for (int rep = 0; rep < 15; ++rep) {
        const int T = 2 + static_cast<int>(oracle::urand(rng) * 5);
        const Dataset data = oracle::random_dataset(rng, T, 1, 40);
        const SufficientStats s = sufficient_stats(data);
        const double p = oracle::urange(rng, 0.05, 0.95);
        const double c = oracle::urange(rng, 0.05, 0.95);
        const double N = data.n() + oracle::urange(rng, 0.0, 30.0);

        CHECK(loglik_mb(s, p, p, N) == doctest::Approx(loglik_m0(s, p, N)).epsilon(1e-12));

        const double expected = perhistory_loglik(
            data, [&](const std::vector<int>& h) { return oracle::ss_prob_mb(h, p, c); },
            std::pow(1.0 - p, T), N);
        CHECK(loglik_mb(s, p, c, N) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("finite mixture: degenerate cases collapse to the constant model") {
    std::mt19937_64 rng(35);
    const Dataset d = oracle::random_dataset(rng, 5, 1, 30);
    const SufficientStats stats = sufficient_stats(d);
    const double N = d.n() + 7.5;

    const std::vector<double> w1 = {1.0};
    const std::vector<double> p1 = {0.37};
    CHECK(loglik_mh_finite(stats, w1, p1, N) == doctest::Approx(loglik_m0(stats, 0.37, N)).epsilon(1e-12));

    const std::vector<double> w2 = {1.0, 0.0};
    const std::vector<double> p2 = {0.37, 0.8};
    CHECK(loglik_mh_finite(stats, w2, p2, N) == doctest::Approx(loglik_m0(stats, 0.37, N)).epsilon(1e-12));
}

TEST_CASE("finite mixture matches the per-history mixture product") {
    std::mt19937_64 rng(36);
    for (int rep = 0; rep < 15; ++rep) {
        const int T = 2 + static_cast<int>(oracle::urand(rng) * 5);
        const int k = 2 + static_cast<int>(oracle::urand(rng) * 2);
        const Dataset d = oracle::random_dataset(rng, T, 1, 40);
        const SufficientStats stats = sufficient_stats(d);
        const std::vector<double> w = oracle::random_simplex(rng, k);
        std::vector<double> comps(k);
        for (double& x : comps) x = oracle::urange(rng, 0.05, 0.95);
        const double N = d.n() + oracle::urange(rng, 0.0, 30.0);

        double pi0 = 0.0;
        for (int g = 0; g < k; ++g) pi0 += w[g] * std::pow(1.0 - comps[g], T);
        const double expected = perhistory_loglik(
            d, [&](const std::vector<int>& h) { return oracle::ss_prob_mh_finite(h, w, comps); },
            pi0, N);
        CHECK(loglik_mh_finite(stats, w, comps, N) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("beta-mixture history probabilities: uniform case and quadrature oracle") {
    CHECK(beta_binom_history_prob(0, 2, 1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(beta_binom_history_prob(1, 2, 1.0, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    for (const double a : {0.5, 1.0, 2.0, 5.0})
        for (const double b : {0.5, 1.0, 2.0, 5.0})
            for (int T = 2; T <= 6; ++T)
                for (int j = 0; j <= T; ++j) {
                    const double closed = beta_binom_history_prob(j, T, a, b);
                    const double quad = oracle::quad_beta_binom(j, T, a, b);
                    CHECK(closed == doctest::Approx(quad).epsilon(1e-10));
                }
}

TEST_CASE("beta mixture concentrates to the constant model as the shapes grow") {
    std::mt19937_64 rng(37);
    const Dataset d = oracle::random_dataset(rng, 5, 1, 30);
    const SufficientStats stats = sufficient_stats(d);
    const double N = d.n() + 11.0;
    const double concentrated = loglik_mh_beta(stats, 1e6, 1e6, N);
    const double constant = loglik_m0(stats, 0.5, N);
    CHECK(concentrated == doctest::Approx(constant).epsilon(1e-6));
}

TEST_CASE("point-mass/beta mixture: both degenerate edges collapse") {
    std::mt19937_64 rng(38);
    const Dataset d = oracle::random_dataset(rng, 5, 1, 30);
    const SufficientStats stats = sufficient_stats(d);
    const double N = d.n() + 4.0;

    CHECK(loglik_mh_pointbeta(stats, 1.0, 0.42, 2.0, 3.0, N) ==
          doctest::Approx(loglik_m0(stats, 0.42, N)).epsilon(1e-12));
    CHECK(loglik_mh_pointbeta(stats, 0.0, 0.42, 2.0, 3.0, N) ==
          doctest::Approx(loglik_mh_beta(stats, 2.0, 3.0, N)).epsilon(1e-12));

    // Interior weights mix the two component likelihoods history by history.
    const double w = 0.3, p0 = 0.6, a = 1.5, b = 2.5;
    const int T = stats.T;
    double pi0 = w * std::pow(1.0 - p0, T) + (1.0 - w) * beta_binom_history_prob(0, T, a, b);
    const double expected = perhistory_loglik(
        d,
        [&](const std::vector<int>& h) {
            int j = 0;
            for (int e : h) j += e > 0 ? 1 : 0;
            return w * oracle::ss_prob_m0(h, p0) + (1.0 - w) * beta_binom_history_prob(j, T, a, b);
        },
        pi0, N);
    CHECK(loglik_mh_pointbeta(stats, w, p0, a, b, N) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("dispatcher, never-captured probability, and conditional form agree") {
    std::mt19937_64 rng(39);
    const int T = 5;
    const Dataset d = oracle::random_dataset(rng, T, 1, 35);
    const SufficientStats stats = sufficient_stats(d);
    const int n = d.n();

    SsParams mb;
    mb.variant = SsVariant::Mb;
    mb.p = {0.3};
    mb.c = 0.55;
    mb.N = n + 9.0;
    CHECK(ss_loglik(stats, mb) == doctest::Approx(loglik_mb(stats, 0.3, 0.55, mb.N)).epsilon(1e-12));
    CHECK(ss_never_captured(mb, T) == doctest::Approx(std::pow(0.7, T)).epsilon(1e-12));

    SsParams mh;
    mh.variant = SsVariant::MhFinite;
    mh.p = {0.2, 0.6};
    mh.w = {0.4, 0.6};
    mh.N = n + 9.0;
    const double pi0 = 0.4 * std::pow(0.8, T) + 0.6 * std::pow(0.4, T);
    CHECK(ss_never_captured(mh, T) == doctest::Approx(pi0).epsilon(1e-12));

    const double cond = ss_conditional_loglik(stats, mh);
    double expected = 0.0;
    for (const EncounterHistory& h : d.histories)
        expected += std::log(oracle::ss_prob_mh_finite(h.entries, mh.w, mh.p) / (1.0 - pi0));
    CHECK(cond == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("working-scale round trips for every single-state variant") {
    std::mt19937_64 rng(40);
    for (const char* name : {"M0", "Mt", "Mb", "Mh2", "Mh3", "Mhbe", "Mhb-be"}) {
        const ModelSpec spec = parse_model_spec(name);
        const int T = 5, n = 18;
        const int dim = ss_working_dim(spec, T);
        std::vector<double> w(dim);
        for (double& x : w) x = oracle::urange(rng, -1.2, 1.2);

        const SsParams params = ss_apply_constraints(w, spec, T, n);
        const std::vector<double> back = ss_to_working(params, spec, n);
        REQUIRE(back.size() == w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(back[i] == doctest::Approx(w[i]).epsilon(1e-9));

        CHECK(params.N > n);
    }
}

TEST_CASE("finite-mixture working layout produces ascending components") {
    std::mt19937_64 rng(41);
    const ModelSpec spec = parse_model_spec("Mh3");
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> w(ss_working_dim(spec, 5));
        for (double& x : w) x = oracle::urange(rng, -2.0, 2.0);
        const SsParams params = ss_apply_constraints(w, spec, 5, 10);
        REQUIRE(params.p.size() == 3);
        CHECK(std::is_sorted(params.p.begin(), params.p.end()));
        double wsum = 0.0;
        for (double x : params.w) wsum += x;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single-state working dimensions") {
    const int T = 6;
    CHECK(ss_working_dim(parse_model_spec("M0"), T) == 2);
    CHECK(ss_working_dim(parse_model_spec("Mt"), T) == T + 1);
    CHECK(ss_working_dim(parse_model_spec("Mb"), T) == 3);
    CHECK(ss_working_dim(parse_model_spec("Mh2"), T) == 4);
    CHECK(ss_working_dim(parse_model_spec("Mh3"), T) == 6);
    CHECK(ss_working_dim(parse_model_spec("Mhbe"), T) == 3);
    CHECK(ss_working_dim(parse_model_spec("Mhb-be"), T) == 5);
}
