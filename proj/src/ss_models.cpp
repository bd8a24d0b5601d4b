#include "closedpop/ss_models.hpp"

#include <cmath>
#include <stdexcept>

#include "closedpop/mathutil.hpp"

namespace closedpop {

namespace {

double n_term(const SufficientStats& stats, double N, double pi0) {
    if (N < stats.n)
        throw std::invalid_argument("population size below the number of observed individuals");
    double ll = log_falling_factorial(N, stats.n);
    if (N > stats.n) ll += (N - stats.n) * safe_log(pi0);
    return ll;
}

// Mixture probability of a specific history with j captures.
double mix_history_prob(int j, int T, std::span<const double> weights,
                        std::span<const double> comps) {
    double acc = 0.0;
    for (std::size_t g = 0; g < weights.size(); ++g)
        acc += weights[g] * std::pow(comps[g], j) * std::pow(1.0 - comps[g], T - j);
    return acc;
}

double pointbeta_history_prob(int j, int T, double w, double p0, double a, double b) {
    return w * std::pow(p0, j) * std::pow(1.0 - p0, T - j) +
           (1.0 - w) * beta_binom_history_prob(j, T, a, b);
}

}  // namespace

double beta_binom_history_prob(int j, int T, double a, double b) {
    return std::exp(log_beta(a + j, b + T - j) - log_beta(a, b));
}

double loglik_m0(const SufficientStats& stats, double p, double N) {
    const int T = stats.T;
    const long long f = stats.single.captures;
    const double pi0 = std::pow(1.0 - p, T);
    return n_term(stats, N, pi0) + f * safe_log(p) +
           (static_cast<long long>(stats.n) * T - f) * safe_log(1.0 - p);
}

double loglik_mt(const SufficientStats& stats, std::span<const double> p, double N) {
    if (static_cast<int>(p.size()) != stats.T)
        throw std::invalid_argument("Mt needs one capture probability per occasion");
    if (N < stats.n)
        throw std::invalid_argument("population size below the number of observed individuals");
    double ll = log_falling_factorial(N, stats.n);
    for (int t = 0; t < stats.T; ++t) {
        const int nt = stats.single.n_t[t];
        if (nt > 0) ll += nt * safe_log(p[t]);
        if (N - nt > 0) ll += (N - nt) * safe_log(1.0 - p[t]);
    }
    return ll;
}

double loglik_mb(const SufficientStats& stats, double p, double c, double N) {
    const int T = stats.T;
    const long long n = stats.n;
    const long long f = stats.single.captures;
    const long long y = stats.single.y;
    if (N < stats.n)
        throw std::invalid_argument("population size below the number of observed individuals");
    double ll = log_falling_factorial(N, stats.n);
    const double miss_pre = (N - n) * static_cast<double>(T) + y;
    if (miss_pre > 0) ll += miss_pre * safe_log(1.0 - p);
    ll += n * safe_log(p);
    const long long recaps = f - n;
    if (recaps > 0) ll += recaps * safe_log(c);
    const long long miss_post = n * T - n - y - recaps;
    if (miss_post > 0) ll += miss_post * safe_log(1.0 - c);
    return ll;
}

double loglik_mh_finite(const SufficientStats& stats, std::span<const double> weights,
                        std::span<const double> comps, double N) {
    if (weights.empty() || weights.size() != comps.size())
        throw std::invalid_argument("mixture needs matching weights and components");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-8) throw std::invalid_argument("mixture weights must sum to 1");

    const int T = stats.T;
    double pi0 = 0.0;
    for (std::size_t g = 0; g < weights.size(); ++g)
        pi0 += weights[g] * std::pow(1.0 - comps[g], T);
    double ll = n_term(stats, N, pi0);
    for (int j = 1; j <= T; ++j)
        if (int fj = stats.single.f[j - 1]; fj > 0)
            ll += fj * safe_log(mix_history_prob(j, T, weights, comps));
    return ll;
}

double loglik_mh_beta(const SufficientStats& stats, double a, double b, double N) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta shapes must be positive");
    const int T = stats.T;
    double ll = n_term(stats, N, beta_binom_history_prob(0, T, a, b));
    for (int j = 1; j <= T; ++j)
        if (int fj = stats.single.f[j - 1]; fj > 0)
            ll += fj * safe_log(beta_binom_history_prob(j, T, a, b));
    return ll;
}

double loglik_mh_pointbeta(const SufficientStats& stats, double w, double p0, double a, double b,
                           double N) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta shapes must be positive");
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("point-mass weight outside [0,1]");
    const int T = stats.T;
    double ll = n_term(stats, N, pointbeta_history_prob(0, T, w, p0, a, b));
    for (int j = 1; j <= T; ++j)
        if (int fj = stats.single.f[j - 1]; fj > 0)
            ll += fj * safe_log(pointbeta_history_prob(j, T, w, p0, a, b));
    return ll;
}

double ss_never_captured(const SsParams& params, int T) {
    switch (params.variant) {
        case SsVariant::M0:
        case SsVariant::Mb:
            return std::pow(1.0 - params.p[0], T);
        case SsVariant::Mt: {
            double acc = 1.0;
            for (int t = 0; t < T; ++t) acc *= 1.0 - params.p[t];
            return acc;
        }
        case SsVariant::MhFinite: {
            double acc = 0.0;
            for (std::size_t g = 0; g < params.w.size(); ++g)
                acc += params.w[g] * std::pow(1.0 - params.p[g], T);
            return acc;
        }
        case SsVariant::MhBeta:
            return beta_binom_history_prob(0, T, params.a, params.b);
        case SsVariant::MhPointBeta:
            return pointbeta_history_prob(0, T, params.w_point, params.p0, params.a, params.b);
    }
    return 0.0;
}

double ss_loglik(const SufficientStats& stats, const SsParams& params) {
    switch (params.variant) {
        case SsVariant::M0: return loglik_m0(stats, params.p[0], params.N);
        case SsVariant::Mt: return loglik_mt(stats, params.p, params.N);
        case SsVariant::Mb: return loglik_mb(stats, params.p[0], params.c, params.N);
        case SsVariant::MhFinite: return loglik_mh_finite(stats, params.w, params.p, params.N);
        case SsVariant::MhBeta: return loglik_mh_beta(stats, params.a, params.b, params.N);
        case SsVariant::MhPointBeta:
            return loglik_mh_pointbeta(stats, params.w_point, params.p0, params.a, params.b,
                                       params.N);
    }
    throw std::logic_error("unhandled variant");
}

double ss_conditional_loglik(const SufficientStats& stats, const SsParams& params) {
    // Reuse the full likelihood at N = n (its N term vanishes: the falling
    // factorial is log Gamma(n+1)/Gamma(1) ... not zero; subtract it instead).
    SsParams at_n = params;
    at_n.N = stats.n;
    const double full = ss_loglik(stats, at_n);
    const double lff = log_falling_factorial(static_cast<double>(stats.n), stats.n);
    const double pi0 = ss_never_captured(params, stats.T);
    return full - lff - stats.n * safe_log(1.0 - pi0);
}

int ss_working_dim(const ModelSpec& spec, int T) {
    switch (spec.variant) {
        case SsVariant::M0: return 2;
        case SsVariant::Mt: return T + 1;
        case SsVariant::Mb: return 3;
        case SsVariant::MhFinite: return 2 * spec.mixture_k;
        case SsVariant::MhBeta: return 3;
        case SsVariant::MhPointBeta: return 5;
    }
    throw std::logic_error("unhandled variant");
}

SsParams ss_apply_constraints(std::span<const double> working, const ModelSpec& spec, int T,
                              int n) {
    if (spec.multi_state) throw std::invalid_argument("spec is not single-state");
    if (static_cast<int>(working.size()) != ss_working_dim(spec, T))
        throw std::invalid_argument("working vector has length " + std::to_string(working.size()) +
                                    ", spec needs " + std::to_string(ss_working_dim(spec, T)));
    SsParams params;
    params.variant = spec.variant;
    std::size_t at = 0;
    switch (spec.variant) {
        case SsVariant::M0:
            params.p = {invlogit(working[at++])};
            break;
        case SsVariant::Mt:
            params.p.resize(T);
            for (int t = 0; t < T; ++t) params.p[t] = invlogit(working[at++]);
            break;
        case SsVariant::Mb: {
            const double lp = working[at++];
            params.beta = working[at++];
            params.p = {invlogit(lp)};
            params.c = invlogit(lp + params.beta);
            break;
        }
        case SsVariant::MhFinite: {
            const int k = spec.mixture_k;
            // Increasing logits keep the component labels ordered.
            std::vector<double> lp(k);
            lp[0] = working[at++];
            for (int g = 1; g < k; ++g) lp[g] = lp[g - 1] + std::exp(working[at++]);
            params.p.resize(k);
            for (int g = 0; g < k; ++g) params.p[g] = invlogit(lp[g]);
            std::vector<double> wrow(working.begin() + at, working.begin() + at + (k - 1));
            at += k - 1;
            params.w = mlogit_expand(wrow);
            break;
        }
        case SsVariant::MhBeta:
            params.a = std::exp(working[at++]);
            params.b = std::exp(working[at++]);
            break;
        case SsVariant::MhPointBeta:
            params.w_point = invlogit(working[at++]);
            params.p0 = invlogit(working[at++]);
            params.a = std::exp(working[at++]);
            params.b = std::exp(working[at++]);
            break;
    }
    params.N = n + std::exp(working[at++]);
    return params;
}

std::vector<double> ss_to_working(const SsParams& params, const ModelSpec& spec, int n) {
    std::vector<double> working;
    switch (spec.variant) {
        case SsVariant::M0:
            working.push_back(logit(params.p[0]));
            break;
        case SsVariant::Mt:
            for (double p : params.p) working.push_back(logit(p));
            break;
        case SsVariant::Mb:
            working.push_back(logit(params.p[0]));
            working.push_back(logit(params.c) - logit(params.p[0]));
            break;
        case SsVariant::MhFinite: {
            working.push_back(logit(params.p[0]));
            for (std::size_t g = 1; g < params.p.size(); ++g)
                working.push_back(std::log(logit(params.p[g]) - logit(params.p[g - 1])));
            for (double w : mlogit_collapse(params.w)) working.push_back(w);
            break;
        }
        case SsVariant::MhBeta:
            working.push_back(std::log(params.a));
            working.push_back(std::log(params.b));
            break;
        case SsVariant::MhPointBeta:
            working.push_back(logit(params.w_point));
            working.push_back(logit(params.p0));
            working.push_back(std::log(params.a));
            working.push_back(std::log(params.b));
            break;
    }
    working.push_back(std::log(params.N - n));
    return working;
}

}  // namespace closedpop
