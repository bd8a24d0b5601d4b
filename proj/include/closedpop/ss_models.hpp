#pragma once

#include <span>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/model_spec.hpp"

namespace closedpop {

// Natural-scale parameters for the single-state likelihoods. Which fields are
// meaningful depends on the variant.
struct SsParams {
    SsVariant variant = SsVariant::M0;
    std::vector<double> p;  // M0/Mb: one entry; Mt: per occasion; Mh(k): components, ascending
    double c = 0.0;         // Mb recapture probability
    double beta = 0.0;      // Mb: logit c = logit p + beta
    std::vector<double> w;  // Mh(k) component weights, on the simplex
    double w_point = 0.0;   // Mh(b-be): weight on the point-mass component
    double p0 = 0.0;        // Mh(b-be): point-mass capture probability
    double a = 1.0;         // beta shapes
    double b = 1.0;
    double N = 0.0;
};

// All single-state likelihoods multiply probabilities of specific histories
// (no binomial coefficients), so they are AIC-comparable with each other and
// with the multi-state likelihood.
double loglik_m0(const SufficientStats& stats, double p, double N);
double loglik_mt(const SufficientStats& stats, std::span<const double> p, double N);
double loglik_mb(const SufficientStats& stats, double p, double c, double N);
double loglik_mh_finite(const SufficientStats& stats, std::span<const double> weights,
                        std::span<const double> comps, double N);
double loglik_mh_beta(const SufficientStats& stats, double a, double b, double N);
double loglik_mh_pointbeta(const SufficientStats& stats, double w, double p0, double a, double b,
                           double N);

// Probability of a specific history with j captures under the beta mixture:
// B(a+j, b+T-j) / B(a, b), evaluated through log-gamma.
double beta_binom_history_prob(int j, int T, double a, double b);

double ss_loglik(const SufficientStats& stats, const SsParams& params);
// Probability an individual is never captured, pi_0.
double ss_never_captured(const SsParams& params, int T);
// Conditional form: N term dropped, each history divided by (1 - pi_0).
double ss_conditional_loglik(const SufficientStats& stats, const SsParams& params);

int ss_working_dim(const ModelSpec& spec, int T);

// Working -> natural. Layouts:
//   M0        [logit p, nu]
//   Mt        [logit p_1 .. logit p_T, nu]
//   Mb        [logit p, beta, nu]
//   Mh(k)     [u_1 .. u_k, mlogit w_1 .. w_{k-1}, nu] where logit p_1 = u_1 and
//             logit p_g = logit p_{g-1} + exp(u_g); components come out ascending
//   Mh(be)    [log a, log b, nu]
//   Mh(b-be)  [logit w, logit p0, log a, log b, nu]
SsParams ss_apply_constraints(std::span<const double> working, const ModelSpec& spec, int T, int n);
std::vector<double> ss_to_working(const SsParams& params, const ModelSpec& spec, int n);

}  // namespace closedpop
