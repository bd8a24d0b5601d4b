#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/model_spec.hpp"
#include "closedpop/ms_model.hpp"
#include "closedpop/ss_models.hpp"

namespace closedpop {

enum class Approach { Unconditional, Conditional };

// Transformed scale a parameter's confidence interval is built on before
// back-transformation.
enum class Scale { Logit, Log, Identity, PopSize };

struct ParamReport {
    std::string name;
    double estimate = 0.0;
    Scale scale = Scale::Identity;
    std::optional<double> se;  // natural scale, delta method
    std::optional<double> lo;  // 95% interval, transformed scale mapped back
    std::optional<double> hi;
    bool boundary = false;
};

struct FitOptions {
    int starts = 10;          // one neutral start at working zero plus random draws
    std::uint64_t seed = 1;   // seeds the random starts
    double start_sd = 1.5;
    int max_iter = 2000;      // per start
    double ftol = 1e-9;
    Approach approach = Approach::Unconditional;
    bool parallel_starts = false;  // OpenMP over starts; result is start-order deterministic
    bool profile_ci = false;       // profile-likelihood interval for N (unconditional only)
};

struct FitResult {
    ModelSpec spec;
    Approach approach = Approach::Unconditional;
    int T = 0;
    int n = 0;
    std::vector<double> working;  // working-scale MLE; conditional fits have no nu entry
    std::vector<ParamReport> params;  // N first, then the model parameters
    double loglik = 0.0;
    double aic = 0.0;
    int n_free = 0;
    double N_hat = 0.0;
    double rho_hat = 0.0;  // never-observed probability at the MLE (pi_0 single-state)
    bool converged = false;
    bool boundary_any = false;
    bool se_available = false;
    int iterations = 0;        // Nelder-Mead iterations summed over starts
    int converged_starts = 0;
    double grad_norm = 0.0;    // objective gradient norm at the reported optimum
    std::optional<std::pair<double, double>> profile_ci_N;

    const ParamReport& N_report() const { return params.front(); }
};

// Maximizes the model's log-likelihood over the working scale by multi-start
// Nelder-Mead. The best of all converged starts wins; ties closer than 1e-8 in
// log-likelihood go to the smaller working-vector norm. Throws when no start
// converges or stats and spec disagree.
FitResult fit_model(const SufficientStats& stats, const ModelSpec& spec,
                    const FitOptions& options = {});

FitResult fit_unconditional(const SufficientStats& stats, const ModelSpec& spec,
                            FitOptions options = {});
// Conditional likelihood, then N through the Horvitz-Thompson step n/(1-rho).
FitResult fit_conditional(const SufficientStats& stats, const ModelSpec& spec,
                          FitOptions options = {});

// Observed information from a central finite-difference Hessian at the MLE;
// fills SEs and 95% intervals on the fit. A non-positive-definite Hessian
// leaves them unset and flags the fit.
void standard_errors(FitResult& fit, const SufficientStats& stats);

// Horvitz-Thompson population size from the observed count and rho.
double horvitz_thompson_N(int n, double rho);

// Log-likelihood evaluated at an arbitrary working vector for this spec; the
// vector length decides the approach (full length = unconditional).
double eval_loglik(const SufficientStats& stats, const ModelSpec& spec,
                   std::span<const double> working);

// Never-observed probability at a working vector (pi_0 for single-state specs).
double eval_rho(const SufficientStats& stats, const ModelSpec& spec,
                std::span<const double> working);

int working_dim(const ModelSpec& spec, int T);

struct ComparisonRow {
    std::string model;
    double delta_aic = 0.0;
    double aic = 0.0;
    double loglik = 0.0;
    double N_hat = 0.0;
    std::optional<double> N_lo, N_hi;
    std::optional<double> X2;
    std::optional<double> p_value;
    bool boundary = false;
};

// AIC comparison, rows sorted ascending by AIC (stable in input order on
// ties), with goodness-of-fit columns where the model supports them.
std::vector<ComparisonRow> compare_models(const SufficientStats& stats,
                                          const std::vector<FitResult>& fits);

}  // namespace closedpop
