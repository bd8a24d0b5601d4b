#include "closedpop/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "closedpop/gof.hpp"
#include "closedpop/mathutil.hpp"
#include "closedpop/nelder_mead.hpp"

namespace closedpop {

namespace {

constexpr double kZ975 = 1.959964;          // normal 97.5% quantile
constexpr double kDevianceCut = 3.841459;   // chi-squared(1) 95% quantile
constexpr double kInf = std::numeric_limits<double>::infinity();

using Objective = std::function<double(std::span<const double>)>;

void check_inputs(const SufficientStats& stats, const ModelSpec& spec) {
    if (stats.n < 1) throw std::invalid_argument("dataset has no observed histories");
    if (stats.T < 1) throw std::invalid_argument("dataset has no capture occasions");
    if (spec.multi_state && spec.R != stats.R)
        throw std::invalid_argument("model " + spec.name() + " expects " + std::to_string(spec.R) +
                                    "-state data, dataset has R=" + std::to_string(stats.R));
}

// Never-observed probability from a working vector without its nu coordinate.
double rho_core(const ModelSpec& spec, int T, int n, std::span<const double> core) {
    std::vector<double> full(core.begin(), core.end());
    full.push_back(0.0);
    if (spec.multi_state) return never_observed_prob(apply_constraints(full, spec, T, n));
    return ss_never_captured(ss_apply_constraints(full, spec, T, n), T);
}

Objective make_objective(const SufficientStats& stats, const ModelSpec& spec, Approach approach) {
    if (approach == Approach::Unconditional) {
        if (spec.multi_state)
            return [&stats, spec](std::span<const double> w) {
                return log_likelihood(stats, apply_constraints(w, spec, stats.T, stats.n));
            };
        return [&stats, spec](std::span<const double> w) {
            return ss_loglik(stats, ss_apply_constraints(w, spec, stats.T, stats.n));
        };
    }
    if (spec.multi_state)
        return [&stats, spec](std::span<const double> w) {
            std::vector<double> full(w.begin(), w.end());
            full.push_back(0.0);  // nu placeholder; the conditional likelihood ignores N
            return conditional_log_likelihood(stats, apply_constraints(full, spec, stats.T, stats.n));
        };
    return [&stats, spec](std::span<const double> w) {
        std::vector<double> full(w.begin(), w.end());
        full.push_back(0.0);
        return ss_conditional_loglik(stats, ss_apply_constraints(full, spec, stats.T, stats.n));
    };
}

double from_u(Scale scale, double u, int n) {
    switch (scale) {
        case Scale::Logit: return invlogit(u);
        case Scale::Log: return std::exp(u);
        case Scale::Identity: return u;
        case Scale::PopSize: return n + std::exp(u);
    }
    throw std::logic_error("unhandled scale");
}

// |d natural / d transformed| at the estimate, for delta-method SEs.
double dnatural_du(Scale scale, double est, int n) {
    switch (scale) {
        case Scale::Logit: return est * (1.0 - est);
        case Scale::Log: return est;
        case Scale::Identity: return 1.0;
        case Scale::PopSize: return est - n;
    }
    throw std::logic_error("unhandled scale");
}

bool at_boundary(Scale scale, double est, int n) {
    switch (scale) {
        case Scale::Logit: return est < 1e-4 || est > 1.0 - 1e-4;
        case Scale::Log: return est < 1e-8 || est > 1e8;
        case Scale::Identity: return std::abs(est) > 15.0;
        case Scale::PopSize: return !(est - n >= 1e-3);
    }
    throw std::logic_error("unhandled scale");
}

// One reported natural parameter: its transformed-scale value as a smooth
// function of the fit's working vector, so estimates, delta-method SEs and
// interval endpoints all flow through the same map.
struct ReportDesc {
    std::string name;
    Scale scale;
    std::function<double(std::span<const double>)> u;
};

double mlogit_entry(std::span<const double> working, int base, int k, int idx) {
    std::vector<double> row(working.begin() + base, working.begin() + base + (k - 1));
    const double p = std::clamp(mlogit_expand(row)[idx], 1e-12, 1.0 - 1e-12);
    return logit(p);
}

std::vector<ReportDesc> report_descriptors(const ModelSpec& spec, int T, int n,
                                           Approach approach) {
    std::vector<ReportDesc> out;
    const int full = working_dim(spec, T);

    if (approach == Approach::Unconditional) {
        out.push_back({"N", Scale::PopSize,
                       [full](std::span<const double> w) { return w[full - 1]; }});
    } else {
        const ModelSpec sp = spec;
        out.push_back({"N", Scale::PopSize, [sp, T, n](std::span<const double> w) {
                           const double rho = rho_core(sp, T, n, w);
                           const double N = horvitz_thompson_N(n, rho);
                           return safe_log(std::max(N - n, 0.0));
                       }});
    }

    auto coord = [](int idx) {
        return [idx](std::span<const double> w) { return w[idx]; };
    };

    if (spec.multi_state) {
        const int R = spec.R;
        int at = 0;
        if (spec.time && spec.state) {
            for (int t = 0; t < T; ++t)
                out.push_back({"p_" + std::to_string(t + 1) + "(1)", Scale::Logit, coord(at++)});
            for (int r = 2; r <= R; ++r)
                out.push_back({"eta(" + std::to_string(r) + ")", Scale::Identity, coord(at++)});
        } else if (spec.time) {
            for (int t = 0; t < T; ++t)
                out.push_back({"p_" + std::to_string(t + 1), Scale::Logit, coord(at++)});
        } else if (spec.state) {
            for (int r = 1; r <= R; ++r)
                out.push_back({"p(" + std::to_string(r) + ")", Scale::Logit, coord(at++)});
        } else {
            out.push_back({"p", Scale::Logit, coord(at++)});
        }
        if (spec.behaviour) out.push_back({"beta", Scale::Identity, coord(at++)});
        if (R >= 2) {
            const int n_mats = spec.psi_time_varying ? T - 1 : 1;
            for (int m = 0; m < n_mats; ++m) {
                for (int r = 0; r < R; ++r) {
                    const int base = at;
                    at += R - 1;
                    for (int s = 0; s < R; ++s) {
                        if (s == r) continue;
                        std::string name = "psi";
                        if (n_mats > 1) name += "_" + std::to_string(m + 1);
                        name += "(" + std::to_string(r + 1) + "," + std::to_string(s + 1) + ")";
                        out.push_back({name, Scale::Logit,
                                       [base, R, s](std::span<const double> w) {
                                           return mlogit_entry(w, base, R, s);
                                       }});
                    }
                }
            }
            const int abase = at;
            at += R - 1;
            for (int r = 0; r < R - 1; ++r)
                out.push_back({"alpha(" + std::to_string(r + 1) + ")", Scale::Logit,
                               [abase, R, r](std::span<const double> w) {
                                   return mlogit_entry(w, abase, R, r);
                               }});
        }
        return out;
    }

    switch (spec.variant) {
        case SsVariant::M0:
            out.push_back({"p", Scale::Logit, coord(0)});
            break;
        case SsVariant::Mt:
            for (int t = 0; t < T; ++t)
                out.push_back({"p_" + std::to_string(t + 1), Scale::Logit, coord(t)});
            break;
        case SsVariant::Mb:
            out.push_back({"p", Scale::Logit, coord(0)});
            out.push_back({"c", Scale::Logit,
                           [](std::span<const double> w) { return w[0] + w[1]; }});
            break;
        case SsVariant::MhFinite: {
            const int k = spec.mixture_k;
            for (int g = 0; g < k; ++g)
                out.push_back({"p_" + std::to_string(g + 1), Scale::Logit,
                               [g](std::span<const double> w) {
                                   double u = w[0];
                                   for (int i = 1; i <= g; ++i) u += std::exp(w[i]);
                                   return u;
                               }});
            for (int g = 0; g < k - 1; ++g)
                out.push_back({"w_" + std::to_string(g + 1), Scale::Logit,
                               [k, g](std::span<const double> w) {
                                   return mlogit_entry(w, k, k, g);
                               }});
            break;
        }
        case SsVariant::MhBeta:
            out.push_back({"a", Scale::Log, coord(0)});
            out.push_back({"b", Scale::Log, coord(1)});
            break;
        case SsVariant::MhPointBeta:
            out.push_back({"w", Scale::Logit, coord(0)});
            out.push_back({"p0", Scale::Logit, coord(1)});
            out.push_back({"a", Scale::Log, coord(2)});
            out.push_back({"b", Scale::Log, coord(3)});
            break;
    }
    return out;
}

double vector_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double gradient_norm(const Objective& f, std::span<const double> x) {
    std::vector<double> probe(x.begin(), x.end());
    double s = 0.0;
    for (std::size_t j = 0; j < probe.size(); ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(probe[j]));
        const double keep = probe[j];
        probe[j] = keep + h;
        const double fp = f(probe);
        probe[j] = keep - h;
        const double fm = f(probe);
        probe[j] = keep;
        const double d = (fp - fm) / (2.0 * h);
        s += d * d;
    }
    return std::sqrt(s);
}

struct MultiStart {
    std::vector<double> x;
    double fmax = -kInf;
    int iterations = 0;
    int converged_starts = 0;
};

MultiStart run_multistart(const Objective& f, int dim, const FitOptions& options,
                          const std::string& label) {
    if (options.starts < 1) throw std::invalid_argument("starts must be at least 1");
    std::vector<NmResult> results(options.starts);
    NmOptions nm;
    nm.max_iter = options.max_iter;
    nm.ftol = options.ftol;

    auto run_one = [&](int i) {
        std::vector<double> x0(dim, 0.0);
        if (i > 0) {
            std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(i)));
            std::normal_distribution<double> draw(0.0, options.start_sd);
            for (double& v : x0) v = draw(rng);
        }
        results[i] = nelder_mead_maximize(f, x0, nm);
    };

    bool parallel = options.parallel_starts;
#ifndef _OPENMP
    parallel = false;
#endif
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < options.starts; ++i) run_one(i);
#endif
    } else {
        for (int i = 0; i < options.starts; ++i) run_one(i);
    }

    MultiStart best;
    int pick = -1;
    for (int i = 0; i < options.starts; ++i) {
        best.iterations += results[i].iterations;
        if (!results[i].converged || !std::isfinite(results[i].fmax)) continue;
        ++best.converged_starts;
        if (pick < 0) {
            pick = i;
            continue;
        }
        const double gain = results[i].fmax - results[pick].fmax;
        if (gain > 1e-8 ||
            (gain > -1e-8 && vector_norm(results[i].x) < vector_norm(results[pick].x))) {
            pick = i;
        }
    }
    if (pick < 0)
        throw std::runtime_error("no Nelder-Mead start converged for " + label);
    best.x = results[pick].x;
    best.fmax = results[pick].fmax;
    return best;
}

// Estimates and boundary flags, no SEs; standard_errors fills the rest.
void build_reports(FitResult& fit, const std::vector<ReportDesc>& descs) {
    fit.params.clear();
    fit.params.reserve(descs.size());
    for (const ReportDesc& d : descs) {
        ParamReport pr;
        pr.name = d.name;
        pr.scale = d.scale;
        pr.estimate = from_u(d.scale, d.u(fit.working), fit.n);
        pr.boundary = at_boundary(d.scale, pr.estimate, fit.n);
        fit.params.push_back(std::move(pr));
    }
    if (!fit.spec.multi_state && fit.spec.variant == SsVariant::MhFinite) {
        // Adjacent components closer than the resolution limit mean the
        // mixture has collapsed; flag both.
        const int k = fit.spec.mixture_k;
        for (int g = 1; g < k; ++g) {
            if (std::abs(fit.params[1 + g].estimate - fit.params[g].estimate) < 1e-4) {
                fit.params[1 + g].boundary = true;
                fit.params[g].boundary = true;
            }
        }
    }
    fit.boundary_any = false;
    for (const ParamReport& pr : fit.params) fit.boundary_any |= pr.boundary;
}

// Profile log-likelihood for N: maximize over the other parameters at fixed
// nu, walking out from the MLE until the deviance crosses the chi-squared
// cutoff, then bisecting the crossing.
void profile_interval_N(FitResult& fit, const SufficientStats& stats, const FitOptions& options) {
    const int dim = static_cast<int>(fit.working.size());
    const Objective f = make_objective(stats, fit.spec, Approach::Unconditional);
    const double target = fit.loglik - kDevianceCut / 2.0;
    const double nu_hat = fit.working[dim - 1];

    NmOptions nm;
    nm.max_iter = options.max_iter;
    nm.ftol = options.ftol;
    nm.step = 0.25;

    std::vector<double> warm(fit.working.begin(), fit.working.end() - 1);
    auto profile = [&](double nu) {
        if (warm.empty()) {
            const std::vector<double> x{nu};
            return f(x);
        }
        auto reduced = [&](std::span<const double> w) {
            std::vector<double> x(w.begin(), w.end());
            x.push_back(nu);
            return f(x);
        };
        const NmResult r = nelder_mead_maximize(reduced, warm, nm);
        if (std::isfinite(r.fmax)) warm = r.x;
        return r.fmax;
    };

    auto bisect = [&](double inside, double outside) {
        // profile(inside) >= target > profile(outside)
        for (int it = 0; it < 60 && std::abs(outside - inside) > 1e-4; ++it) {
            const double mid = 0.5 * (inside + outside);
            if (profile(mid) >= target)
                inside = mid;
            else
                outside = mid;
        }
        return 0.5 * (inside + outside);
    };

    const double nu_floor = std::log(1e-8);
    double lo_N = fit.n;
    {
        double inside = nu_hat;
        bool crossed = false;
        for (double nu = nu_hat - 0.25; nu > nu_floor; nu -= 0.25) {
            if (profile(nu) < target) {
                lo_N = fit.n + std::exp(bisect(inside, nu));
                crossed = true;
                break;
            }
            inside = nu;
        }
        if (!crossed && profile(nu_floor) < target)
            lo_N = fit.n + std::exp(bisect(inside, nu_floor));
    }

    warm.assign(fit.working.begin(), fit.working.end() - 1);
    double hi_N = kInf;
    {
        double inside = nu_hat;
        for (double nu = nu_hat + 0.25; nu < nu_hat + 60.0; nu += 0.25) {
            if (profile(nu) < target) {
                hi_N = fit.n + std::exp(bisect(inside, nu));
                break;
            }
            inside = nu;
        }
    }

    fit.profile_ci_N = std::make_pair(lo_N, hi_N);
}

FitResult fit_core(const SufficientStats& stats, const ModelSpec& spec, FitOptions options,
                   Approach approach) {
    check_inputs(stats, spec);
    options.approach = approach;
    const int full = working_dim(spec, stats.T);
    const int dim = approach == Approach::Conditional ? full - 1 : full;

    const Objective f = make_objective(stats, spec, approach);
    const MultiStart best = run_multistart(f, dim, options, spec.name());

    FitResult fit;
    fit.spec = spec;
    fit.approach = approach;
    fit.T = stats.T;
    fit.n = stats.n;
    fit.working = best.x;
    fit.loglik = best.fmax;
    fit.n_free = dim;
    fit.aic = -2.0 * fit.loglik + 2.0 * dim;
    fit.converged = true;
    fit.iterations = best.iterations;
    fit.converged_starts = best.converged_starts;
    fit.rho_hat = eval_rho(stats, spec, fit.working);
    fit.N_hat = approach == Approach::Conditional
                    ? horvitz_thompson_N(stats.n, fit.rho_hat)
                    : stats.n + std::exp(fit.working[full - 1]);
    fit.grad_norm = gradient_norm(f, fit.working);

    build_reports(fit, report_descriptors(spec, stats.T, stats.n, approach));
    standard_errors(fit, stats);
    if (options.profile_ci && approach == Approach::Unconditional)
        profile_interval_N(fit, stats, options);
    return fit;
}

}  // namespace

int working_dim(const ModelSpec& spec, int T) {
    return spec.multi_state ? ms_working_dim(spec, T) : ss_working_dim(spec, T);
}

double horvitz_thompson_N(int n, double rho) {
    const double denom = 1.0 - rho;
    if (denom < kProbFloor) return kInf;
    return n / denom;
}

double eval_loglik(const SufficientStats& stats, const ModelSpec& spec,
                   std::span<const double> working) {
    check_inputs(stats, spec);
    const int full = working_dim(spec, stats.T);
    const int got = static_cast<int>(working.size());
    if (got == full) return make_objective(stats, spec, Approach::Unconditional)(working);
    if (got == full - 1) return make_objective(stats, spec, Approach::Conditional)(working);
    throw std::invalid_argument("working vector has length " + std::to_string(got) + ", " +
                                spec.name() + " needs " + std::to_string(full) +
                                " (unconditional) or " + std::to_string(full - 1) +
                                " (conditional)");
}

double eval_rho(const SufficientStats& stats, const ModelSpec& spec,
                std::span<const double> working) {
    check_inputs(stats, spec);
    const int full = working_dim(spec, stats.T);
    const int got = static_cast<int>(working.size());
    if (got == full - 1) return rho_core(spec, stats.T, stats.n, working);
    if (got != full)
        throw std::invalid_argument("working vector has length " + std::to_string(got) + ", " +
                                    spec.name() + " needs " + std::to_string(full) + " or " +
                                    std::to_string(full - 1));
    if (spec.multi_state)
        return never_observed_prob(apply_constraints(working, spec, stats.T, stats.n));
    return ss_never_captured(ss_apply_constraints(working, spec, stats.T, stats.n), stats.T);
}

FitResult fit_unconditional(const SufficientStats& stats, const ModelSpec& spec,
                            FitOptions options) {
    return fit_core(stats, spec, options, Approach::Unconditional);
}

FitResult fit_conditional(const SufficientStats& stats, const ModelSpec& spec,
                          FitOptions options) {
    return fit_core(stats, spec, options, Approach::Conditional);
}

FitResult fit_model(const SufficientStats& stats, const ModelSpec& spec,
                    const FitOptions& options) {
    return fit_core(stats, spec, options, options.approach);
}

void standard_errors(FitResult& fit, const SufficientStats& stats) {
    const int dim = static_cast<int>(fit.working.size());
    const Objective f = make_objective(stats, fit.spec, fit.approach);
    const std::vector<ReportDesc> descs =
        report_descriptors(fit.spec, fit.T, fit.n, fit.approach);
    if (fit.params.empty()) build_reports(fit, descs);
    fit.se_available = false;

    std::vector<double> x = fit.working;
    std::vector<double> h(dim);
    for (int j = 0; j < dim; ++j) h[j] = 1e-4 * std::max(1.0, std::abs(x[j]));

    const double f0 = f(x);
    Eigen::MatrixXd hess(dim, dim);
    for (int j = 0; j < dim; ++j) {
        const double keep = x[j];
        x[j] = keep + h[j];
        const double fp = f(x);
        x[j] = keep - h[j];
        const double fm = f(x);
        x[j] = keep;
        hess(j, j) = (fp - 2.0 * f0 + fm) / (h[j] * h[j]);
    }
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            const double kj = x[j], kk = x[k];
            x[j] = kj + h[j];
            x[k] = kk + h[k];
            const double fpp = f(x);
            x[k] = kk - h[k];
            const double fpm = f(x);
            x[j] = kj - h[j];
            const double fmm = f(x);
            x[k] = kk + h[k];
            const double fmp = f(x);
            x[j] = kj;
            x[k] = kk;
            hess(j, k) = hess(k, j) = (fpp - fpm - fmp + fmm) / (4.0 * h[j] * h[k]);
        }
    }
    if (!hess.allFinite()) return;

    const Eigen::MatrixXd info = -hess;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) return;
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));

    for (std::size_t j = 0; j < descs.size(); ++j) {
        const ReportDesc& d = descs[j];
        ParamReport& pr = fit.params[j];
        const double u0 = d.u(fit.working);
        if (!std::isfinite(u0)) continue;

        Eigen::VectorXd grad(dim);
        std::vector<double> probe = fit.working;
        bool ok = true;
        for (int i = 0; i < dim; ++i) {
            const double step = 1e-6 * std::max(1.0, std::abs(probe[i]));
            const double keep = probe[i];
            probe[i] = keep + step;
            const double up = d.u(probe);
            probe[i] = keep - step;
            const double um = d.u(probe);
            probe[i] = keep;
            grad(i) = (up - um) / (2.0 * step);
            ok = ok && std::isfinite(grad(i));
        }
        if (!ok) continue;

        const double var_u = grad.dot(cov * grad);
        if (!std::isfinite(var_u) || var_u < 0.0) continue;
        const double se_u = std::sqrt(var_u);
        pr.se = std::abs(dnatural_du(d.scale, pr.estimate, fit.n)) * se_u;
        pr.lo = from_u(d.scale, u0 - kZ975 * se_u, fit.n);
        pr.hi = from_u(d.scale, u0 + kZ975 * se_u, fit.n);
    }
    fit.se_available = true;
}

std::vector<ComparisonRow> compare_models(const SufficientStats& stats,
                                          const std::vector<FitResult>& fits) {
    std::vector<ComparisonRow> rows;
    rows.reserve(fits.size());
    for (const FitResult& fit : fits) {
        ComparisonRow row;
        row.model = fit.spec.name();
        if (fit.approach == Approach::Conditional) row.model += " (cond)";
        row.aic = fit.aic;
        row.loglik = fit.loglik;
        row.N_hat = fit.N_hat;
        if (fit.profile_ci_N) {
            row.N_lo = fit.profile_ci_N->first;
            row.N_hi = fit.profile_ci_N->second;
        } else {
            row.N_lo = fit.N_report().lo;
            row.N_hi = fit.N_report().hi;
        }
        row.boundary = fit.boundary_any;
        if (gof_supported(fit.spec)) {
            try {
                const GofReport g = pearson_gof(stats, fit);
                row.X2 = g.X2;
                row.p_value = g.p_value;
            } catch (const std::exception&) {
                // leave the goodness-of-fit columns empty
            }
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) { return a.aic < b.aic; });
    if (!rows.empty()) {
        const double best = rows.front().aic;
        for (ComparisonRow& row : rows) row.delta_aic = row.aic - best;
    }
    return rows;
}

}  // namespace closedpop
