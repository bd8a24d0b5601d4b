#include "closedpop/ms_model.hpp"

#include <cmath>
#include <stdexcept>

#include "closedpop/mathutil.hpp"

namespace closedpop {

namespace {

// Shared backward recursion for the two gap-probability grids. pick_capture
// selects p (pre first capture) or c (post).
PairGrid gap_probs(const MsParams& params, const Grid2& capture) {
    const int T = params.T, R = params.R;
    PairGrid q(T, R);
    for (int t1 = T - 2; t1 >= 0; --t1) {
        const Grid2& step = params.psi[t1];
        for (int r = 0; r < R; ++r)
            for (int s = 0; s < R; ++s) q.at(t1, t1 + 1, r, s) = step(r, s);
        for (int t2 = t1 + 2; t2 < T; ++t2) {
            for (int r = 0; r < R; ++r) {
                for (int s = 0; s < R; ++s) {
                    double acc = 0.0;
                    for (int u = 0; u < R; ++u)
                        acc += step(r, u) * (1.0 - capture(t1 + 1, u)) * q.at(t1 + 1, t2, u, s);
                    q.at(t1, t2, r, s) = acc;
                }
            }
        }
    }
    return q;
}

Grid2 zeta_from(const MsParams& params, const PairGrid& q_pre) {
    const int T = params.T, R = params.R;
    Grid2 zeta(T, R);
    for (int r = 0; r < R; ++r) zeta(0, r) = params.p(0, r) * params.alpha[r];
    for (int t = 1; t < T; ++t) {
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int u = 0; u < R; ++u)
                acc += params.alpha[u] * (1.0 - params.p(0, u)) * q_pre.at(0, t, u, r);
            zeta(t, r) = params.p(t, r) * acc;
        }
    }
    return zeta;
}

PairGrid next_obs_from(const MsParams& params, const PairGrid& q_post) {
    const int T = params.T, R = params.R;
    PairGrid next(T, R);
    for (int t1 = 0; t1 + 1 < T; ++t1)
        for (int t2 = t1 + 1; t2 < T; ++t2)
            for (int r = 0; r < R; ++r)
                for (int s = 0; s < R; ++s)
                    next.at(t1, t2, r, s) = q_post.at(t1, t2, r, s) * params.c(t2, s);
    return next;
}

Grid2 chi_from(const MsParams& params, const PairGrid& q_post) {
    const int T = params.T, R = params.R;
    Grid2 chi(T, R, 1.0);
    for (int t = 0; t + 1 < T; ++t) {
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int u = 0; u < R; ++u)
                acc += q_post.at(t, T - 1, r, u) * (1.0 - params.c(T - 1, u));
            chi(t, r) = acc;
        }
    }
    return chi;
}

double rho_from(const MsParams& params, const PairGrid& q_pre) {
    const int T = params.T, R = params.R;
    if (T == 1) {
        double acc = 0.0;
        for (int r = 0; r < R; ++r) acc += params.alpha[r] * (1.0 - params.p(0, r));
        return acc;
    }
    double acc = 0.0;
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < R; ++s)
            acc += params.alpha[r] * (1.0 - params.p(0, r)) * q_pre.at(0, T - 1, r, s) *
                   (1.0 - params.p(T - 1, s));
    return acc;
}

}  // namespace

PairGrid q_unmarked(const MsParams& params) { return gap_probs(params, params.p); }
PairGrid q_marked(const MsParams& params) { return gap_probs(params, params.c); }

Grid2 first_capture_probs(const MsParams& params) { return zeta_from(params, q_unmarked(params)); }

PairGrid recapture_probs(const MsParams& params) { return next_obs_from(params, q_marked(params)); }

Grid2 chi_probs(const MsParams& params) { return chi_from(params, q_marked(params)); }

double never_observed_prob(const MsParams& params) { return rho_from(params, q_unmarked(params)); }

MsProbs compute_probs(const MsParams& params) {
    MsProbs probs;
    probs.q_pre = gap_probs(params, params.p);
    probs.q_post = gap_probs(params, params.c);
    probs.zeta = zeta_from(params, probs.q_pre);
    probs.next_obs = next_obs_from(params, probs.q_post);
    probs.chi = chi_from(params, probs.q_post);
    probs.rho = rho_from(params, probs.q_pre);
    return probs;
}

namespace {

void check_shapes(const SufficientStats& stats, const MsParams& params) {
    if (stats.T != params.T || stats.R != params.R)
        throw std::invalid_argument("sufficient statistics and parameters disagree on T or R");
}

// Statistic terms shared by the full and conditional likelihoods.
double observed_terms(const SufficientStats& stats, const MsProbs& probs) {
    double ll = 0.0;
    for (int t = 0; t < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r)
            if (int count = stats.z_at(t, r); count > 0) ll += count * safe_log(probs.zeta(t, r));
    for (int t = 0; t + 1 < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r)
            if (int count = stats.v_at(t, r); count > 0) ll += count * safe_log(probs.chi(t, r));
    for (const auto& [cell, count] : stats.pairs)
        if (count > 0) ll += count * safe_log(probs.next_obs.at(cell.t1, cell.t2, cell.r, cell.s));
    return ll;
}

}  // namespace

double log_likelihood(const SufficientStats& stats, const MsParams& params, const MsProbs& probs) {
    check_shapes(stats, params);
    if (params.N < stats.n)
        throw std::invalid_argument("population size below the number of observed individuals");
    double ll = log_falling_factorial(params.N, stats.n);
    if (params.N > stats.n) ll += (params.N - stats.n) * safe_log(probs.rho);
    return ll + observed_terms(stats, probs);
}

double log_likelihood(const SufficientStats& stats, const MsParams& params) {
    return log_likelihood(stats, params, compute_probs(params));
}

double conditional_log_likelihood(const SufficientStats& stats, const MsParams& params) {
    check_shapes(stats, params);
    const MsProbs probs = compute_probs(params);
    return observed_terms(stats, probs) - stats.n * safe_log(1.0 - probs.rho);
}

int ms_working_dim(const ModelSpec& spec, int T) {
    const int R = spec.R;
    int dim = 0;
    if (spec.time && spec.state)
        dim += T + R - 1;
    else if (spec.time)
        dim += T;
    else if (spec.state)
        dim += R;
    else
        dim += 1;
    if (spec.behaviour) dim += 1;
    if (R >= 2) dim += (spec.psi_time_varying ? (T - 1) * R * (R - 1) : R * (R - 1));
    if (R >= 2) dim += R - 1;
    dim += 1;  // nu
    return dim;
}

MsParams apply_constraints(std::span<const double> working, const ModelSpec& spec, int T, int n) {
    if (!spec.multi_state) throw std::invalid_argument("spec is not multi-state");
    if (static_cast<int>(working.size()) != ms_working_dim(spec, T))
        throw std::invalid_argument("working vector has length " + std::to_string(working.size()) +
                                    ", spec needs " + std::to_string(ms_working_dim(spec, T)));
    const int R = spec.R;
    MsParams params;
    params.T = T;
    params.R = R;
    params.p = Grid2(T, R);
    params.c = Grid2(T, R);

    std::size_t at = 0;
    // capture block on the logit scale
    Grid2 logit_p(T, R);
    if (spec.time && spec.state) {
        std::vector<double> base(working.begin() + at, working.begin() + at + T);
        at += T;
        std::vector<double> eta(R, 0.0);
        for (int r = 1; r < R; ++r) eta[r] = working[at++];
        for (int t = 0; t < T; ++t)
            for (int r = 0; r < R; ++r) logit_p(t, r) = base[t] + eta[r];
    } else if (spec.time) {
        for (int t = 0; t < T; ++t) {
            for (int r = 0; r < R; ++r) logit_p(t, r) = working[at];
            ++at;
        }
    } else if (spec.state) {
        for (int r = 0; r < R; ++r) {
            for (int t = 0; t < T; ++t) logit_p(t, r) = working[at];
            ++at;
        }
    } else {
        for (int t = 0; t < T; ++t)
            for (int r = 0; r < R; ++r) logit_p(t, r) = working[at];
        ++at;
    }

    params.has_beta = spec.behaviour;
    params.beta = spec.behaviour ? working[at++] : 0.0;

    for (int t = 0; t < T; ++t) {
        for (int r = 0; r < R; ++r) {
            params.p(t, r) = invlogit(logit_p(t, r));
            params.c(t, r) = invlogit(logit_p(t, r) + params.beta);
        }
    }

    params.psi.assign(std::max(T - 1, 0), Grid2(R, R));
    if (R >= 2) {
        const int n_mats = spec.psi_time_varying ? T - 1 : 1;
        std::vector<Grid2> mats(n_mats, Grid2(R, R));
        for (int m = 0; m < n_mats; ++m) {
            for (int r = 0; r < R; ++r) {
                std::vector<double> row(working.begin() + at, working.begin() + at + (R - 1));
                at += R - 1;
                std::vector<double> probs = mlogit_expand(row);
                for (int s = 0; s < R; ++s) mats[m](r, s) = probs[s];
            }
        }
        for (int t = 0; t + 1 < T; ++t) params.psi[t] = mats[spec.psi_time_varying ? t : 0];

        std::vector<double> arow(working.begin() + at, working.begin() + at + (R - 1));
        at += R - 1;
        params.alpha = mlogit_expand(arow);
    } else {
        for (int t = 0; t + 1 < T; ++t) params.psi[t](0, 0) = 1.0;
        params.alpha = {1.0};
    }

    params.N = n + std::exp(working[at++]);
    return params;
}

std::vector<double> ms_to_working(const MsParams& params, const ModelSpec& spec, int n) {
    const int T = params.T, R = params.R;
    std::vector<double> working;
    working.reserve(ms_working_dim(spec, T));

    if (spec.time && spec.state) {
        for (int t = 0; t < T; ++t) working.push_back(logit(params.p(t, 0)));
        for (int r = 1; r < R; ++r) working.push_back(logit(params.p(0, r)) - logit(params.p(0, 0)));
    } else if (spec.time) {
        for (int t = 0; t < T; ++t) working.push_back(logit(params.p(t, 0)));
    } else if (spec.state) {
        for (int r = 0; r < R; ++r) working.push_back(logit(params.p(0, r)));
    } else {
        working.push_back(logit(params.p(0, 0)));
    }

    if (spec.behaviour) working.push_back(params.beta);

    if (R >= 2) {
        const int n_mats = spec.psi_time_varying ? T - 1 : 1;
        for (int m = 0; m < n_mats; ++m) {
            const Grid2& mat = params.psi[m];
            for (int r = 0; r < R; ++r) {
                std::vector<double> row(R);
                for (int s = 0; s < R; ++s) row[s] = mat(r, s);
                for (double w : mlogit_collapse(row)) working.push_back(w);
            }
        }
        for (double w : mlogit_collapse(params.alpha)) working.push_back(w);
    }

    working.push_back(std::log(params.N - n));
    return working;
}

}  // namespace closedpop
