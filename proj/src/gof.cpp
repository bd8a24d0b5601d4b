#include "closedpop/gof.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/math/distributions/chi_squared.hpp>

#include "closedpop/ms_model.hpp"
#include "closedpop/ss_models.hpp"

namespace closedpop {

namespace {

// Single-state fits ignore the state labels, so their cells do too.
SufficientStats collapse_states(const SufficientStats& stats) {
    SufficientStats out;
    out.T = stats.T;
    out.R = 1;
    out.n = stats.n;
    out.z.assign(stats.T, 0);
    for (int t = 0; t < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r) out.z[t] += stats.z_at(t, r);
    for (const auto& [cell, count] : stats.pairs)
        out.pairs[PairCell{cell.t1, cell.t2, 0, 0}] += count;
    out.v.assign(std::max(stats.T - 1, 0), 0);
    for (int t = 0; t + 1 < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r) out.v[t] += stats.v_at(t, r);
    out.single = stats.single;
    return out;
}

// The fitted model as a state chain, with N set to the fit's N_hat so the
// conditional approach feeds its Horvitz-Thompson estimate into the cells.
MsParams params_for_cells(const FitResult& fit) {
    std::vector<double> working = fit.working;
    if (fit.approach == Approach::Conditional) working.push_back(0.0);

    if (fit.spec.multi_state) {
        MsParams params = apply_constraints(working, fit.spec, fit.T, fit.n);
        params.N = fit.N_hat;
        return params;
    }

    const SsParams ss = ss_apply_constraints(working, fit.spec, fit.T, fit.n);
    MsParams params;
    params.T = fit.T;
    params.R = 1;
    params.p = Grid2(fit.T, 1);
    params.c = Grid2(fit.T, 1);
    for (int t = 0; t < fit.T; ++t) {
        params.p(t, 0) = fit.spec.variant == SsVariant::Mt ? ss.p[t] : ss.p[0];
        params.c(t, 0) = fit.spec.variant == SsVariant::Mb ? ss.c : params.p(t, 0);
    }
    params.has_beta = fit.spec.variant == SsVariant::Mb;
    params.beta = ss.beta;
    params.psi.assign(std::max(fit.T - 1, 0), Grid2(1, 1, 1.0));
    params.alpha = {1.0};
    params.N = fit.N_hat;
    return params;
}

std::string cell_id(int t, int r) {
    return "t=" + std::to_string(t + 1) + ",r=" + std::to_string(r + 1);
}

}  // namespace

bool gof_supported(const ModelSpec& spec) {
    if (spec.multi_state) return true;
    switch (spec.variant) {
        case SsVariant::M0:
        case SsVariant::Mt:
        case SsVariant::Mb:
            return true;
        default:
            return false;
    }
}

GofReport pearson_gof(const SufficientStats& stats, const FitResult& fit) {
    if (!gof_supported(fit.spec))
        throw std::invalid_argument(
            fit.spec.name() +
            " has no per-cell expectations (latent heterogeneity); goodness-of-fit unsupported");
    if (fit.T != stats.T || fit.n != stats.n)
        throw std::invalid_argument("fit and sufficient statistics describe different datasets");

    SufficientStats collapsed;
    const SufficientStats* use = &stats;
    if (!fit.spec.multi_state && stats.R > 1) {
        collapsed = collapse_states(stats);
        use = &collapsed;
    }
    if (fit.spec.multi_state && fit.spec.R != stats.R)
        throw std::invalid_argument("fit and sufficient statistics describe different datasets");

    const MsParams params = params_for_cells(fit);
    const MsProbs probs = compute_probs(params);
    const double N_hat = fit.N_hat;
    const int T = use->T, R = use->R;

    std::vector<GofCell> cells;
    for (int t = 0; t < T; ++t)
        for (int r = 0; r < R; ++r) {
            const double obs = use->z_at(t, r);
            const double exp = N_hat * probs.zeta(t, r);
            if (obs > 0.0 || exp > 0.0) cells.push_back({"first", cell_id(t, r), obs, exp});
        }
    if (N_hat - use->n > 0.0 || N_hat * probs.rho > 0.0)
        cells.push_back({"first", "never", N_hat - use->n, N_hat * probs.rho});
    int n_components = 1;

    for (int t1 = 0; t1 + 1 < T; ++t1) {
        for (int r = 0; r < R; ++r) {
            const int m = use->inflow(t1, r);
            if (m == 0) continue;
            ++n_components;
            const std::string comp = "next(" + cell_id(t1, r) + ")";
            for (int t2 = t1 + 1; t2 < T; ++t2)
                for (int s = 0; s < R; ++s) {
                    const double obs = use->pair_at(t1, t2, r, s);
                    const double exp = m * probs.next_obs.at(t1, t2, r, s);
                    if (obs > 0.0 || exp > 0.0)
                        cells.push_back({comp, cell_id(t2, s), obs, exp});
                }
            if (use->v_at(t1, r) > 0 || m * probs.chi(t1, r) > 0.0)
                cells.push_back({comp, "never", static_cast<double>(use->v_at(t1, r)),
                                 m * probs.chi(t1, r)});
        }
    }

    return pearson_from_cells(std::move(cells), n_components, fit.n_free);
}

GofReport pearson_from_cells(std::vector<GofCell> cells, int n_components, int n_free) {
    GofReport report;
    report.n_components = n_components;
    report.n_free = n_free;

    int counted = 0;
    double x2 = 0.0;
    for (GofCell& cell : cells) {
        if (cell.expected > 0.0) {
            ++counted;
            if (cell.expected < 5.0) ++report.small_cells;
            const double d = cell.observed - cell.expected;
            cell.contribution = d * d / cell.expected;
            x2 += cell.contribution;
        } else if (cell.observed > 0.0) {
            report.degenerate = true;
            cell.contribution = std::numeric_limits<double>::infinity();
            x2 = std::numeric_limits<double>::infinity();
        } else {
            cell.contribution = 0.0;
        }
    }
    report.cells = std::move(cells);
    report.X2 = x2;
    report.df = counted - n_components - n_free;

    if (report.degenerate)
        report.note = "observed count in a zero-probability cell";
    if (report.small_cells > 0) {
        if (!report.note.empty()) report.note += "; ";
        report.note += std::to_string(report.small_cells) + " cell(s) with expected < 5 (unpooled)";
    }

    if (report.df > 0) {
        if (std::isinf(report.X2)) {
            report.p_value = 0.0;
        } else {
            const boost::math::chi_squared dist(report.df);
            report.p_value = boost::math::cdf(boost::math::complement(dist, report.X2));
        }
    } else {
        if (!report.note.empty()) report.note += "; ";
        report.note += "df <= 0, no p-value";
    }
    return report;
}

std::string gof_csv(const GofReport& report) {
    const auto quoted = [](const std::string& field) {
        if (field.find_first_of(",\"\n") == std::string::npos) return field;
        std::string out = "\"";
        for (char ch : field) {
            if (ch == '"') out += '"';
            out += ch;
        }
        out += '"';
        return out;
    };
    std::ostringstream out;
    out.precision(17);
    out << "component,cell-id,observed,expected,contribution\n";
    for (const GofCell& cell : report.cells)
        out << quoted(cell.component) << ',' << quoted(cell.cell) << ',' << cell.observed << ','
            << cell.expected << ',' << cell.contribution << '\n';
    return out.str();
}

}  // namespace closedpop
