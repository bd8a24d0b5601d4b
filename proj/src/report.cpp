#include "closedpop/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "closedpop/model_spec.hpp"

namespace closedpop {

namespace {

std::string fmt_fixed(double x, int prec = 2) {
    if (std::isnan(x)) return "-";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

std::string fmt_g3(double x) {
    if (std::isnan(x)) return "-";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// First column left-aligned, the rest right-aligned, two spaces between.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << "  ";
            const int pad = static_cast<int>(width[c] - row[c].size());
            if (c == 0) {
                out << row[c];
                if (c + 1 < row.size()) out << std::string(pad, ' ');
            } else {
                out << std::string(pad, ' ') << row[c];
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string approach_str(Approach a) {
    return a == Approach::Conditional ? "conditional" : "unconditional";
}

Approach approach_from(const std::string& s) {
    if (s == "conditional") return Approach::Conditional;
    if (s == "unconditional") return Approach::Unconditional;
    throw std::invalid_argument("unknown approach \"" + s + "\"");
}

std::string scale_str(Scale s) {
    switch (s) {
        case Scale::Logit: return "logit";
        case Scale::Log: return "log";
        case Scale::Identity: return "identity";
        case Scale::PopSize: return "popsize";
    }
    throw std::logic_error("unhandled scale");
}

Scale scale_from(const std::string& s) {
    if (s == "logit") return Scale::Logit;
    if (s == "log") return Scale::Log;
    if (s == "identity") return Scale::Identity;
    if (s == "popsize") return Scale::PopSize;
    throw std::invalid_argument("unknown scale \"" + s + "\"");
}

nlohmann::json num_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

double num_from(const nlohmann::json& j, double fallback) {
    return j.is_number() ? j.get<double>() : fallback;
}

std::string ci_text(const ParamReport& pr) {
    if (pr.boundary || !pr.lo || !pr.hi) return "-";
    return "(" + fmt_fixed(*pr.lo) + ", " + fmt_fixed(*pr.hi) + ")";
}

}  // namespace

std::string spec_token(const ModelSpec& spec) {
    if (spec.multi_state) return spec.name();
    switch (spec.variant) {
        case SsVariant::M0: return "M0";
        case SsVariant::Mt: return "Mt";
        case SsVariant::Mb: return "Mb";
        case SsVariant::MhFinite: return "Mh" + std::to_string(spec.mixture_k);
        case SsVariant::MhBeta: return "Mhbe";
        case SsVariant::MhPointBeta: return "Mhb-be";
    }
    throw std::logic_error("unhandled variant");
}

std::string fit_table(const FitResult& fit) {
    std::ostringstream out;
    out << "Model " << fit.spec.name() << ", " << approach_str(fit.approach) << " likelihood\n";
    out << "n = " << fit.n << " observed histories over T = " << fit.T << " occasions\n\n";

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Parameter", "MLE", "SE", "95% CI"});
    for (const ParamReport& pr : fit.params) {
        rows.push_back({pr.name + (pr.boundary ? " *" : ""), fmt_fixed(pr.estimate),
                        pr.se ? fmt_g3(*pr.se) : "-", ci_text(pr)});
    }
    out << render_table(rows) << '\n';

    out << "logL = " << fmt_fixed(fit.loglik) << "   AIC = " << fmt_fixed(fit.aic)
        << "   free parameters = " << fit.n_free << '\n';
    out << "never-observed probability = " << fmt_fixed(fit.rho_hat, 4) << '\n';
    if (fit.profile_ci_N)
        out << "N profile 95% CI: (" << fmt_fixed(fit.profile_ci_N->first) << ", "
            << fmt_fixed(fit.profile_ci_N->second) << ")\n";
    if (!fit.se_available)
        out << "note: observed information not positive definite; SEs unavailable\n";
    if (fit.boundary_any)
        out << "note: * marks boundary estimates; their Wald intervals are suppressed\n";
    return out.str();
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
    std::vector<std::vector<std::string>> table;
    table.push_back({"Model", "dAIC", "AIC", "logL", "N_hat", "95% CI", "X2", "p"});
    bool any_boundary = false;
    for (const ComparisonRow& row : rows) {
        any_boundary |= row.boundary;
        std::string ci = "-";
        if (row.N_lo && row.N_hi)
            ci = "(" + fmt_fixed(*row.N_lo) + ", " + fmt_fixed(*row.N_hi) + ")";
        table.push_back({row.model + (row.boundary ? " *" : ""), fmt_fixed(row.delta_aic),
                         fmt_fixed(row.aic), fmt_fixed(row.loglik), fmt_fixed(row.N_hat), ci,
                         row.X2 ? fmt_fixed(*row.X2) : "-",
                         row.p_value ? fmt_fixed(*row.p_value, 4) : "-"});
    }
    std::string out = render_table(table);
    if (any_boundary) out += "* includes a boundary estimate\n";
    return out;
}

std::string gof_table(const GofReport& report) {
    std::ostringstream out;
    out << "Pearson goodness-of-fit\n";
    out << "X2 = " << fmt_fixed(report.X2) << "   df = " << report.df << "   p = "
        << (report.p_value ? fmt_fixed(*report.p_value, 4) : std::string("-")) << '\n';
    out << "component multinomials = " << report.n_components
        << "   free parameters = " << report.n_free
        << "   cells = " << report.df + report.n_components + report.n_free << '\n';
    if (report.small_cells > 0)
        out << report.small_cells << " cell(s) with expected < 5 (reported, never pooled)\n";
    if (report.degenerate) out << "warning: observed count in a zero-probability cell\n";
    return out.str();
}

std::string study_table(const StudySummary& summary) {
    std::ostringstream out;
    out << "Scenario " << summary.scenario << ": " << summary.replicates
        << " replicates, seed " << summary.seed << '\n' << '\n';
    std::vector<std::vector<std::string>> table;
    table.push_back(
        {"Model", "conv", "bnd", "mean N", "sd", "median", "IQR", "MC SE"});
    for (const ModelSummary& ms : summary.models)
        table.push_back({ms.model, std::to_string(ms.converged), std::to_string(ms.boundary),
                         fmt_fixed(ms.mean_N), fmt_fixed(ms.sd_N), fmt_fixed(ms.median_N),
                         fmt_fixed(ms.iqr_N()), fmt_fixed(ms.mc_se_N)});
    out << render_table(table) << '\n';

    out << "Precision ranks (IQR of N_hat, sd breaking ties):\n";
    std::vector<PrecisionRow> prec = precision_comparison(summary);
    std::stable_sort(prec.begin(), prec.end(),
                     [](const PrecisionRow& a, const PrecisionRow& b) { return a.rank < b.rank; });
    for (const PrecisionRow& row : prec) {
        out << "  " << row.rank << ". " << row.model << "  IQR = " << fmt_fixed(row.iqr)
            << "  sd = " << fmt_fixed(row.sd);
        if (row.insufficient) out << "  (insufficient replicates)";
        out << '\n';
    }
    return out.str();
}

nlohmann::json fit_json(const FitResult& fit) {
    nlohmann::json j;
    j["model"] = fit.spec.name();
    j["spec"] = spec_token(fit.spec);
    j["approach"] = approach_str(fit.approach);
    j["T"] = fit.T;
    j["n"] = fit.n;
    j["working"] = fit.working;
    j["loglik"] = fit.loglik;
    j["aic"] = fit.aic;
    j["n_free"] = fit.n_free;
    j["N_hat"] = num_or_null(fit.N_hat);
    j["rho_hat"] = fit.rho_hat;
    j["converged"] = fit.converged;
    j["boundary_any"] = fit.boundary_any;
    j["se_available"] = fit.se_available;
    j["iterations"] = fit.iterations;
    j["converged_starts"] = fit.converged_starts;
    j["grad_norm"] = fit.grad_norm;
    if (fit.profile_ci_N)
        j["profile_ci_N"] = {num_or_null(fit.profile_ci_N->first),
                             num_or_null(fit.profile_ci_N->second)};
    nlohmann::json params = nlohmann::json::array();
    for (const ParamReport& pr : fit.params) {
        nlohmann::json p;
        p["name"] = pr.name;
        p["estimate"] = pr.estimate;
        p["scale"] = scale_str(pr.scale);
        p["boundary"] = pr.boundary;
        if (pr.se) p["se"] = *pr.se;
        if (pr.lo) p["lo"] = *pr.lo;
        if (pr.hi) p["hi"] = *pr.hi;
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);
    return j;
}

FitResult fit_from_json(const nlohmann::json& j) {
    FitResult fit;
    fit.spec = parse_model_spec(j.at("spec").get<std::string>());
    fit.approach = approach_from(j.at("approach").get<std::string>());
    fit.T = j.at("T").get<int>();
    fit.n = j.at("n").get<int>();
    fit.working = j.at("working").get<std::vector<double>>();
    fit.loglik = j.at("loglik").get<double>();
    fit.aic = j.at("aic").get<double>();
    fit.n_free = j.at("n_free").get<int>();
    fit.N_hat = num_from(j.at("N_hat"), std::numeric_limits<double>::infinity());
    fit.rho_hat = j.at("rho_hat").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.boundary_any = j.at("boundary_any").get<bool>();
    fit.se_available = j.at("se_available").get<bool>();
    fit.iterations = j.value("iterations", 0);
    fit.converged_starts = j.value("converged_starts", 0);
    fit.grad_norm = j.value("grad_norm", 0.0);
    if (j.contains("profile_ci_N"))
        fit.profile_ci_N =
            std::make_pair(num_from(j["profile_ci_N"][0], fit.n),
                           num_from(j["profile_ci_N"][1], std::numeric_limits<double>::infinity()));
    for (const nlohmann::json& p : j.at("params")) {
        ParamReport pr;
        pr.name = p.at("name").get<std::string>();
        pr.estimate = p.at("estimate").get<double>();
        pr.scale = scale_from(p.at("scale").get<std::string>());
        pr.boundary = p.at("boundary").get<bool>();
        if (p.contains("se")) pr.se = p["se"].get<double>();
        if (p.contains("lo")) pr.lo = p["lo"].get<double>();
        if (p.contains("hi")) pr.hi = p["hi"].get<double>();
        fit.params.push_back(std::move(pr));
    }
    return fit;
}

nlohmann::json dataset_json(const Dataset& d) {
    nlohmann::json j;
    j["T"] = d.T;
    j["R"] = d.R;
    j["n"] = d.n();
    nlohmann::json histories = nlohmann::json::array();
    for (const EncounterHistory& h : d.histories) histories.push_back(h.entries);
    j["histories"] = std::move(histories);
    return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset d;
    d.T = j.at("T").get<int>();
    d.R = j.at("R").get<int>();
    for (const nlohmann::json& h : j.at("histories")) {
        EncounterHistory history;
        history.entries = h.get<std::vector<int>>();
        d.histories.push_back(std::move(history));
    }
    validate_dataset(d);
    return d;
}

nlohmann::json stats_json(const SufficientStats& stats) {
    nlohmann::json j;
    j["T"] = stats.T;
    j["R"] = stats.R;
    j["n"] = stats.n;

    nlohmann::json z = nlohmann::json::array();
    for (int t = 0; t < stats.T; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int r = 0; r < stats.R; ++r) row.push_back(stats.z_at(t, r));
        z.push_back(std::move(row));
    }
    j["z"] = std::move(z);

    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [cell, count] : stats.pairs) {
        nlohmann::json p;
        p["t1"] = cell.t1 + 1;
        p["t2"] = cell.t2 + 1;
        p["r"] = cell.r + 1;
        p["s"] = cell.s + 1;
        p["count"] = count;
        pairs.push_back(std::move(p));
    }
    j["pairs"] = std::move(pairs);

    nlohmann::json v = nlohmann::json::array();
    for (int t = 0; t + 1 < stats.T; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int r = 0; r < stats.R; ++r) row.push_back(stats.v_at(t, r));
        v.push_back(std::move(row));
    }
    j["v"] = std::move(v);

    j["schnabel"] = stats.single.f;
    return j;
}

SufficientStats stats_from_json(const nlohmann::json& j) {
    SufficientStats stats;
    stats.T = j.at("T").get<int>();
    stats.R = j.at("R").get<int>();
    stats.n = j.at("n").get<int>();

    stats.z.assign(static_cast<std::size_t>(stats.T) * stats.R, 0);
    const nlohmann::json& z = j.at("z");
    for (int t = 0; t < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r)
            stats.z[static_cast<std::size_t>(t) * stats.R + r] = z.at(t).at(r).get<int>();

    for (const nlohmann::json& p : j.at("pairs")) {
        PairCell cell{p.at("t1").get<int>() - 1, p.at("t2").get<int>() - 1,
                      p.at("r").get<int>() - 1, p.at("s").get<int>() - 1};
        stats.pairs[cell] = p.at("count").get<int>();
    }

    stats.v.assign(static_cast<std::size_t>(std::max(stats.T - 1, 0)) * stats.R, 0);
    const nlohmann::json& v = j.at("v");
    for (int t = 0; t + 1 < stats.T; ++t)
        for (int r = 0; r < stats.R; ++r)
            stats.v[static_cast<std::size_t>(t) * stats.R + r] = v.at(t).at(r).get<int>();

    stats.single.f = j.at("schnabel").get<std::vector<int>>();
    stats.single.z_t.assign(stats.T, 0);
    stats.single.n_t.assign(stats.T, 0);
    stats.single.y = 0;
    stats.single.captures = 0;
    for (int t = 0; t < stats.T; ++t) {
        for (int r = 0; r < stats.R; ++r) {
            stats.single.z_t[t] += stats.z_at(t, r);
            stats.single.n_t[t] += stats.inflow(t, r);
        }
        stats.single.y += static_cast<long long>(t) * stats.single.z_t[t];
        stats.single.captures += stats.single.n_t[t];
    }
    return stats;
}

nlohmann::json gof_json(const GofReport& report) {
    nlohmann::json j;
    j["X2"] = num_or_null(report.X2);
    j["df"] = report.df;
    if (report.p_value) j["p_value"] = *report.p_value;
    j["n_components"] = report.n_components;
    j["n_free"] = report.n_free;
    j["small_cells"] = report.small_cells;
    j["degenerate"] = report.degenerate;
    if (!report.note.empty()) j["note"] = report.note;
    nlohmann::json cells = nlohmann::json::array();
    for (const GofCell& cell : report.cells) {
        nlohmann::json c;
        c["component"] = cell.component;
        c["cell"] = cell.cell;
        c["observed"] = cell.observed;
        c["expected"] = cell.expected;
        c["contribution"] = num_or_null(cell.contribution);
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    return j;
}

nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const ComparisonRow& row : rows) {
        nlohmann::json j;
        j["model"] = row.model;
        j["delta_aic"] = row.delta_aic;
        j["aic"] = row.aic;
        j["loglik"] = row.loglik;
        j["N_hat"] = num_or_null(row.N_hat);
        if (row.N_lo) j["N_lo"] = num_or_null(*row.N_lo);
        if (row.N_hi) j["N_hi"] = num_or_null(*row.N_hi);
        if (row.X2) j["X2"] = num_or_null(*row.X2);
        if (row.p_value) j["p_value"] = *row.p_value;
        j["boundary"] = row.boundary;
        out.push_back(std::move(j));
    }
    return out;
}

nlohmann::json study_json(const StudySummary& summary) {
    nlohmann::json j;
    j["scenario"] = summary.scenario;
    j["replicates"] = summary.replicates;
    j["seed"] = summary.seed;
    nlohmann::json models = nlohmann::json::array();
    for (const ModelSummary& ms : summary.models) {
        nlohmann::json m;
        m["model"] = ms.model;
        m["requested"] = ms.requested;
        m["converged"] = ms.converged;
        m["boundary"] = ms.boundary;
        m["mean_N"] = num_or_null(ms.mean_N);
        m["median_N"] = num_or_null(ms.median_N);
        m["q1_N"] = num_or_null(ms.q1_N);
        m["q3_N"] = num_or_null(ms.q3_N);
        m["iqr_N"] = num_or_null(ms.iqr_N());
        m["sd_N"] = num_or_null(ms.sd_N);
        m["mc_se_N"] = num_or_null(ms.mc_se_N);
        models.push_back(std::move(m));
    }
    j["models"] = std::move(models);
    nlohmann::json precision = nlohmann::json::array();
    for (const PrecisionRow& row : precision_comparison(summary)) {
        nlohmann::json p;
        p["model"] = row.model;
        p["iqr"] = num_or_null(row.iqr);
        p["sd"] = num_or_null(row.sd);
        p["rank"] = row.rank;
        p["insufficient"] = row.insufficient;
        precision.push_back(std::move(p));
    }
    j["precision"] = std::move(precision);
    return j;
}

namespace {

nlohmann::json psi_matrix_json(const Grid2& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int s = 0; s < m.cols(); ++s) row.push_back(m(r, s));
        rows.push_back(std::move(row));
    }
    return rows;
}

Grid2 psi_matrix_from(const nlohmann::json& j, int R) {
    Grid2 m(R, R);
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < R; ++s) m(r, s) = j.at(r).at(s).get<double>();
    return m;
}

}  // namespace

nlohmann::json scenario_json(const Scenario& sc) {
    nlohmann::json j;
    j["name"] = sc.name;
    j["N"] = sc.N;
    j["T"] = sc.T;
    j["R"] = sc.R;
    j["alpha"] = sc.alpha;
    nlohmann::json psi = nlohmann::json::array();
    for (const Grid2& m : sc.psi) psi.push_back(psi_matrix_json(m));
    j["psi"] = std::move(psi);
    j["p"] = sc.p;
    if (!sc.c.empty()) j["c"] = sc.c;
    j["replicates"] = sc.replicates;
    j["seed"] = sc.seed;
    if (!sc.models.empty()) {
        nlohmann::json models = nlohmann::json::array();
        for (const StudyModel& m : sc.models) {
            nlohmann::json e;
            e["spec"] = spec_token(m.spec);
            e["approach"] = approach_str(m.approach);
            e["label"] = m.label;
            models.push_back(std::move(e));
        }
        j["models"] = std::move(models);
    }
    return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario sc;
    sc.name = j.value("name", std::string("custom"));
    sc.N = j.at("N").get<int>();
    sc.T = j.at("T").get<int>();
    sc.R = j.at("R").get<int>();
    sc.alpha = j.at("alpha").get<std::vector<double>>();
    const nlohmann::json& psi = j.at("psi");
    if (!psi.is_array() || psi.empty())
        throw std::invalid_argument("scenario psi must be a matrix or a list of matrices");
    if (psi.at(0).at(0).is_number()) {
        sc.psi = {psi_matrix_from(psi, sc.R)};
    } else {
        for (const nlohmann::json& m : psi) sc.psi.push_back(psi_matrix_from(m, sc.R));
    }
    sc.p = j.at("p").get<std::vector<double>>();
    if (j.contains("c")) sc.c = j["c"].get<std::vector<double>>();
    sc.replicates = j.value("replicates", 100);
    sc.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("models")) {
        for (const nlohmann::json& e : j["models"]) {
            StudyModel m;
            m.spec = parse_model_spec(e.at("spec").get<std::string>());
            m.approach = approach_from(e.value("approach", std::string("unconditional")));
            m.label = e.value("label", std::string());
            if (m.label.empty()) {
                m.label = m.spec.name();
                if (m.approach == Approach::Conditional) m.label += "-cond";
            }
            sc.models.push_back(std::move(m));
        }
    }
    validate_scenario(sc);
    return sc;
}

}  // namespace closedpop
