#include "closedpop/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "closedpop/mathutil.hpp"

namespace closedpop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double next_uniform(std::mt19937_64& rng) {
    return (rng() >> 11) * 0x1.0p-53;
}

int sample_categorical(std::mt19937_64& rng, std::span<const double> probs) {
    const double u = next_uniform(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

void check_simplex(const std::vector<double>& v, int size, const std::string& what) {
    if (static_cast<int>(v.size()) != size)
        throw std::invalid_argument(what + " must have " + std::to_string(size) + " entries");
    double sum = 0.0;
    for (double x : v) {
        if (x < 0.0 || x > 1.0) throw std::invalid_argument(what + " entries must lie in [0,1]");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-8) throw std::invalid_argument(what + " must sum to 1");
}

Grid2 matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const int R = static_cast<int>(rows.size());
    Grid2 m(R, R);
    int r = 0;
    for (const auto& row : rows) {
        int s = 0;
        for (double x : row) m(r, s++) = x;
        ++r;
    }
    return m;
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return kNaN;
    if (sorted.size() == 1) return sorted.front();
    const double h = (sorted.size() - 1) * q;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double frac = h - i;
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct ReplicateOutcome {
    std::vector<StudyRow> rows;
    std::vector<double> N_hat;    // per model; NaN on failure
    std::vector<char> converged;  // fit returned
    std::vector<char> boundary;
};

ReplicateOutcome run_replicate(const Scenario& sc, int k) {
    ReplicateOutcome out;
    const int n_models = static_cast<int>(sc.models.size());
    out.N_hat.assign(n_models, kNaN);
    out.converged.assign(n_models, 0);
    out.boundary.assign(n_models, 0);

    const std::uint64_t rep_seed = mix_seed(sc.seed, static_cast<std::uint64_t>(k));
    const Dataset data = simulate_dataset(sc, rep_seed);

    SufficientStats stats;
    bool have_stats = false;
    if (data.n() > 0) {
        stats = sufficient_stats(data);
        have_stats = true;
    }

    for (int i = 0; i < n_models; ++i) {
        const StudyModel& m = sc.models[i];
        bool ok = false;
        if (have_stats) {
            FitOptions options;
            options.approach = m.approach;
            options.seed = mix_seed(rep_seed, 1000 + static_cast<std::uint64_t>(i));
            try {
                const FitResult fit = fit_model(stats, m.spec, options);
                out.N_hat[i] = fit.N_hat;
                out.converged[i] = 1;
                out.boundary[i] = fit.boundary_any;
                for (const ParamReport& pr : fit.params)
                    out.rows.push_back(
                        {sc.name, k + 1, m.label, pr.name, pr.estimate, true, pr.boundary});
                ok = true;
            } catch (const std::exception&) {
                // recorded below as a non-converged replicate
            }
        }
        if (!ok) out.rows.push_back({sc.name, k + 1, m.label, "N", kNaN, false, false});
    }
    return out;
}

StudySummary assemble(const Scenario& sc, std::vector<ReplicateOutcome> reps) {
    StudySummary summary;
    summary.scenario = sc.name;
    summary.replicates = sc.replicates;
    summary.seed = sc.seed;
    for (ReplicateOutcome& rep : reps)
        for (StudyRow& row : rep.rows) summary.rows.push_back(std::move(row));

    const int n_models = static_cast<int>(sc.models.size());
    for (int i = 0; i < n_models; ++i) {
        ModelSummary ms;
        ms.model = sc.models[i].label;
        ms.requested = sc.replicates;
        std::vector<double> values;
        for (const ReplicateOutcome& rep : reps) {
            if (!rep.converged[i]) continue;
            ++ms.converged;
            ms.boundary += rep.boundary[i];
            if (std::isfinite(rep.N_hat[i])) values.push_back(rep.N_hat[i]);
        }
        std::sort(values.begin(), values.end());
        if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            ms.mean_N = sum / values.size();
            ms.median_N = quantile(values, 0.5);
            ms.q1_N = quantile(values, 0.25);
            ms.q3_N = quantile(values, 0.75);
            double ss = 0.0;
            for (double v : values) ss += (v - ms.mean_N) * (v - ms.mean_N);
            ms.sd_N = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
            ms.mc_se_N = ms.sd_N / std::sqrt(static_cast<double>(values.size()));
        } else {
            ms.mean_N = ms.median_N = ms.q1_N = ms.q3_N = ms.sd_N = ms.mc_se_N = kNaN;
        }
        summary.models.push_back(std::move(ms));
    }
    return summary;
}

StudySummary run_study_impl(const Scenario& input, bool parallel) {
    Scenario sc = input;
    validate_scenario(sc);
    if (sc.models.empty()) sc.models = default_study_models(sc.R);

    std::vector<ReplicateOutcome> reps(sc.replicates);
#ifdef _OPENMP
    if (parallel && study_threads() > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(study_threads())
        for (int k = 0; k < sc.replicates; ++k) reps[k] = run_replicate(sc, k);
        return assemble(sc, std::move(reps));
    }
#else
    (void)parallel;
#endif
    for (int k = 0; k < sc.replicates; ++k) reps[k] = run_replicate(sc, k);
    return assemble(sc, std::move(reps));
}

}  // namespace

void validate_scenario(const Scenario& sc) {
    if (sc.N < 1) throw std::invalid_argument("scenario needs N >= 1");
    if (sc.T < 1) throw std::invalid_argument("scenario needs T >= 1");
    if (sc.R < 1) throw std::invalid_argument("scenario needs R >= 1");
    if (sc.replicates < 1) throw std::invalid_argument("scenario needs replicates >= 1");
    check_simplex(sc.alpha, sc.R, "alpha");
    if (static_cast<int>(sc.p.size()) != sc.R)
        throw std::invalid_argument("p must have one entry per state");
    for (double x : sc.p)
        if (x < 0.0 || x > 1.0) throw std::invalid_argument("p entries must lie in [0,1]");
    if (!sc.c.empty()) {
        if (static_cast<int>(sc.c.size()) != sc.R)
            throw std::invalid_argument("c must be empty or have one entry per state");
        for (double x : sc.c)
            if (x < 0.0 || x > 1.0) throw std::invalid_argument("c entries must lie in [0,1]");
    }
    if (sc.T > 1) {
        const int n_mats = static_cast<int>(sc.psi.size());
        if (n_mats != 1 && n_mats != sc.T - 1)
            throw std::invalid_argument("psi must hold one matrix or T-1 matrices");
        for (const Grid2& m : sc.psi) {
            if (m.rows() != sc.R || m.cols() != sc.R)
                throw std::invalid_argument("psi matrices must be R x R");
            for (int r = 0; r < sc.R; ++r) {
                double sum = 0.0;
                for (int s = 0; s < sc.R; ++s) {
                    if (m(r, s) < 0.0 || m(r, s) > 1.0)
                        throw std::invalid_argument("psi entries must lie in [0,1]");
                    sum += m(r, s);
                }
                if (std::abs(sum - 1.0) > 1e-8)
                    throw std::invalid_argument("psi rows must sum to 1");
            }
        }
    }
    for (const StudyModel& m : sc.models) {
        if (m.label.empty()) throw std::invalid_argument("study models need labels");
        if (m.spec.multi_state && m.spec.R != sc.R)
            throw std::invalid_argument("study model " + m.label + " expects R=" +
                                        std::to_string(m.spec.R) + ", scenario has R=" +
                                        std::to_string(sc.R));
    }
}

Scenario preset_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "lo2" || name == "hi2") {
        sc.R = 2;
        sc.alpha = {0.4, 0.6};
        sc.p = {0.15, 0.4};
        sc.psi = {name == "lo2" ? matrix({{0.7, 0.3}, {0.2, 0.8}})
                                : matrix({{0.1, 0.9}, {0.6, 0.4}})};
    } else if (name == "lo3" || name == "hi3") {
        sc.R = 3;
        sc.alpha = {0.33, 0.40, 0.27};
        sc.p = {0.15, 0.25, 0.4};
        sc.psi = {name == "lo3"
                      ? matrix({{0.76, 0.12, 0.12}, {0.1, 0.8, 0.1}, {0.15, 0.15, 0.7}})
                      : matrix({{0.28, 0.36, 0.36}, {0.3, 0.4, 0.3}, {0.45, 0.45, 0.1}})};
    } else {
        throw std::invalid_argument("unknown preset \"" + name +
                                    "\" (available: lo2, hi2, lo3, hi3)");
    }
    return sc;
}

std::vector<StudyModel> default_study_models(int R) {
    std::vector<StudyModel> models;
    const std::string ms_name = "Mh^" + std::to_string(R);
    models.push_back({parse_model_spec(ms_name), Approach::Unconditional, ms_name});
    models.push_back({parse_model_spec(ms_name), Approach::Conditional, ms_name + "-cond"});
    for (const char* name : {"M0", "Mt", "Mb", "Mh2", "Mh3", "Mhbe", "Mhb-be"}) {
        const ModelSpec spec = parse_model_spec(name);
        models.push_back({spec, Approach::Unconditional, spec.name()});
    }
    return models;
}

Dataset simulate_dataset(const Scenario& sc, std::uint64_t seed) {
    validate_scenario(sc);
    Dataset data;
    data.T = sc.T;
    data.R = sc.R;

    std::mt19937_64 rng(seed);
    const bool tied_psi = sc.psi.size() == 1;
    for (int i = 0; i < sc.N; ++i) {
        EncounterHistory history;
        history.entries.assign(sc.T, 0);
        int state = sample_categorical(rng, sc.alpha);
        bool seen = false;
        for (int t = 0; t < sc.T; ++t) {
            const double cap =
                seen && !sc.c.empty() ? sc.c[state] : sc.p[state];
            if (next_uniform(rng) < cap) {
                history.entries[t] = state + 1;
                seen = true;
            }
            if (t + 1 < sc.T) {
                const Grid2& m = sc.psi[tied_psi ? 0 : t];
                std::vector<double> row(sc.R);
                for (int s = 0; s < sc.R; ++s) row[s] = m(state, s);
                state = sample_categorical(rng, row);
            }
        }
        if (seen) data.histories.push_back(std::move(history));
    }
    return data;
}

StudySummary run_study(const Scenario& scenario) { return run_study_impl(scenario, true); }

StudySummary run_study_serial(const Scenario& scenario) {
    return run_study_impl(scenario, false);
}

std::vector<PrecisionRow> precision_comparison(const StudySummary& summary) {
    std::vector<PrecisionRow> rows;
    rows.reserve(summary.models.size());
    for (const ModelSummary& ms : summary.models) {
        PrecisionRow row;
        row.model = ms.model;
        row.iqr = ms.iqr_N();
        row.sd = ms.sd_N;
        row.insufficient = ms.converged < 2;
        rows.push_back(std::move(row));
    }
    std::vector<int> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&rows](int a, int b) {
        const bool fa = std::isfinite(rows[a].iqr), fb = std::isfinite(rows[b].iqr);
        if (fa != fb) return fa;  // models without a spread estimate rank last
        if (!fa) return false;
        if (rows[a].iqr != rows[b].iqr) return rows[a].iqr < rows[b].iqr;
        return rows[a].sd < rows[b].sd;
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        rows[order[pos]].rank = static_cast<int>(pos) + 1;
    return rows;
}

std::string study_csv(const StudySummary& summary) {
    std::ostringstream out;
    out.precision(17);
    out << "scenario,replicate,model,param,estimate,converged,boundary\n";
    for (const StudyRow& row : summary.rows)
        out << row.scenario << ',' << row.replicate << ',' << row.model << ',' << row.param << ','
            << row.estimate << ',' << (row.converged ? 1 : 0) << ',' << (row.boundary ? 1 : 0)
            << '\n';
    return out.str();
}

int study_threads() {
#ifdef _OPENMP
    int cap = omp_get_max_threads();
    if (const char* env = std::getenv("CLOSEDPOP_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed >= 1)
            cap = std::min(cap, static_cast<int>(parsed));
    }
    return std::max(cap, 1);
#else
    return 1;
#endif
}

}  // namespace closedpop
