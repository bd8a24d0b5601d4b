#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "closedpop/encounter_data.hpp"
#include "closedpop/estimation.hpp"
#include "closedpop/gof.hpp"
#include "closedpop/model_spec.hpp"
#include "closedpop/report.hpp"
#include "closedpop/simulate.hpp"

namespace {

using namespace closedpop;

struct Config {
    std::string data;
    std::string model;
    std::vector<std::string> models;
    int R = 0;  // 0 = infer (model's R when multi-state, else 1)
    std::uint64_t seed = 1;
    bool seed_given = false;
    int starts = 10;
    std::string approach = "unconditional";
    std::string out;
    std::string format = "table";
    std::string preset;
    std::string scenario_file;
    int replicates = 0;  // 0 = scenario default
    bool profile_ci = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

Approach approach_of(const Config& cfg) {
    return cfg.approach == "conditional" ? Approach::Conditional : Approach::Unconditional;
}

Dataset load_dataset(const Config& cfg, const ModelSpec* spec) {
    const std::string text = read_file(cfg.data);
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        Dataset d = dataset_from_json(nlohmann::json::parse(text));
        if (cfg.R > 0 && cfg.R != d.R)
            throw std::invalid_argument("--R " + std::to_string(cfg.R) +
                                        " disagrees with the dataset's R=" + std::to_string(d.R));
        return d;
    }
    const int R = cfg.R > 0 ? cfg.R : (spec && spec->multi_state ? spec->R : 1);
    return parse_dataset(text, R);
}

FitOptions fit_options(const Config& cfg) {
    FitOptions options;
    options.seed = cfg.seed;
    options.starts = cfg.starts;
    options.approach = approach_of(cfg);
    options.profile_ci = cfg.profile_ci;
    return options;
}

Scenario load_scenario(const Config& cfg) {
    if (!cfg.preset.empty() && !cfg.scenario_file.empty())
        throw std::invalid_argument("give either --preset or --scenario, not both");
    Scenario sc;
    if (!cfg.preset.empty())
        sc = preset_scenario(cfg.preset);
    else if (!cfg.scenario_file.empty())
        sc = scenario_from_json(nlohmann::json::parse(read_file(cfg.scenario_file)));
    else
        throw std::invalid_argument("give --preset (lo2, hi2, lo3, hi3) or --scenario FILE");
    if (cfg.replicates > 0) sc.replicates = cfg.replicates;
    if (cfg.seed_given) sc.seed = cfg.seed;
    return sc;
}

std::string params_csv(const FitResult& fit) {
    std::ostringstream out;
    out.precision(17);
    out << "param,estimate,se,lo,hi,boundary\n";
    for (const ParamReport& pr : fit.params) {
        out << pr.name << ',' << pr.estimate << ',';
        if (pr.se) out << *pr.se;
        out << ',';
        if (pr.lo) out << *pr.lo;
        out << ',';
        if (pr.hi) out << *pr.hi;
        out << ',' << (pr.boundary ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "model,delta_aic,aic,loglik,N_hat,N_lo,N_hi,X2,p_value,boundary\n";
    for (const ComparisonRow& row : rows) {
        out << row.model << ',' << row.delta_aic << ',' << row.aic << ',' << row.loglik << ','
            << row.N_hat << ',';
        if (row.N_lo) out << *row.N_lo;
        out << ',';
        if (row.N_hi) out << *row.N_hi;
        out << ',';
        if (row.X2) out << *row.X2;
        out << ',';
        if (row.p_value) out << *row.p_value;
        out << ',' << (row.boundary ? 1 : 0) << '\n';
    }
    return out.str();
}

int cmd_fit(const Config& cfg) {
    const ModelSpec spec = parse_model_spec(cfg.model);
    const Dataset data = load_dataset(cfg, &spec);
    const SufficientStats stats = sufficient_stats(data);
    const FitResult fit = fit_model(stats, spec, fit_options(cfg));

    if (cfg.format == "json")
        emit(cfg.out, dump(fit_json(fit)));
    else if (cfg.format == "csv")
        emit(cfg.out, params_csv(fit));
    else
        emit(cfg.out, fit_table(fit));
    return fit.boundary_any ? 2 : 0;
}

int cmd_simulate(const Config& cfg) {
    const Scenario sc = load_scenario(cfg);
    const std::uint64_t seed = cfg.seed_given ? cfg.seed : sc.seed;
    const Dataset data = simulate_dataset(sc, seed);
    if (cfg.format == "json")
        emit(cfg.out, dump(dataset_json(data)));
    else
        emit(cfg.out, format_dataset(data));
    return 0;
}

int cmd_gof(const Config& cfg) {
    const ModelSpec spec = parse_model_spec(cfg.model);
    const Dataset data = load_dataset(cfg, &spec);
    const SufficientStats stats = sufficient_stats(data);
    const FitResult fit = fit_model(stats, spec, fit_options(cfg));
    const GofReport report = pearson_gof(stats, fit);

    if (cfg.format == "json")
        emit(cfg.out, dump(gof_json(report)));
    else if (cfg.format == "csv")
        emit(cfg.out, gof_csv(report));
    else
        emit(cfg.out, gof_table(report));
    return fit.boundary_any ? 2 : 0;
}

int cmd_compare(const Config& cfg) {
    std::vector<ModelSpec> specs;
    specs.reserve(cfg.models.size());
    for (const std::string& text : cfg.models) specs.push_back(parse_model_spec(text));

    const ModelSpec* first_ms = nullptr;
    for (const ModelSpec& spec : specs)
        if (spec.multi_state) {
            first_ms = &spec;
            break;
        }
    const Dataset data = load_dataset(cfg, first_ms);
    const SufficientStats stats = sufficient_stats(data);

    std::vector<FitResult> fits;
    for (const ModelSpec& spec : specs) {
        try {
            fits.push_back(fit_model(stats, spec, fit_options(cfg)));
        } catch (const std::exception& e) {
            std::cerr << "warning: " << spec.name() << " skipped: " << e.what() << '\n';
        }
    }
    if (fits.empty()) throw std::runtime_error("no model could be fitted");
    const std::vector<ComparisonRow> rows = compare_models(stats, fits);

    if (cfg.format == "json")
        emit(cfg.out, dump(comparison_json(rows)));
    else if (cfg.format == "csv")
        emit(cfg.out, comparison_csv(rows));
    else
        emit(cfg.out, comparison_table(rows));
    for (const FitResult& fit : fits)
        if (fit.boundary_any) return 2;
    return 0;
}

int cmd_study(const Config& cfg) {
    const Scenario sc = load_scenario(cfg);
    const StudySummary summary = run_study(sc);

    if (!cfg.out.empty()) {
        emit(cfg.out, study_csv(summary));
        if (cfg.format == "json")
            std::cout << dump(study_json(summary));
        else
            std::cout << study_table(summary);
        return 0;
    }
    if (cfg.format == "csv")
        std::cout << study_csv(summary);
    else if (cfg.format == "json")
        std::cout << dump(study_json(summary));
    else
        std::cout << study_table(summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-population abundance estimation from multi-state encounter histories"};
    app.require_subcommand(1);
    Config cfg;

    const auto add_common = [&cfg](CLI::App* cmd, bool with_fit_flags) {
        cmd->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
        cmd->add_option("--out", cfg.out, "write output to this file instead of stdout");
        cmd->add_option("--format", cfg.format, "output format")
            ->check(CLI::IsMember({"table", "json", "csv"}))
            ->capture_default_str();
        if (with_fit_flags) {
            cmd->add_option("--starts", cfg.starts, "optimizer starts")
                ->check(CLI::PositiveNumber)
                ->capture_default_str();
            cmd->add_option("--approach", cfg.approach, "likelihood approach")
                ->check(CLI::IsMember({"unconditional", "conditional"}))
                ->capture_default_str();
        }
    };

    CLI::App* fit = app.add_subcommand("fit", "fit one model to encounter histories");
    fit->add_option("--data", cfg.data, "encounter-history file (text or JSON)")->required();
    fit->add_option("--model", cfg.model, "model spec, e.g. Mh^2, Mth^2, M0, Mh2, Mhbe")
        ->required();
    fit->add_option("--R", cfg.R, "number of states in the data (default: model's R)");
    fit->add_flag("--profile-ci", cfg.profile_ci, "profile-likelihood interval for N");
    add_common(fit, true);

    CLI::App* simulate = app.add_subcommand("simulate", "generate one dataset from a scenario");
    simulate->add_option("--preset", cfg.preset, "built-in scenario: lo2, hi2, lo3, hi3");
    simulate->add_option("--scenario", cfg.scenario_file, "scenario JSON file");
    add_common(simulate, false);

    CLI::App* gof = app.add_subcommand("gof", "Pearson goodness-of-fit for one fitted model");
    gof->add_option("--data", cfg.data, "encounter-history file (text or JSON)")->required();
    gof->add_option("--model", cfg.model, "model spec")->required();
    gof->add_option("--R", cfg.R, "number of states in the data (default: model's R)");
    add_common(gof, true);

    CLI::App* compare = app.add_subcommand("compare", "fit several models, rank by AIC");
    compare->add_option("--data", cfg.data, "encounter-history file (text or JSON)")->required();
    compare->add_option("--model", cfg.models, "model specs (repeat or comma-separate)")
        ->required()
        ->delimiter(',');
    compare->add_option("--R", cfg.R, "number of states in the data");
    compare->add_flag("--profile-ci", cfg.profile_ci, "profile-likelihood intervals for N");
    add_common(compare, true);

    CLI::App* study = app.add_subcommand("study", "simulate replicates and fit the model list");
    study->add_option("--preset", cfg.preset, "built-in scenario: lo2, hi2, lo3, hi3");
    study->add_option("--scenario", cfg.scenario_file, "scenario JSON file");
    study->add_option("--replicates", cfg.replicates, "replicate count override")
        ->check(CLI::PositiveNumber);
    add_common(study, false);

    CLI11_PARSE(app, argc, argv);
    for (const CLI::App* sub : app.get_subcommands())
        cfg.seed_given = cfg.seed_given || sub->count("--seed") > 0;

    try {
        if (fit->parsed()) return cmd_fit(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (gof->parsed()) return cmd_gof(cfg);
        if (compare->parsed()) return cmd_compare(cfg);
        if (study->parsed()) return cmd_study(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
