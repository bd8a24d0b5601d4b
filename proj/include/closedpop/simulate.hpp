#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/estimation.hpp"
#include "closedpop/model_spec.hpp"
#include "closedpop/ms_model.hpp"

namespace closedpop {

struct StudyModel {
    ModelSpec spec;
    Approach approach = Approach::Unconditional;
    std::string label;
};

// Generating process plus the study configuration built on it.
struct Scenario {
    std::string name = "custom";
    int N = 100;
    int T = 6;
    int R = 2;
    std::vector<double> alpha;   // initial state distribution
    std::vector<Grid2> psi;      // one matrix (tied across steps) or T-1 matrices
    std::vector<double> p;       // capture probability by state
    std::vector<double> c;       // recapture probability by state; empty means c = p
    int replicates = 100;
    std::uint64_t seed = 1;
    std::vector<StudyModel> models;  // empty means default_study_models(R)
};

void validate_scenario(const Scenario& scenario);

// Built-in scenarios lo2, hi2, lo3, hi3: N=100, T=6, two or three states,
// low- or high-mobility transition matrix, c = p. Throws on unknown names.
Scenario preset_scenario(const std::string& name);

// The standard study model list: the R-state Mh^R under both approaches, then
// the single-state competitors M0, Mt, Mb, Mh(2), Mh(3), Mh(be), Mh(b-be).
std::vector<StudyModel> default_study_models(int R);

// One dataset under the scenario's generating process: initial state from
// alpha, state chain by psi, capture with p before first capture and c after.
// Never-captured individuals are dropped. Byte-identical for equal seeds; the
// draws come from a fixed-order splitmix-seeded mt19937_64 stream, not from
// std::distribution objects.
Dataset simulate_dataset(const Scenario& scenario, std::uint64_t seed);

struct StudyRow {
    std::string scenario;
    int replicate = 0;  // 1-based
    std::string model;
    std::string param;
    double estimate = 0.0;
    bool converged = false;
    bool boundary = false;
};

struct ModelSummary {
    std::string model;
    int requested = 0;
    int converged = 0;  // replicates whose fit returned
    int boundary = 0;   // converged replicates with any boundary flag
    double mean_N = 0.0;
    double median_N = 0.0;
    double q1_N = 0.0;
    double q3_N = 0.0;
    double sd_N = 0.0;
    double mc_se_N = 0.0;  // sd / sqrt(converged)

    double iqr_N() const { return q3_N - q1_N; }
};

struct StudySummary {
    std::string scenario;
    int replicates = 0;
    std::uint64_t seed = 0;
    std::vector<StudyRow> rows;        // replicate-major, model order within
    std::vector<ModelSummary> models;  // scenario model order
};

// Replicate k draws its dataset from mix_seed(scenario seed, k) and each model
// fit from a further split of that stream, so results do not depend on
// execution order. run_study fans replicates out over OpenMP threads (capped
// by CLOSEDPOP_THREADS); run_study_serial is the plain loop; their results are
// identical.
StudySummary run_study(const Scenario& scenario);
StudySummary run_study_serial(const Scenario& scenario);

struct PrecisionRow {
    std::string model;
    double iqr = 0.0;
    double sd = 0.0;
    int rank = 0;            // 1 = most precise (smallest IQR, sd breaking ties)
    bool insufficient = false;  // fewer than two converged replicates
};

// Per-model spread of N_hat across replicates, ranked by precision.
std::vector<PrecisionRow> precision_comparison(const StudySummary& summary);

// scenario,replicate,model,param,estimate,converged,boundary; full precision.
std::string study_csv(const StudySummary& summary);

// Parallelism cap honoured by run_study: OpenMP's limit, further capped by the
// CLOSEDPOP_THREADS environment variable; 1 without OpenMP.
int study_threads();

}  // namespace closedpop
