#pragma once

#include <optional>
#include <string>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/estimation.hpp"

namespace closedpop {

struct GofCell {
    std::string component;
    std::string cell;
    double observed = 0.0;  // the never-observed cell holds N_hat - n, not an integer
    double expected = 0.0;
    double contribution = 0.0;
};

struct GofReport {
    std::vector<GofCell> cells;
    double X2 = 0.0;
    int df = 0;  // may be <= 0, in which case p_value is unset
    std::optional<double> p_value;
    int n_components = 0;  // component multinomials
    int n_free = 0;        // free parameters charged against the degrees of freedom
    int small_cells = 0;   // cells with 0 < expected < 5; reported, never pooled
    bool degenerate = false;  // an observed count fell in a zero-probability cell
    std::string note;
};

// Whether pearson_gof can build model-consistent cell expectations for this
// spec. Multi-state specs and the single-state M0/Mt/Mb qualify; the
// single-state heterogeneity mixtures do not (their per-individual capture
// probability is latent, so no per-cell expectation factorizes out).
bool gof_supported(const ModelSpec& spec);

// Pearson X2 over the multinomials the likelihood factorizes into:
//   (a) the first-capture split of all N individuals over {(t, r)} plus the
//       never-observed cell, with expected counts N_hat * zeta and N_hat * rho;
//   (b) for each (t1, r) with observed individuals and t1 before the last
//       occasion, their next-recapture split over {(t2, s) : t2 > t1} plus
//       never-seen-again, with expected counts m * O and m * chi.
// Cells with expected 0 and observed 0 are dropped; expected 0 with observed
// > 0 makes X2 infinite and flags the report. df = cells - components - free
// parameters. Small cells are counted, never pooled.
// Single-state fits are assessed on the state-collapsed cells.
GofReport pearson_gof(const SufficientStats& stats, const FitResult& fit);

// Assembles X2, df and the p-value from prepared cells.
GofReport pearson_from_cells(std::vector<GofCell> cells, int n_components, int n_free);

// One row per cell: component, cell-id, observed, expected, contribution.
std::string gof_csv(const GofReport& report);

}  // namespace closedpop
