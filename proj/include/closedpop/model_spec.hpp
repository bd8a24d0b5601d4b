#pragma once

#include <string>

namespace closedpop {

enum class SsVariant { M0, Mt, Mb, MhFinite, MhBeta, MhPointBeta };

// Which likelihood to fit. Multi-state specs carry the number of states R and
// the dependence flags; single-state specs carry the variant (and mixture
// arity for the finite mixtures).
struct ModelSpec {
    bool multi_state = false;

    // multi-state
    int R = 1;
    bool time = false;       // per-occasion capture probabilities
    bool behaviour = false;  // recapture offset beta on the logit scale
    bool state = false;      // per-state capture probabilities
    bool psi_time_varying = false;  // default: one transition matrix for all steps

    // single-state
    SsVariant variant = SsVariant::M0;
    int mixture_k = 0;

    // Canonical display name, e.g. "Mh^2", "Mth^2", "Mh(be)".
    std::string name() const;
};

// Grammar: "M" + letters + optional "^R".
//   Multi-state: letters are "0" or an ordered subset of {t,b,h}, then "^R"
//   with R >= 1, e.g. "M0^3", "Mh^2", "Mth^2", "Mtbh^2".
//   Single-state: "M0", "Mt", "Mb", "Mh2"/"Mh3"/... (finite mixture arity),
//   "Mhbe" (beta), "Mhb-be" (point mass + beta).
// Throws std::invalid_argument on anything else, including "^R" attached to a
// mixture spec and single-state multi-letter combinations (Mtb has no
// identifiability constraint here and is not fittable).
ModelSpec parse_model_spec(const std::string& text);

}  // namespace closedpop
