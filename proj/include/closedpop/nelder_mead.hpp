#pragma once

#include <functional>
#include <span>
#include <vector>

namespace closedpop {

struct NmOptions {
    int max_iter = 2000;
    double ftol = 1e-9;   // stop when the simplex function spread falls below this
    double step = 0.5;    // initial simplex edge length
};

struct NmResult {
    std::vector<double> x;
    double fmax = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Maximizes f by the Nelder-Mead simplex method. Non-finite objective values
// are treated as -inf. After the first convergence the simplex is rebuilt
// tightly around the incumbent and the search resumes once.
NmResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                              std::span<const double> x0, const NmOptions& options = {});

}  // namespace closedpop
