#include "closedpop/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace closedpop {

namespace {

constexpr double kAlpha = 1.0;  // reflection
constexpr double kGamma = 2.0;  // expansion
constexpr double kRho = 0.5;    // contraction
constexpr double kSigma = 0.5;  // shrink

struct Simplex {
    std::vector<std::vector<double>> x;
    std::vector<double> f;

    void sort_descending() {
        const std::size_t m = x.size();
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
        std::vector<std::vector<double>> xs(m);
        std::vector<double> fs(m);
        for (std::size_t i = 0; i < m; ++i) {
            xs[i] = std::move(x[order[i]]);
            fs[i] = f[order[i]];
        }
        x = std::move(xs);
        f = std::move(fs);
    }
};

double spread(const Simplex& s) {
    double lo = s.f.back(), hi = s.f.front();
    if (!std::isfinite(lo) || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    return hi - lo;
}

}  // namespace

NmResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                              std::span<const double> x0, const NmOptions& options) {
    const std::size_t d = x0.size();
    auto eval = [&](std::span<const double> x) {
        const double v = f(x);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    };

    NmResult result;
    result.x.assign(x0.begin(), x0.end());
    if (d == 0) {
        result.fmax = eval(result.x);
        result.converged = true;
        return result;
    }

    auto build = [&](const std::vector<double>& center, double step) {
        Simplex s;
        s.x.assign(d + 1, center);
        for (std::size_t i = 0; i < d; ++i) s.x[i + 1][i] += step;
        s.f.resize(d + 1);
        for (std::size_t i = 0; i <= d; ++i) s.f[i] = eval(s.x[i]);
        s.sort_descending();
        return s;
    };

    Simplex s = build(result.x, options.step);
    int iter = 0;
    int phase = 0;  // 0 = main run, 1 = restarted around the incumbent

    while (iter < options.max_iter) {
        if (spread(s) < options.ftol) {
            if (phase == 1) break;
            phase = 1;
            s = build(s.x.front(), options.step * 0.1);
            continue;
        }
        ++iter;

        // Centroid of all but the worst vertex.
        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) centroid[j] += s.x[i][j];
        }
        for (double& v : centroid) v /= static_cast<double>(d);

        const std::vector<double>& worst = s.x.back();
        std::vector<double> reflected(d);
        for (std::size_t j = 0; j < d; ++j)
            reflected[j] = centroid[j] + kAlpha * (centroid[j] - worst[j]);
        const double fr = eval(reflected);

        if (fr > s.f.front()) {
            std::vector<double> expanded(d);
            for (std::size_t j = 0; j < d; ++j)
                expanded[j] = centroid[j] + kGamma * (reflected[j] - centroid[j]);
            const double fe = eval(expanded);
            if (fe > fr) {
                s.x.back() = std::move(expanded);
                s.f.back() = fe;
            } else {
                s.x.back() = std::move(reflected);
                s.f.back() = fr;
            }
        } else if (fr > s.f[d - 1]) {
            s.x.back() = std::move(reflected);
            s.f.back() = fr;
        } else {
            std::vector<double> contracted(d);
            if (fr > s.f.back()) {
                for (std::size_t j = 0; j < d; ++j)
                    contracted[j] = centroid[j] + kRho * (reflected[j] - centroid[j]);
            } else {
                for (std::size_t j = 0; j < d; ++j)
                    contracted[j] = centroid[j] + kRho * (worst[j] - centroid[j]);
            }
            const double fc = eval(contracted);
            if (fc > std::max(fr, s.f.back())) {
                s.x.back() = std::move(contracted);
                s.f.back() = fc;
            } else {
                for (std::size_t i = 1; i <= d; ++i) {
                    for (std::size_t j = 0; j < d; ++j)
                        s.x[i][j] = s.x[0][j] + kSigma * (s.x[i][j] - s.x[0][j]);
                    s.f[i] = eval(s.x[i]);
                }
            }
        }
        s.sort_descending();
    }

    result.x = s.x.front();
    result.fmax = s.f.front();
    result.iterations = iter;
    result.converged = spread(s) < options.ftol;
    return result;
}

}  // namespace closedpop
