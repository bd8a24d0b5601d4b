#pragma once

#include <span>
#include <vector>

#include "closedpop/encounter_data.hpp"
#include "closedpop/model_spec.hpp"

namespace closedpop {

class Grid2 {
  public:
    Grid2() = default;
    Grid2(int rows, int cols, double init = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, init) {}

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Values indexed by (t1, t2, r, s) with 0 <= t1 < t2 < T; dense because T and R
// stay at desk scale.
class PairGrid {
  public:
    PairGrid() = default;
    PairGrid(int T, int R)
        : T_(T), R_(R), data_(static_cast<std::size_t>(T) * T * R * R, 0.0) {}

    double& at(int t1, int t2, int r, int s) {
        return data_[((static_cast<std::size_t>(t1) * T_ + t2) * R_ + r) * R_ + s];
    }
    double at(int t1, int t2, int r, int s) const {
        return data_[((static_cast<std::size_t>(t1) * T_ + t2) * R_ + r) * R_ + s];
    }
    int occasions() const { return T_; }
    int states() const { return R_; }

  private:
    int T_ = 0, R_ = 0;
    std::vector<double> data_;
};

// Natural-scale parameters of the multi-state closed-population model.
// Capture probabilities are state- and occasion-indexed even when a constraint
// ties them; apply_constraints expands the tied structure.
struct MsParams {
    int T = 0;
    int R = 0;
    Grid2 p;                    // T x R, first-capture probability p_t(r)
    Grid2 c;                    // T x R, recapture probability c_t(r); row 0 unused
    std::vector<Grid2> psi;     // T-1 matrices, psi[t](r,s) = move r -> s between t and t+1
    std::vector<double> alpha;  // initial state distribution
    double beta = 0.0;          // logit c = logit p + beta under behavioural dependence
    bool has_beta = false;
    double N = 0.0;             // population size, continuous, >= n
};

// Derived probabilities for one parameter point, shared by the likelihood, the
// goodness-of-fit cells, and the Horvitz-Thompson step.
struct MsProbs {
    PairGrid q_pre;    // unobserved-gap transition, pre first capture
    PairGrid q_post;   // same with recapture probabilities
    Grid2 zeta;        // T x R, first capture at (t, r)
    PairGrid next_obs; // next recapture at (t2, s) given observed at (t1, r)
    Grid2 chi;         // T x R, never seen again after (t, r); row T-1 is all 1
    double rho = 0.0;  // never observed during the study
};

// Gap probabilities for an individual not yet captured:
//   q(t1, t1+1, r, s) = psi_t1(r, s)
//   q(t1, t2, r, s)   = sum_u psi_t1(r, u) (1 - p_{t1+1}(u)) q(t1+1, t2, u, s)
PairGrid q_unmarked(const MsParams& params);
// Same recursion with (1 - c) at the skipped occasions.
PairGrid q_marked(const MsParams& params);

Grid2 first_capture_probs(const MsParams& params);   // zeta
PairGrid recapture_probs(const MsParams& params);    // O = q_post * c
Grid2 chi_probs(const MsParams& params);             // chi
double never_observed_prob(const MsParams& params);  // rho

MsProbs compute_probs(const MsParams& params);

// Log-likelihood over the sufficient statistics:
//   log [ N!/(N-n)! rho^(N-n) prod zeta^z prod chi^v prod O^pairs ]
// with the factorial ratio through log-gamma so N may be non-integer.
// Zero-count cells contribute nothing even when their probability underflows;
// a positive count on an underflowed probability yields -inf, never NaN.
double log_likelihood(const SufficientStats& stats, const MsParams& params);
double log_likelihood(const SufficientStats& stats, const MsParams& params, const MsProbs& probs);

// Likelihood of the observed histories given capture at least once: the N term
// is dropped and each history probability is divided by (1 - rho).
double conditional_log_likelihood(const SufficientStats& stats, const MsParams& params);

// Number of working-scale parameters for a multi-state spec, including the
// population-size coordinate nu = log(N - n).
int ms_working_dim(const ModelSpec& spec, int T);

// Bijection working -> natural. Layout, in order:
//   capture block   (logit p; p_t; p(r); or additive p_t(1) plus eta_2..eta_R)
//   beta            (when behavioural dependence is on)
//   psi rows        (multinomial logit, last state as reference)
//   alpha           (multinomial logit, last state as reference)
//   nu              (N = n + exp(nu))
MsParams apply_constraints(std::span<const double> working, const ModelSpec& spec, int T, int n);

// Inverse of apply_constraints; params must conform to the spec's tie structure.
std::vector<double> ms_to_working(const MsParams& params, const ModelSpec& spec, int n);

}  // namespace closedpop
