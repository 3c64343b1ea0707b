#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "dgq/classifier.hpp"
#include "dgq/improve.hpp"
#include "dgq/mdp.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

struct TheoremReport {
    std::uint64_t env_fingerprint = 0;
    std::vector<int> L_values;
    std::map<int, ValueTable> values;  // L -> exact value of the induced policy
    bool monotone = false;
    double max_violation = 0.0;
};

/// Computes Q^pi exactly, then for each L the exact induced argmax-of-L
/// policy and its exact value; reports per-state monotonicity in L.
TheoremReport theorem1_curve(const EnvSpec& env, const Policy& pi, const std::vector<int>& Ls,
                             double tol);

struct Theorem2Report {
    std::vector<double> e_alpha;  // per-state E_{pi_alpha}[Q^{pi_eval}]
    std::vector<double> e_beta;
    std::vector<double> var_alpha;
    std::vector<double> var_beta;
    ValueTable v1;  // exact value of the policy induced from pi_alpha
    ValueTable v2;
    bool premise_ok = false;         // E_alpha >= E_beta at every state
    bool variance_close = false;     // side condition, reported separately
    double max_variance_gap = 0.0;
    bool conclusion_ok = false;      // v1 >= v2 - 1e-9 entrywise; only
                                     // meaningful when premise_ok
};

/// Checks the expected-Q premise per state and the variance-proximity side
/// condition, builds both induced policies, and compares their exact values.
/// When the premise fails at any state the conclusion is reported as
/// not-asserted (conclusion_ok stays false).
Theorem2Report theorem2_check(const EnvSpec& env, const Policy& pi_alpha, const Policy& pi_beta,
                              const Policy& pi_eval, int L, double tol = 1e-10,
                              double variance_tol = 1e-6);

/// Draws an action for a state; the two samplers compared by hypothesis_gap.
using CandidateSampler = std::function<ActionId(StateId, std::mt19937_64&)>;

struct GapReport {
    double e_a = 0.0;
    double e_b = 0.0;
    double gap = 0.0;  // (e_a - e_b) / |e_b|
    double se_a = 0.0;
    double se_b = 0.0;
};

/// Mean fitted-Q of n draws per state from each sampler, averaged over the
/// given states; reports the relative gap and per-sampler standard errors.
GapReport hypothesis_gap(const QFunction& q_fine, const CandidateSampler& sampler_a,
                         const CandidateSampler& sampler_b, const std::vector<StateId>& states,
                         int n, std::uint64_t seed);

/// Fraction of draws a from pi_psi(.|s, c) with F(a) == c over all
/// (state, category) pairs.
double conditioning_fidelity(const ControlGenerator& gen, const Classifier& f,
                             const std::vector<StateId>& states,
                             const std::vector<CategoryId>& categories, int n_per_pair,
                             std::uint64_t seed);

struct QErrorReport {
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

QErrorReport oracle_q_error(const QFunction& q_fitted, const ActionValueTable& q_exact);

}  // namespace dgq
