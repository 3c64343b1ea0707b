#include "dgq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

TheoremReport theorem1_curve(const EnvSpec& env, const Policy& pi, const std::vector<int>& Ls,
                             double tol) {
    if (Ls.empty() || !std::is_sorted(Ls.begin(), Ls.end()) || Ls.front() < 1)
        throw std::invalid_argument("theorem1_curve: Ls must be ascending and >= 1");

    TheoremReport rep;
    rep.L_values = Ls;

    ActionValueTable q = exact_action_values(env, pi, tol);
    for (int L : Ls) {
        Policy induced = induced_argmax_policy(pi, q, L);
        rep.values[L] = exact_policy_evaluation(env, induced, tol);
    }

    rep.max_violation = 0.0;
    for (size_t i = 1; i < Ls.size(); ++i) {
        const ValueTable& lo = rep.values[Ls[i - 1]];
        const ValueTable& hi = rep.values[Ls[i]];
        for (int s = 0; s < env.num_states; ++s)
            rep.max_violation = std::max(rep.max_violation, lo[s] - hi[s]);
    }
    rep.monotone = rep.max_violation <= 1e-9;
    return rep;
}

Theorem2Report theorem2_check(const EnvSpec& env, const Policy& pi_alpha, const Policy& pi_beta,
                              const Policy& pi_eval, int L, double tol, double variance_tol) {
    if (L < 1) throw std::invalid_argument("theorem2_check: L must be >= 1");

    ActionValueTable q = exact_action_values(env, pi_eval, tol);
    Theorem2Report rep;
    rep.e_alpha.resize(static_cast<size_t>(env.num_states));
    rep.e_beta.resize(static_cast<size_t>(env.num_states));
    rep.var_alpha.resize(static_cast<size_t>(env.num_states));
    rep.var_beta.resize(static_cast<size_t>(env.num_states));

    auto moments = [&](const Policy& pi, int s, double& mean, double& var) {
        mean = 0.0;
        for (int a = 0; a < env.num_actions; ++a) mean += pi.probs[s][a] * q[s][a];
        var = 0.0;
        for (int a = 0; a < env.num_actions; ++a) {
            double d = q[s][a] - mean;
            var += pi.probs[s][a] * d * d;
        }
    };

    rep.premise_ok = true;
    rep.max_variance_gap = 0.0;
    for (int s = 0; s < env.num_states; ++s) {
        moments(pi_alpha, s, rep.e_alpha[s], rep.var_alpha[s]);
        moments(pi_beta, s, rep.e_beta[s], rep.var_beta[s]);
        if (rep.e_alpha[s] < rep.e_beta[s] - 1e-12) rep.premise_ok = false;
        rep.max_variance_gap =
            std::max(rep.max_variance_gap, std::abs(rep.var_alpha[s] - rep.var_beta[s]));
    }
    rep.variance_close = rep.max_variance_gap <= variance_tol;

    rep.v1 = exact_policy_evaluation(env, induced_argmax_policy(pi_alpha, q, L), tol);
    rep.v2 = exact_policy_evaluation(env, induced_argmax_policy(pi_beta, q, L), tol);

    if (rep.premise_ok) {
        rep.conclusion_ok = true;
        for (int s = 0; s < env.num_states; ++s)
            if (rep.v1[s] < rep.v2[s] - 1e-9) rep.conclusion_ok = false;
    }
    return rep;
}

GapReport hypothesis_gap(const QFunction& q_fine, const CandidateSampler& sampler_a,
                         const CandidateSampler& sampler_b, const std::vector<StateId>& states,
                         int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("hypothesis_gap: n must be >= 1");
    if (states.empty()) throw std::invalid_argument("hypothesis_gap: no states");

    auto measure = [&](const CandidateSampler& sampler, std::uint64_t stream, double& mean,
                       double& se) {
        double sum = 0.0, sumsq = 0.0;
        long count = 0;
        for (size_t i = 0; i < states.size(); ++i) {
            std::mt19937_64 rng = make_rng(seed, stream * states.size() + i);
            for (int k = 0; k < n; ++k) {
                double v = q_fine.value(states[i], sampler(states[i], rng));
                sum += v;
                sumsq += v * v;
                ++count;
            }
        }
        mean = sum / count;
        double var = std::max(0.0, sumsq / count - mean * mean);
        se = std::sqrt(var / count);
    };

    GapReport rep;
    measure(sampler_a, 0, rep.e_a, rep.se_a);
    measure(sampler_b, 1, rep.e_b, rep.se_b);
    rep.gap = (rep.e_a - rep.e_b) / std::abs(rep.e_b);
    return rep;
}

double conditioning_fidelity(const ControlGenerator& gen, const Classifier& f,
                             const std::vector<StateId>& states,
                             const std::vector<CategoryId>& categories, int n_per_pair,
                             std::uint64_t seed) {
    if (n_per_pair < 1) throw std::invalid_argument("conditioning_fidelity: n_per_pair must be >= 1");
    long hits = 0, total = 0;
    std::uint64_t stream = 0;
    for (StateId s : states) {
        for (CategoryId c : categories) {
            std::mt19937_64 rng = make_rng(seed, stream++);
            for (int k = 0; k < n_per_pair; ++k) {
                ActionId a = gen.sample(s, c, rng);
                hits += f.classify(a) == c ? 1 : 0;
                ++total;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

QErrorReport oracle_q_error(const QFunction& q_fitted, const ActionValueTable& q_exact) {
    if (q_exact.size() != static_cast<size_t>(q_fitted.num_states) ||
        (q_fitted.num_states > 0 &&
         q_exact[0].size() != static_cast<size_t>(q_fitted.num_arms)))
        throw std::invalid_argument("oracle_q_error: domain mismatch");

    QErrorReport rep;
    double sum = 0.0;
    long count = 0;
    for (int s = 0; s < q_fitted.num_states; ++s)
        for (int a = 0; a < q_fitted.num_arms; ++a) {
            double e = std::abs(q_fitted.value(s, a) - q_exact[s][a]);
            rep.max_abs = std::max(rep.max_abs, e);
            sum += e;
            ++count;
        }
    rep.mean_abs = count ? sum / count : 0.0;
    return rep;
}

}  // namespace dgq
