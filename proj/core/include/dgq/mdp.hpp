#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dgq {

using StateId = int;
using ActionId = int;
using CategoryId = int;

/// A value per state.
using ValueTable = std::vector<double>;

/// A value per (state, action) pair, indexed [state][action].
using ActionValueTable = std::vector<std::vector<double>>;

/// Finite MDP. Transitions and rewards are dense tables; terminal states
/// self-loop with reward 0 and bootstrap with value 0.
struct EnvSpec {
    int num_states = 0;
    int num_actions = 0;
    int num_categories = 0;
    double discount = 0.5;
    int horizon = 100;
    std::vector<std::vector<std::vector<double>>> transition;  // [s][a] -> dist over s'
    std::vector<std::vector<double>> reward;                   // [s][a]
    std::vector<char> terminal;                                // size num_states

    // Token environments carry the concrete token sequence per action id;
    // empty for purely categorical environments.
    std::vector<std::vector<std::string>> action_tokens;

    bool is_terminal(StateId s) const { return terminal[static_cast<size_t>(s)] != 0; }
    bool has_tokens() const { return !action_tokens.empty(); }

    /// Throws std::invalid_argument on any structural violation
    /// (non-stochastic transition rows, discount outside (0,1),
    /// non-finite rewards, terminal states that do not self-loop).
    void validate() const;
};

/// Per-state categorical distribution over actions (or categories, for a
/// coarse policy). Rows must be stochastic over the arm count they cover.
struct Policy {
    std::vector<std::vector<double>> probs;  // [s] -> dist over arms

    int num_states() const { return static_cast<int>(probs.size()); }
    int num_arms() const { return probs.empty() ? 0 : static_cast<int>(probs[0].size()); }

    static Policy uniform(int states, int arms);

    /// Throws std::invalid_argument if any row is not a distribution.
    void validate() const;
};

/// Iterates the Bellman operator for policy pi until the max-norm Bellman
/// residual of the returned table is <= tol.
ValueTable exact_policy_evaluation(const EnvSpec& env, const Policy& pi, double tol);

/// Q^pi(s,a) = R(s,a) + gamma * sum_s' T(s'|s,a) V^pi(s'), with V^pi from
/// exact_policy_evaluation at the same tolerance.
ActionValueTable exact_action_values(const EnvSpec& env, const Policy& pi, double tol);

/// Optimal value function and a deterministic greedy policy (ties broken by
/// lowest action id).
std::pair<ValueTable, Policy> value_iteration(const EnvSpec& env, double tol);

/// Exact distribution of "draw L i.i.d. actions from pi, play the Q-argmax,
/// ties among drawn candidates broken uniformly". Per state, an action a in
/// a tie group g with group mass p_g and below-group c.d.f. mass c receives
///   P(a) = (p_a / p_g) * ((c + p_g)^L - c^L).
Policy induced_argmax_policy(const Policy& pi, const ActionValueTable& q, int L);

/// Max-norm Bellman residual of v under pi; used by tests and the verify
/// suite.
double bellman_residual(const EnvSpec& env, const Policy& pi, const ValueTable& v);

}  // namespace dgq
