#include "dgq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dgq {

namespace {

constexpr double kRowTol = 1e-9;
constexpr long kMaxSweeps = 20'000'000;

void check_distribution(const std::vector<double>& row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTol)
        throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

}  // namespace

void EnvSpec::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw std::invalid_argument("invalid-env: empty state or action set");
    if (!(discount > 0.0 && discount < 1.0))
        throw std::invalid_argument("invalid-env: discount must lie strictly inside (0,1)");
    if (horizon <= 0) throw std::invalid_argument("invalid-env: horizon must be positive");
    if (transition.size() != static_cast<size_t>(num_states) ||
        reward.size() != static_cast<size_t>(num_states) ||
        terminal.size() != static_cast<size_t>(num_states))
        throw std::invalid_argument("invalid-env: table sizes disagree with num_states");
    for (int s = 0; s < num_states; ++s) {
        if (transition[s].size() != static_cast<size_t>(num_actions) ||
            reward[s].size() != static_cast<size_t>(num_actions))
            throw std::invalid_argument("invalid-env: table sizes disagree with num_actions");
        for (int a = 0; a < num_actions; ++a) {
            if (!std::isfinite(reward[s][a]))
                throw std::invalid_argument("invalid-env: non-finite reward");
            if (transition[s][a].size() != static_cast<size_t>(num_states))
                throw std::invalid_argument("invalid-env: transition row has wrong length");
            check_distribution(transition[s][a], "invalid-env");
            if (terminal[s]) {
                if (transition[s][a][s] != 1.0)
                    throw std::invalid_argument("invalid-env: terminal state must self-loop");
                if (reward[s][a] != 0.0)
                    throw std::invalid_argument("invalid-env: terminal state must have reward 0");
            }
        }
    }
    if (!action_tokens.empty() && action_tokens.size() != static_cast<size_t>(num_actions))
        throw std::invalid_argument("invalid-env: action_tokens size disagrees with num_actions");
}

Policy Policy::uniform(int states, int arms) {
    Policy pi;
    pi.probs.assign(static_cast<size_t>(states),
                    std::vector<double>(static_cast<size_t>(arms), 1.0 / arms));
    return pi;
}

void Policy::validate() const {
    for (const auto& row : probs) check_distribution(row, "invalid-policy");
}

namespace {

// One application of the Bellman operator for pi; terminal states stay at 0.
ValueTable apply_bellman(const EnvSpec& env, const Policy& pi, const ValueTable& v) {
    ValueTable out(static_cast<size_t>(env.num_states), 0.0);
    for (int s = 0; s < env.num_states; ++s) {
        if (env.is_terminal(s)) continue;
        double total = 0.0;
        for (int a = 0; a < env.num_actions; ++a) {
            double p = pi.probs[s][a];
            if (p == 0.0) continue;
            double next = 0.0;
            for (int sp = 0; sp < env.num_states; ++sp) {
                double t = env.transition[s][a][sp];
                if (t != 0.0 && !env.is_terminal(sp)) next += t * v[sp];
            }
            total += p * (env.reward[s][a] + env.discount * next);
        }
        out[static_cast<size_t>(s)] = total;
    }
    return out;
}

}  // namespace

double bellman_residual(const EnvSpec& env, const Policy& pi, const ValueTable& v) {
    ValueTable tv = apply_bellman(env, pi, v);
    double r = 0.0;
    for (int s = 0; s < env.num_states; ++s) r = std::max(r, std::abs(tv[s] - v[s]));
    return r;
}

ValueTable exact_policy_evaluation(const EnvSpec& env, const Policy& pi, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("exact_policy_evaluation: tol must be > 0");
    env.validate();
    if (pi.num_states() != env.num_states || pi.num_arms() != env.num_actions)
        throw std::invalid_argument("invalid-policy: shape disagrees with env");
    pi.validate();

    ValueTable v(static_cast<size_t>(env.num_states), 0.0);
    for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
        ValueTable next = apply_bellman(env, pi, v);
        double diff = 0.0;
        for (int s = 0; s < env.num_states; ++s) diff = std::max(diff, std::abs(next[s] - v[s]));
        v = std::move(next);
        // residual(v_{k+1}) <= gamma * ||v_{k+1} - v_k||_inf
        if (env.discount * diff <= tol) return v;
    }
    throw std::runtime_error("exact_policy_evaluation: did not reach tolerance");
}

ActionValueTable exact_action_values(const EnvSpec& env, const Policy& pi, double tol) {
    ValueTable v = exact_policy_evaluation(env, pi, tol);
    ActionValueTable q(static_cast<size_t>(env.num_states),
                       std::vector<double>(static_cast<size_t>(env.num_actions), 0.0));
    for (int s = 0; s < env.num_states; ++s) {
        for (int a = 0; a < env.num_actions; ++a) {
            if (env.is_terminal(s)) continue;
            double next = 0.0;
            for (int sp = 0; sp < env.num_states; ++sp) {
                double t = env.transition[s][a][sp];
                if (t != 0.0 && !env.is_terminal(sp)) next += t * v[sp];
            }
            q[s][a] = env.reward[s][a] + env.discount * next;
        }
    }
    return q;
}

std::pair<ValueTable, Policy> value_iteration(const EnvSpec& env, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be > 0");
    env.validate();

    ValueTable v(static_cast<size_t>(env.num_states), 0.0);
    auto backup = [&](const ValueTable& cur) {
        ValueTable out(static_cast<size_t>(env.num_states), 0.0);
        for (int s = 0; s < env.num_states; ++s) {
            if (env.is_terminal(s)) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < env.num_actions; ++a) {
                double next = 0.0;
                for (int sp = 0; sp < env.num_states; ++sp) {
                    double t = env.transition[s][a][sp];
                    if (t != 0.0 && !env.is_terminal(sp)) next += t * cur[sp];
                }
                best = std::max(best, env.reward[s][a] + env.discount * next);
            }
            out[static_cast<size_t>(s)] = best;
        }
        return out;
    };

    for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
        ValueTable next = backup(v);
        double diff = 0.0;
        for (int s = 0; s < env.num_states; ++s) diff = std::max(diff, std::abs(next[s] - v[s]));
        v = std::move(next);
        if (env.discount * diff <= tol) break;
    }

    Policy greedy;
    greedy.probs.assign(static_cast<size_t>(env.num_states),
                        std::vector<double>(static_cast<size_t>(env.num_actions), 0.0));
    for (int s = 0; s < env.num_states; ++s) {
        int best_a = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < env.num_actions; ++a) {
            double next = 0.0;
            for (int sp = 0; sp < env.num_states; ++sp) {
                double t = env.transition[s][a][sp];
                if (t != 0.0 && !env.is_terminal(sp)) next += t * v[sp];
            }
            double qa = env.reward[s][a] + env.discount * next;
            if (qa > best) {  // strict: ties keep the lowest action id
                best = qa;
                best_a = a;
            }
        }
        greedy.probs[s][best_a] = 1.0;
    }
    return {std::move(v), std::move(greedy)};
}

Policy induced_argmax_policy(const Policy& pi, const ActionValueTable& q, int L) {
    if (L < 1) throw std::invalid_argument("induced_argmax_policy: L must be >= 1");
    if (q.size() != static_cast<size_t>(pi.num_states()))
        throw std::invalid_argument("induced_argmax_policy: q shape disagrees with pi");

    const int arms = pi.num_arms();
    Policy out;
    out.probs.assign(pi.probs.size(), std::vector<double>(static_cast<size_t>(arms), 0.0));

    std::vector<int> order(static_cast<size_t>(arms));
    for (int s = 0; s < pi.num_states(); ++s) {
        const auto& row = pi.probs[s];
        const auto& qs = q[static_cast<size_t>(s)];
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return qs[a] < qs[b]; });

        double below = 0.0;
        size_t i = 0;
        while (i < order.size()) {
            // group of Q-ties
            size_t j = i;
            double group_mass = 0.0;
            while (j < order.size() && qs[order[j]] == qs[order[i]]) {
                group_mass += row[order[j]];
                ++j;
            }
            if (group_mass > 0.0) {
                double mass = std::pow(below + group_mass, L) - std::pow(below, L);
                for (size_t k = i; k < j; ++k) {
                    int a = order[k];
                    out.probs[s][a] = row[a] / group_mass * mass;
                }
            }
            below += group_mass;
            i = j;
        }
    }
    return out;
}

}  // namespace dgq
