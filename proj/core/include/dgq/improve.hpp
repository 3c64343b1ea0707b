#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "dgq/classifier.hpp"
#include "dgq/dataset.hpp"
#include "dgq/mdp.hpp"
#include "dgq/qlearn.hpp"

namespace dgq {

/// Category-conditioned action sampler. Each conditional row is a
/// distribution over the actions of the requested category; with fidelity f
/// a draw uses the conditional row with probability f and leaks to a uniform
/// draw over the whole action set with probability 1-f.
struct ControlGenerator {
    int num_states = 0;
    int num_actions = 0;
    int num_categories = 0;
    std::vector<CategoryId> assign;                       // classifier table
    std::vector<std::vector<std::vector<double>>> cond;   // [s][c] -> dist over actions
    double fidelity = 1.0;
    double temperature = 1.5;

    ActionId sample(StateId s, CategoryId c, std::mt19937_64& rng) const;
};

struct CandidateSet {
    StateId state = 0;
    std::vector<ActionId> actions;
};

enum class ImproveMode { standard, dual };

struct ImprovementConfig {
    int num_candidates = 5;
    ImproveMode mode = ImproveMode::standard;
    double cloning_smoothing = 0.0;
    std::uint64_t seed = 0;
};

/// Estimates pi_psi(a | s, category) from dataset counts within each
/// (state, category), additive-smoothed, then tempered (probabilities raised
/// to 1/temperature and renormalized). Unseen (state, category) pairs fall
/// back to uniform over the category block.
ControlGenerator fit_control_generator(const Dataset& d, const EnvSpec& env, const Classifier& f,
                                       double temperature, double smoothing);

/// A synthetic generator whose conditional rows are uniform over each
/// category block, with the given fidelity; used by the verify suite.
ControlGenerator make_uniform_generator(const EnvSpec& env, const Classifier& f, double fidelity);

/// Argmax category of the coarse critic at s, ties -> lowest id.
CategoryId best_category(const QFunction& q_coarse, StateId s, int num_categories);

/// n i.i.d. draws (with replacement) from a plain policy.
CandidateSet sample_candidates(const Policy& source, StateId s, int n, std::mt19937_64& rng);

/// n i.i.d. draws from a control generator conditioned on a category.
CandidateSet sample_candidates(const ControlGenerator& source, StateId s, CategoryId category,
                               int n, std::mt19937_64& rng);

/// Fine-critic argmax among the candidates, ties -> lowest action id.
ActionId best_action(const QFunction& q_fine, const CandidateSet& c);

/// Exact maximizer of the smoothed empirical log-likelihood:
/// pi(a|s) proportional to count(s,a) + smoothing; states absent from the
/// choices are uniform.
Policy clone_policy(const std::vector<std::pair<StateId, ActionId>>& choices, int num_states,
                    int num_actions, double smoothing);

/// One improvement pass over the dataset states. standard: candidates from
/// base; dual: best_category via q_coarse, then candidates from the control
/// generator conditioned on it. The chosen (s, a*) pairs are cloned into the
/// returned agent policy.
Policy improve_policy(const EnvSpec& env, const Dataset& d, const QFunction& q_fine,
                      const QFunction* q_coarse, const ControlGenerator* gen, const Policy& base,
                      const ImprovementConfig& cfg);

}  // namespace dgq
