#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgq/classifier.hpp"
#include "dgq/mdp.hpp"

namespace dgq {

/// One logged SARSA tuple. For coarse datasets, action and action_next hold
/// category ids instead of fine action ids.
struct Transition {
    int episode_id = 0;
    int t = 0;
    StateId s = 0;
    int action = 0;
    double r = 0.0;
    StateId s_next = 0;
    int action_next = -1;  // -1 marks a terminal tuple (done == true)
    bool done = false;

    bool operator==(const Transition&) const = default;
};

struct Dataset {
    std::vector<Transition> transitions;
    std::uint64_t env_fingerprint = 0;
    std::string behavior_descriptor;
    bool coarse = false;

    bool operator==(const Dataset&) const = default;
};

/// Mixture of the value-iteration greedy policy (weight quality) and the
/// uniform policy, then epsilon-smoothed so every action keeps probability
/// >= epsilon/|A|. epsilon == 0 is rejected: full support is what keeps
/// one-step evaluation free of out-of-distribution actions.
Policy make_behavior_policy(const EnvSpec& env, double quality, double epsilon,
                            std::uint64_t seed);

/// Rolls `episodes` episodes of at most `horizon` steps; a_next is drawn by
/// the same behavior policy at s_next (on-policy SARSA pairs). Start states
/// are uniform over non-terminal states.
Dataset collect_dataset(const EnvSpec& env, const Classifier& cls, const Policy& pi_beta,
                        int episodes, int horizon, std::uint64_t seed);

/// Same tuples with actions replaced by their categories; rewards and the
/// episode structure are untouched.
Dataset coarsen_dataset(const Dataset& d, const Classifier& f);

/// Line-delimited text: a header carrying the env fingerprint and behavior
/// descriptor, then one tab-separated transition per line. Token-env actions
/// serialize as quoted space-joined token strings.
void save_dataset(const Dataset& d, const EnvSpec& env, const std::string& path);

/// Refuses to load a dataset whose fingerprint disagrees with env.
Dataset load_dataset(const std::string& path, const EnvSpec& env, const Classifier& cls);

}  // namespace dgq
