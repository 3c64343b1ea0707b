#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "dgq/classifier.hpp"
#include "dgq/mdp.hpp"
#include "dgq/rewards.hpp"

namespace dgq {

/// Category-structured synthetic MDP: rewards separate across categories by
/// ~category_value_spread and vary within a category by ~noise_scale.
struct CategoricalEnvConfig {
    int num_states = 10;
    int num_categories = 19;
    int actions_per_category = 2;
    double category_value_spread = 1.0;
    double noise_scale = 0.1;
    double discount = 0.5;
    int horizon = 100;
    std::uint64_t seed = 0;
};

/// Token-sequence dialogue MDP. States are windows of recent partner-topic
/// ids; actions are template responses built from the vocab.
struct TokenEnvConfig {
    std::vector<std::string> tokens;  // vocab
    std::vector<int> token_topic;     // topic id per vocab token
    std::vector<std::string> surprise_tokens;
    std::vector<std::string> question_tokens;
    std::vector<TokenSeq> dull_templates;
    int max_len = 16;
    int num_topics = 3;
    int context_window = 1;
    int action_cap = 10'000;
    int horizon = 10;
    double discount = 0.5;
    double partner_stay_prob = 0.6;  // scripted partner keeps the agent's topic
    RewardWeights weights;
    std::uint64_t seed = 0;
};

/// Small built-in vocabulary (3 topics, surprise/question words, two dull
/// templates); the default token environment for tests and the harness.
TokenEnvConfig default_token_config();

/// Plain-text vocab, one token per line: token, topic id, then optional
/// SURPRISE / QUESTION / DULL markers, whitespace-separated. DULL-marked
/// tokens form one fallback dull template (in file order) when cfg carries
/// no explicit templates.
TokenEnvConfig load_vocab_file(const std::string& path);

std::pair<EnvSpec, Classifier> make_categorical_env(const CategoricalEnvConfig& cfg);

std::pair<EnvSpec, Classifier> make_token_env(const TokenEnvConfig& cfg);

/// Classify a raw token sequence by majority topic (ties -> lowest topic id).
CategoryId classify_response(const TokenEnvConfig& cfg, const TokenSeq& response);

/// Samples s' from T(.|s,a); r = R(s,a); done iff s' is terminal. The
/// horizon cap is tracked by the caller.
std::tuple<StateId, double, bool> env_step(const EnvSpec& env, StateId s, ActionId a,
                                           std::mt19937_64& rng);

}  // namespace dgq
