#include "dgq/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

std::pair<EnvSpec, Classifier> make_categorical_env(const CategoricalEnvConfig& cfg) {
    if (cfg.num_categories < 2 || cfg.actions_per_category < 2)
        throw std::invalid_argument("make_categorical_env: need >= 2 categories and >= 2 actions per category");
    if (cfg.num_states < 1) throw std::invalid_argument("make_categorical_env: num_states must be positive");
    if (cfg.category_value_spread < 0.0 || cfg.noise_scale < 0.0)
        throw std::invalid_argument("make_categorical_env: spread and noise must be >= 0");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0))
        throw std::invalid_argument("make_categorical_env: discount must lie in (0,1)");

    const int num_actions = cfg.num_categories * cfg.actions_per_category;

    EnvSpec env;
    env.num_states = cfg.num_states;
    env.num_actions = num_actions;
    env.num_categories = cfg.num_categories;
    env.discount = cfg.discount;
    env.horizon = cfg.horizon;
    env.terminal.assign(static_cast<size_t>(cfg.num_states), 0);
    env.reward.assign(static_cast<size_t>(cfg.num_states),
                      std::vector<double>(static_cast<size_t>(num_actions), 0.0));
    env.transition.assign(
        static_cast<size_t>(cfg.num_states),
        std::vector<std::vector<double>>(static_cast<size_t>(num_actions),
                                         std::vector<double>(static_cast<size_t>(cfg.num_states), 0.0)));

    std::mt19937_64 rng = make_rng(cfg.seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int s = 0; s < cfg.num_states; ++s) {
        std::vector<double> base(static_cast<size_t>(cfg.num_categories));
        for (int c = 0; c < cfg.num_categories; ++c)
            base[static_cast<size_t>(c)] = cfg.category_value_spread * unit(rng);
        for (int a = 0; a < num_actions; ++a) {
            int c = a / cfg.actions_per_category;
            env.reward[s][a] = base[static_cast<size_t>(c)] + cfg.noise_scale * (unit(rng) - 0.5);
        }
    }
    for (int s = 0; s < cfg.num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            double sum = 0.0;
            for (int sp = 0; sp < cfg.num_states; ++sp) {
                double w = 0.5 + unit(rng);
                env.transition[s][a][sp] = w;
                sum += w;
            }
            for (int sp = 0; sp < cfg.num_states; ++sp) env.transition[s][a][sp] /= sum;
        }
    }

    Classifier cls;
    cls.num_categories = cfg.num_categories;
    cls.assign.resize(static_cast<size_t>(num_actions));
    for (int a = 0; a < num_actions; ++a) cls.assign[static_cast<size_t>(a)] = a / cfg.actions_per_category;

    env.validate();
    return {std::move(env), std::move(cls)};
}

TokenEnvConfig default_token_config() {
    TokenEnvConfig cfg;
    cfg.num_topics = 3;
    auto add = [&](const std::string& tok, int topic) {
        cfg.tokens.push_back(tok);
        cfg.token_topic.push_back(topic);
    };
    // topic 0: food, topic 1: travel, topic 2: music
    for (const char* t : {"steak", "pasta", "cheese", "bread", "wine", "fruit"}) add(t, 0);
    for (const char* t : {"train", "beach", "city", "hotel", "island", "map"}) add(t, 1);
    for (const char* t : {"guitar", "song", "drums", "melody", "concert", "piano"}) add(t, 2);
    add("Wow", 0);
    add("Really", 1);
    cfg.surprise_tokens = {"Wow", "Really"};
    add("What", 0);
    add("How", 1);
    add("?", 2);
    cfg.question_tokens = {"What", "How"};
    add("i", 0);
    add("dont", 1);
    add("know", 2);
    add("ok", 0);
    cfg.dull_templates = {{"i", "dont", "know"}, {"ok"}};
    return cfg;
}

TokenEnvConfig load_vocab_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_vocab_file: cannot open " + path);
    TokenEnvConfig cfg;
    TokenSeq dull_tokens;
    std::string line;
    int max_topic = -1;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tok;
        int topic;
        if (!(ss >> tok)) continue;
        if (!(ss >> topic))
            throw std::runtime_error("load_vocab_file: missing topic tag at line " + std::to_string(lineno));
        cfg.tokens.push_back(tok);
        cfg.token_topic.push_back(topic);
        max_topic = std::max(max_topic, topic);
        std::string marker;
        while (ss >> marker) {
            if (marker == "SURPRISE")
                cfg.surprise_tokens.push_back(tok);
            else if (marker == "QUESTION")
                cfg.question_tokens.push_back(tok);
            else if (marker == "DULL")
                dull_tokens.push_back(tok);
            else
                throw std::runtime_error("load_vocab_file: unknown marker '" + marker + "' at line " +
                                         std::to_string(lineno));
        }
    }
    cfg.num_topics = max_topic + 1;
    if (!dull_tokens.empty()) cfg.dull_templates.push_back(dull_tokens);
    return cfg;
}

namespace {

void validate_token_config(const TokenEnvConfig& cfg) {
    if (cfg.tokens.size() != cfg.token_topic.size())
        throw std::invalid_argument("token env: every token needs exactly one topic tag");
    if (cfg.num_topics < 2) throw std::invalid_argument("token env: need >= 2 topics");
    if (cfg.dull_templates.empty()) throw std::invalid_argument("token env: dull templates must be non-empty");
    if (cfg.max_len < 1) throw std::invalid_argument("token env: max_len must be positive");
    if (cfg.context_window < 1) throw std::invalid_argument("token env: context_window must be positive");
    for (int t : cfg.token_topic)
        if (t < 0 || t >= cfg.num_topics) throw std::invalid_argument("token env: topic id out of range");
    for (const auto& s : cfg.surprise_tokens)
        for (const auto& q : cfg.question_tokens)
            if (s == q) throw std::invalid_argument("token env: surprise and question sets must be disjoint");
}

int topic_of_token(const TokenEnvConfig& cfg, const std::string& tok) {
    for (size_t i = 0; i < cfg.tokens.size(); ++i)
        if (cfg.tokens[i] == tok) return cfg.token_topic[i];
    throw std::domain_error("token env: token '" + tok + "' is not in the vocab");
}

}  // namespace

CategoryId classify_response(const TokenEnvConfig& cfg, const TokenSeq& response) {
    std::vector<int> counts(static_cast<size_t>(cfg.num_topics), 0);
    for (const auto& tok : response) ++counts[static_cast<size_t>(topic_of_token(cfg, tok))];
    int best = 0;
    for (int t = 1; t < cfg.num_topics; ++t)
        if (counts[static_cast<size_t>(t)] > counts[static_cast<size_t>(best)]) best = t;
    return best;
}

std::pair<EnvSpec, Classifier> make_token_env(const TokenEnvConfig& cfg) {
    validate_token_config(cfg);

    std::set<std::string> special;
    for (const auto& t : cfg.surprise_tokens) special.insert(t);
    for (const auto& t : cfg.question_tokens) special.insert(t);
    special.insert("?");
    for (const auto& tmpl : cfg.dull_templates)
        for (const auto& t : tmpl) special.insert(t);

    std::vector<std::vector<std::string>> ordinary(static_cast<size_t>(cfg.num_topics));
    for (size_t i = 0; i < cfg.tokens.size(); ++i)
        if (!special.count(cfg.tokens[i]))
            ordinary[static_cast<size_t>(cfg.token_topic[i])].push_back(cfg.tokens[i]);
    for (int t = 0; t < cfg.num_topics; ++t)
        if (ordinary[static_cast<size_t>(t)].empty())
            throw std::invalid_argument("token env: topic " + std::to_string(t) + " has no ordinary tokens");

    const bool have_qmark =
        std::find(cfg.tokens.begin(), cfg.tokens.end(), "?") != cfg.tokens.end();

    // Template grammar: [surprise] + body of topic tokens + [question mark],
    // body lengths spanning the length-reward buckets, plus the dull
    // templates themselves.
    std::vector<TokenSeq> responses;
    std::vector<int> base_lengths;
    for (int l : {3, 7, 12, 16})
        if (l <= cfg.max_len) base_lengths.push_back(l);
    if (base_lengths.empty()) base_lengths.push_back(cfg.max_len);

    for (int topic = 0; topic < cfg.num_topics; ++topic) {
        const auto& pool = ordinary[static_cast<size_t>(topic)];
        for (int len : base_lengths) {
            for (int sur = 0; sur < 2; ++sur) {
                for (int que = 0; que < (have_qmark ? 2 : 1); ++que) {
                    TokenSeq seq;
                    if (sur && !cfg.surprise_tokens.empty())
                        seq.push_back(cfg.surprise_tokens[static_cast<size_t>(topic) %
                                                          cfg.surprise_tokens.size()]);
                    for (int k = 0; k < len; ++k) seq.push_back(pool[static_cast<size_t>(k) % pool.size()]);
                    if (que) seq.push_back("?");
                    if (static_cast<int>(seq.size()) > cfg.max_len + 2) continue;
                    responses.push_back(std::move(seq));
                }
            }
        }
    }
    for (const auto& tmpl : cfg.dull_templates) responses.push_back(tmpl);

    if (static_cast<int>(responses.size()) > cfg.action_cap)
        throw std::invalid_argument(
            "token env: action space exceeds the cap of " + std::to_string(cfg.action_cap) +
            "; shrink the vocab, max_len, or topic count");

    const int num_actions = static_cast<int>(responses.size());
    int num_states = 1;
    for (int w = 0; w < cfg.context_window; ++w) num_states *= cfg.num_topics;

    Classifier cls;
    cls.num_categories = cfg.num_topics;
    cls.assign.resize(static_cast<size_t>(num_actions));
    for (int a = 0; a < num_actions; ++a)
        cls.assign[static_cast<size_t>(a)] = classify_response(cfg, responses[static_cast<size_t>(a)]);

    EnvSpec env;
    env.num_states = num_states;
    env.num_actions = num_actions;
    env.num_categories = cfg.num_topics;
    env.discount = cfg.discount;
    env.horizon = cfg.horizon;
    env.terminal.assign(static_cast<size_t>(num_states), 0);
    env.action_tokens = responses;
    env.reward.assign(static_cast<size_t>(num_states),
                      std::vector<double>(static_cast<size_t>(num_actions), 0.0));
    env.transition.assign(
        static_cast<size_t>(num_states),
        std::vector<std::vector<double>>(static_cast<size_t>(num_actions),
                                         std::vector<double>(static_cast<size_t>(num_states), 0.0)));

    for (int a = 0; a < num_actions; ++a) {
        double r = total_reward(responses[static_cast<size_t>(a)], cfg.weights, cfg.dull_templates,
                                cfg.surprise_tokens, cfg.question_tokens);
        for (int s = 0; s < num_states; ++s) env.reward[s][a] = r;
    }

    // Scripted partner: keeps the agent's response topic with
    // partner_stay_prob, otherwise picks a topic uniformly. The state window
    // shifts the partner's new topic in.
    const int topics = cfg.num_topics;
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            int agent_topic = cls.assign[static_cast<size_t>(a)];
            for (int nt = 0; nt < topics; ++nt) {
                double p = (1.0 - cfg.partner_stay_prob) / topics + (nt == agent_topic ? cfg.partner_stay_prob : 0.0);
                int sp = (s * topics + nt) % num_states;
                env.transition[s][a][sp] += p;
            }
        }
    }

    env.validate();
    return {std::move(env), std::move(cls)};
}

std::tuple<StateId, double, bool> env_step(const EnvSpec& env, StateId s, ActionId a,
                                           std::mt19937_64& rng) {
    if (s < 0 || s >= env.num_states) throw std::domain_error("env_step: state id out of range");
    if (a < 0 || a >= env.num_actions) throw std::domain_error("env_step: action id out of range");
    if (env.is_terminal(s)) throw std::domain_error("env_step: state is terminal");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    const auto& row = env.transition[s][a];
    double cum = 0.0;
    StateId sp = env.num_states - 1;
    for (int i = 0; i < env.num_states; ++i) {
        cum += row[static_cast<size_t>(i)];
        if (u < cum) {
            sp = i;
            break;
        }
    }
    return {sp, env.reward[s][a], env.is_terminal(sp)};
}

}  // namespace dgq
