#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "dgq/dataset.hpp"
#include "dgq/envs.hpp"
#include "dgq/serialize.hpp"
#include "test_util.hpp"

using namespace dgq;
using namespace testutil;

namespace {

Classifier trivial_classifier(const EnvSpec& env) {
    Classifier cls;
    cls.num_categories = 1;
    cls.assign.assign(static_cast<size_t>(env.num_actions), 0);
    return cls;
}

}  // namespace

TEST_CASE("behavior policy mixes greedy and uniform, epsilon-smoothed") {
    EnvSpec env = random_env(81, 5, 4);

    SUBCASE("quality 0 gives the uniform policy") {
        Policy pi = make_behavior_policy(env, 0.0, 0.2, 1);
        for (int s = 0; s < env.num_states; ++s)
            for (int a = 0; a < env.num_actions; ++a)
                CHECK(pi.probs[s][a] == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("quality 1 with small epsilon matches the greedy argmax") {
        auto [v, greedy] = value_iteration(env, 1e-10);
        Policy pi = make_behavior_policy(env, 1.0, 0.01, 1);
        for (int s = 0; s < env.num_states; ++s) {
            int am = 0;
            for (int a = 1; a < env.num_actions; ++a)
                if (pi.probs[s][a] > pi.probs[s][am]) am = a;
            CHECK(greedy.probs[s][am] == 1.0);
        }
    }

    SUBCASE("rows are distributions with full support") {
        Policy pi = make_behavior_policy(env, 0.5, 0.2, 1);
        for (int s = 0; s < env.num_states; ++s) {
            double sum = 0.0;
            for (int a = 0; a < env.num_actions; ++a) {
                CHECK(pi.probs[s][a] >= 0.2 / env.num_actions - 1e-12);
                sum += pi.probs[s][a];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }

    SUBCASE("epsilon 0 is rejected") {
        CHECK_THROWS_AS(make_behavior_policy(env, 0.5, 0.0, 1), std::invalid_argument);
    }
}

TEST_CASE("one episode of horizon one yields a single done transition") {
    EnvSpec env = random_env(83, 4, 3);
    Policy pi = Policy::uniform(4, 3);
    Dataset d = collect_dataset(env, trivial_classifier(env), pi, 1, 1, 7);
    REQUIRE(d.transitions.size() == 1);
    CHECK(d.transitions[0].done);
    CHECK(d.transitions[0].action_next == -1);
    CHECK(d.transitions[0].episode_id == 0);
    CHECK(d.transitions[0].t == 0);
}

TEST_CASE("collected tuples are SARSA-consistent within episodes") {
    EnvSpec env = random_env(85, 6, 4, 0.5, 1);
    Policy pi = make_behavior_policy(env, 0.5, 0.2, 2);
    Dataset d = collect_dataset(env, trivial_classifier(env), pi, 50, 8, 9);
    for (size_t i = 0; i + 1 < d.transitions.size(); ++i) {
        const auto& cur = d.transitions[i];
        const auto& nxt = d.transitions[i + 1];
        if (cur.episode_id != nxt.episode_id) continue;
        CHECK(nxt.t == cur.t + 1);
        CHECK(nxt.s == cur.s_next);
        CHECK(nxt.action == cur.action_next);  // stored a' is the action actually taken
        CHECK_FALSE(cur.done);
    }
    for (const auto& t : d.transitions) CHECK((t.done == (t.action_next == -1)));
}

TEST_CASE("state-action visit frequencies follow the behavior policy") {
    EnvSpec env = random_env(87, 2, 3);
    Policy pi = random_policy(env, 87);
    Dataset d = collect_dataset(env, trivial_classifier(env), pi, 100'000, 1, 3);
    std::map<std::pair<int, int>, long> counts;
    std::map<int, long> state_counts;
    for (const auto& t : d.transitions) {
        ++counts[{t.s, t.action}];
        ++state_counts[t.s];
    }
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 3; ++a) {
            long n = state_counts[s];
            double p = pi.probs[s][a];
            double freq = static_cast<double>(counts[{s, a}]) / n;
            double se = std::sqrt(p * (1 - p) / n);
            CHECK(std::abs(freq - p) <= 3.0 * se + 1e-9);
        }
}

TEST_CASE("collection is seed-deterministic") {
    EnvSpec env = random_env(89, 5, 4);
    Policy pi = make_behavior_policy(env, 0.5, 0.2, 4);
    Classifier cls = trivial_classifier(env);
    Dataset a = collect_dataset(env, cls, pi, 30, 6, 11);
    Dataset b = collect_dataset(env, cls, pi, 30, 6, 11);
    CHECK(a == b);
    Dataset c = collect_dataset(env, cls, pi, 30, 6, 12);
    CHECK(a.transitions != c.transitions);
}

TEST_CASE("coarsening maps actions to categories and keeps everything else") {
    CategoricalEnvConfig cfg;
    cfg.num_states = 4;
    cfg.num_categories = 3;
    cfg.actions_per_category = 5;
    auto [env, cls] = make_categorical_env(cfg);
    Policy pi = Policy::uniform(env.num_states, env.num_actions);
    Dataset d = collect_dataset(env, cls, pi, 40, 5, 13);
    Dataset dc = coarsen_dataset(d, cls);

    REQUIRE(dc.transitions.size() == d.transitions.size());
    CHECK(dc.coarse);
    double r_fine = 0.0, r_coarse = 0.0;
    for (size_t i = 0; i < d.transitions.size(); ++i) {
        const auto& f = d.transitions[i];
        const auto& c = dc.transitions[i];
        CHECK(c.action == f.action / 5);  // block classifier
        if (!f.done) CHECK(c.action_next == f.action_next / 5);
        CHECK(c.s == f.s);
        CHECK(c.s_next == f.s_next);
        CHECK(c.r == f.r);
        CHECK(c.done == f.done);
        CHECK(c.episode_id == f.episode_id);
        r_fine += f.r;
        r_coarse += c.r;
    }
    CHECK(r_fine == r_coarse);

    SUBCASE("coarsening commutes with truncation") {
        Dataset head = d;
        head.transitions.resize(17);
        Dataset lhs = coarsen_dataset(head, cls);
        Dataset rhs = dc;
        rhs.transitions.resize(17);
        CHECK(lhs.transitions == rhs.transitions);
    }

    SUBCASE("unclassifiable actions are reported with their index") {
        Dataset bad = d;
        bad.transitions[3].action = env.num_actions + 5;
        CHECK_THROWS_WITH_AS(coarsen_dataset(bad, cls), doctest::Contains("3"), std::domain_error);
    }
}

TEST_CASE("full-support coverage: defaults reach every state-category pair") {
    CategoricalEnvConfig cfg;
    cfg.seed = 3;
    auto [env, cls] = make_categorical_env(cfg);
    Policy pi = make_behavior_policy(env, 0.5, 0.2, 5);
    Dataset d = collect_dataset(env, cls, pi, 1250, 8, 17);  // 10,000 transitions
    REQUIRE(d.transitions.size() == 10'000);
    std::set<std::pair<int, int>> seen;
    for (const auto& t : d.transitions) seen.insert({t.s, cls.classify(t.action)});
    CHECK(static_cast<int>(seen.size()) == env.num_states * cls.num_categories);
}

TEST_CASE("datasets round-trip through their text format") {
    EnvSpec env = random_env(91, 6, 5);
    Policy pi = make_behavior_policy(env, 0.5, 0.2, 6);
    Classifier cls = trivial_classifier(env);
    Dataset d = collect_dataset(env, cls, pi, 200, 6, 19);
    REQUIRE(d.transitions.size() >= 1000);

    std::string path = "dataset_roundtrip.tsv";
    save_dataset(d, env, path);
    Dataset back = load_dataset(path, env, cls);
    CHECK(back == d);

    SUBCASE("saving twice is byte-identical") {
        std::string again = "dataset_roundtrip2.tsv";
        save_dataset(d, env, again);
        CHECK(read_file(path) == read_file(again));
        std::remove(again.c_str());
    }

    SUBCASE("loading against a different env is refused") {
        EnvSpec other = random_env(92, 6, 5);
        CHECK_THROWS_WITH_AS(load_dataset(path, other, cls), doctest::Contains("fingerprint"),
                             std::runtime_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("token-env datasets serialize actions as quoted token strings") {
    TokenEnvConfig cfg = default_token_config();
    auto [env, cls] = make_token_env(cfg);
    Policy pi = Policy::uniform(env.num_states, env.num_actions);
    Dataset d = collect_dataset(env, cls, pi, 10, 4, 23);
    std::string path = "dataset_tokens.tsv";
    save_dataset(d, env, path);
    std::string text = read_file(path);
    CHECK(text.find('"') != std::string::npos);
    Dataset back = load_dataset(path, env, cls);
    CHECK(back == d);
    std::remove(path.c_str());
}

TEST_CASE("a hand-written two-line file parses to the expected transitions") {
    EnvSpec env = random_env(93, 3, 2);
    Classifier cls = trivial_classifier(env);
    Dataset d = collect_dataset(env, cls, Policy::uniform(3, 2), 1, 2, 29);
    std::string path = "dataset_hand.tsv";
    save_dataset(d, env, path);
    // splice our own two rows under the valid header
    std::string text = read_file(path);
    std::string header = text.substr(0, text.find('\n') + 1);
    {
        std::ofstream out(path, std::ios::trunc);
        out << header;
        out << "0\t0\t1\t0\t0.25\t2\t1\t0\n";
        out << "0\t1\t2\t1\t-1.5\t0\t-\t1\n";
    }
    Dataset back = load_dataset(path, env, cls);
    REQUIRE(back.transitions.size() == 2);
    CHECK(back.transitions[0] == Transition{0, 0, 1, 0, 0.25, 2, 1, false});
    CHECK(back.transitions[1] == Transition{0, 1, 2, 1, -1.5, 0, -1, true});

    SUBCASE("malformed lines report their line number") {
        std::ofstream out(path, std::ios::app);
        out << "not a transition\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(path, env, cls), doctest::Contains("line"),
                             std::runtime_error);
    }
    std::remove(path.c_str());
}
