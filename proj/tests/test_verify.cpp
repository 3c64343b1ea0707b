#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dgq/envs.hpp"
#include "dgq/verify.hpp"
#include "oracle_util.hpp"
#include "test_util.hpp"

using namespace dgq;
using namespace testutil;

namespace {

QFunction to_qfunction(const ActionValueTable& q, bool coarse = false) {
    QFunction f = QFunction::zeros(static_cast<int>(q.size()), static_cast<int>(q[0].size()), coarse);
    for (size_t s = 0; s < q.size(); ++s)
        for (size_t a = 0; a < q[s].size(); ++a) f.set(static_cast<int>(s), static_cast<int>(a), q[s][a]);
    f.sync_target();
    return f;
}

/// Shifts half the mass of each state's worst action (under Q^{pi_eval})
/// onto its best action; `up` = false shifts toward the worst instead.
Policy shifted_policy(const EnvSpec& env, const Policy& from, const ActionValueTable& q, bool up) {
    Policy out = from;
    for (int s = 0; s < env.num_states; ++s) {
        int lo = 0, hi = 0;
        for (int a = 1; a < env.num_actions; ++a) {
            if (q[s][a] < q[s][lo]) lo = a;
            if (q[s][a] > q[s][hi]) hi = a;
        }
        int src = up ? lo : hi;
        int dst = up ? hi : lo;
        double m = 0.5 * out.probs[s][static_cast<size_t>(src)];
        out.probs[s][static_cast<size_t>(src)] -= m;
        out.probs[s][static_cast<size_t>(dst)] += m;
    }
    return out;
}

}  // namespace

TEST_CASE("theorem 1 curve: L=1 reproduces the base value") {
    EnvSpec env = random_env(211, 6, 5);
    Policy pi = random_policy(env, 211);
    TheoremReport rep = theorem1_curve(env, pi, {1}, 1e-11);
    ValueTable base = exact_policy_evaluation(env, pi, 1e-11);
    for (int s = 0; s < env.num_states; ++s)
        CHECK(std::abs(rep.values.at(1)[static_cast<size_t>(s)] - base[static_cast<size_t>(s)]) <= 1e-9);
}

TEST_CASE("theorem 1 curve is monotone on random environments") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        EnvSpec env = random_env(220 + seed, 7, 9);
        Policy pi = random_policy(env, 220 + seed);
        TheoremReport rep = theorem1_curve(env, pi, {1, 2, 4, 8, 16}, 1e-11);
        CHECK(rep.monotone);
        CHECK(rep.max_violation <= 1e-9);
    }
}

TEST_CASE("uniform rewards leave nothing to improve") {
    EnvSpec env = random_env(229, 5, 6);
    for (auto& row : env.reward) row.assign(row.size(), 0.3);
    Policy pi = random_policy(env, 229);
    TheoremReport rep = theorem1_curve(env, pi, {1, 4, 16}, 1e-13);
    for (int s = 0; s < env.num_states; ++s) {
        double v1 = rep.values.at(1)[static_cast<size_t>(s)];
        CHECK(std::abs(rep.values.at(4)[static_cast<size_t>(s)] - v1) <= 1e-11);
        CHECK(std::abs(rep.values.at(16)[static_cast<size_t>(s)] - v1) <= 1e-11);
    }
}

TEST_CASE("theorem 2: identical samplers give identical values") {
    EnvSpec env = random_env(233, 6, 5);
    Policy pi = random_policy(env, 233);
    Theorem2Report rep = theorem2_check(env, pi, pi, pi, 4);
    CHECK(rep.premise_ok);
    for (int s = 0; s < env.num_states; ++s)
        CHECK(rep.v1[static_cast<size_t>(s)] == rep.v2[static_cast<size_t>(s)]);
    CHECK(rep.conclusion_ok);
}

TEST_CASE("theorem 2: a dominant sampler wins pointwise") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        EnvSpec env = random_env(240 + seed, 6, 7);
        Policy pi_eval = Policy::uniform(6, 7);
        ActionValueTable q = exact_action_values(env, pi_eval, 1e-11);
        Policy alpha = shifted_policy(env, pi_eval, q, true);
        Theorem2Report rep = theorem2_check(env, alpha, pi_eval, pi_eval, 5);
        CHECK(rep.premise_ok);
        CHECK(rep.conclusion_ok);
        for (int s = 0; s < env.num_states; ++s)
            CHECK(rep.v1[static_cast<size_t>(s)] >= rep.v2[static_cast<size_t>(s)] - 1e-9);
    }
}

TEST_CASE("theorem 2: premise violations are flagged, not asserted") {
    EnvSpec env = random_env(251, 6, 7);
    Policy pi_eval = Policy::uniform(6, 7);
    ActionValueTable q = exact_action_values(env, pi_eval, 1e-11);
    Policy alpha = shifted_policy(env, pi_eval, q, false);  // mass toward low Q
    Theorem2Report rep = theorem2_check(env, alpha, pi_eval, pi_eval, 5);
    CHECK_FALSE(rep.premise_ok);
    CHECK_FALSE(rep.conclusion_ok);  // not asserted under a broken premise
}

TEST_CASE("theorem 2 reports the variance side condition separately") {
    EnvSpec env = random_env(257, 5, 4);
    Policy pi = random_policy(env, 257);
    Theorem2Report rep = theorem2_check(env, pi, pi, pi, 3);
    CHECK(rep.variance_close);  // identical samplers, gap exactly zero
    CHECK(rep.max_variance_gap <= 1e-12);
}

TEST_CASE("hypothesis gap: point masses on known Q values give 0.25") {
    QFunction q = to_qfunction({{5.0, 4.0}});
    CandidateSampler a = [](StateId, std::mt19937_64&) { return 0; };
    CandidateSampler b = [](StateId, std::mt19937_64&) { return 1; };
    GapReport rep = hypothesis_gap(q, a, b, {0}, 100, 1);
    CHECK(rep.e_a == doctest::Approx(5.0));
    CHECK(rep.e_b == doctest::Approx(4.0));
    CHECK(rep.gap == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.se_a == 0.0);
    CHECK(rep.se_b == 0.0);
}

TEST_CASE("hypothesis gap: identical samplers sit within noise of zero") {
    EnvSpec env = random_env(263, 5, 6);
    Policy pi = random_policy(env, 263);
    QFunction q = to_qfunction(exact_action_values(env, pi, 1e-10));
    CandidateSampler s = [&](StateId st, std::mt19937_64& rng) {
        return sample_index(pi.probs[static_cast<size_t>(st)], rng);
    };
    GapReport rep = hypothesis_gap(q, s, s, {0, 1, 2, 3, 4}, 5000, 11);
    double se = std::sqrt(rep.se_a * rep.se_a + rep.se_b * rep.se_b);
    CHECK(std::abs(rep.e_a - rep.e_b) <= 3.0 * se + 1e-12);
}

TEST_CASE("conditioning fidelity matches the leakage arithmetic") {
    CategoricalEnvConfig cfg;
    cfg.num_states = 4;
    cfg.num_categories = 19;
    cfg.actions_per_category = 2;
    auto [env, cls] = make_categorical_env(cfg);
    std::vector<StateId> states = {0, 1, 2, 3};
    std::vector<CategoryId> cats;
    for (int c = 0; c < 19; ++c) cats.push_back(c);
    const int n_per = 300;
    const double n_total = static_cast<double>(n_per) * states.size() * cats.size();

    auto check_ratio = [&](double fidelity, std::uint64_t seed) {
        ControlGenerator gen = make_uniform_generator(env, cls, fidelity);
        double ratio = conditioning_fidelity(gen, cls, states, cats, n_per, seed);
        double expect = fidelity + (1.0 - fidelity) / 19.0;
        double se = std::sqrt(expect * (1.0 - expect) / n_total);
        CHECK(std::abs(ratio - expect) <= 3.0 * se + 1e-12);
    };

    CHECK(conditioning_fidelity(make_uniform_generator(env, cls, 1.0), cls, states, cats, 100, 3) ==
          1.0);
    check_ratio(0.0, 5);  // the unconditioned 1/19 baseline
    check_ratio(0.5, 7);
    check_ratio(0.8, 9);
}

TEST_CASE("oracle_q_error measures max and mean deviations") {
    ActionValueTable exact = {{1.0, 2.0}, {3.0, 4.0}};
    QFunction same = to_qfunction(exact);
    QErrorReport zero = oracle_q_error(same, exact);
    CHECK(zero.max_abs == 0.0);
    CHECK(zero.mean_abs == 0.0);

    QFunction offset = to_qfunction({{1.5, 2.5}, {3.5, 4.5}});
    QErrorReport off = oracle_q_error(offset, exact);
    CHECK(off.max_abs == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(off.mean_abs == doctest::Approx(0.5).epsilon(1e-12));

    ActionValueTable wrong_shape = {{1.0}};
    CHECK_THROWS_AS(oracle_q_error(same, wrong_shape), std::invalid_argument);
}
