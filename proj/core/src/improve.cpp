#include "dgq/improve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

namespace {

int draw(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double cum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

ActionId ControlGenerator::sample(StateId s, CategoryId c, std::mt19937_64& rng) const {
    if (s < 0 || s >= num_states) throw std::domain_error("ControlGenerator: state out of range");
    if (c < 0 || c >= num_categories)
        throw std::domain_error("ControlGenerator: category out of range");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (fidelity < 1.0 && unit(rng) >= fidelity) {
        // leakage: uniform over the whole action set
        std::uniform_int_distribution<int> any(0, num_actions - 1);
        return any(rng);
    }
    return draw(cond[static_cast<size_t>(s)][static_cast<size_t>(c)], rng);
}

ControlGenerator fit_control_generator(const Dataset& d, const EnvSpec& env, const Classifier& f,
                                       double temperature, double smoothing) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("fit_control_generator: temperature must be > 0");
    if (smoothing < 0.0) throw std::invalid_argument("fit_control_generator: smoothing must be >= 0");
    if (d.coarse) throw std::invalid_argument("fit_control_generator: needs a fine dataset");

    ControlGenerator gen;
    gen.num_states = env.num_states;
    gen.num_actions = env.num_actions;
    gen.num_categories = f.num_categories;
    gen.assign = f.assign;
    gen.temperature = temperature;
    gen.fidelity = 1.0;
    gen.cond.assign(static_cast<size_t>(env.num_states),
                    std::vector<std::vector<double>>(
                        static_cast<size_t>(f.num_categories),
                        std::vector<double>(static_cast<size_t>(env.num_actions), 0.0)));

    std::vector<std::vector<std::vector<double>>> counts = gen.cond;
    for (const auto& t : d.transitions) counts[t.s][f.classify(t.action)][t.action] += 1.0;

    for (int s = 0; s < env.num_states; ++s) {
        for (int c = 0; c < f.num_categories; ++c) {
            auto block = f.members(c);
            double total = 0.0;
            for (ActionId a : block) total += counts[s][c][a] + smoothing;
            auto& row = gen.cond[static_cast<size_t>(s)][static_cast<size_t>(c)];
            if (total <= 0.0) {
                for (ActionId a : block) row[static_cast<size_t>(a)] = 1.0 / block.size();
                continue;
            }
            double norm = 0.0;
            for (ActionId a : block) {
                double p = (counts[s][c][a] + smoothing) / total;
                double tempered = p > 0.0 ? std::pow(p, 1.0 / temperature) : 0.0;
                row[static_cast<size_t>(a)] = tempered;
                norm += tempered;
            }
            if (norm <= 0.0) {
                for (ActionId a : block) row[static_cast<size_t>(a)] = 1.0 / block.size();
            } else {
                for (ActionId a : block) row[static_cast<size_t>(a)] /= norm;
            }
        }
    }
    return gen;
}

ControlGenerator make_uniform_generator(const EnvSpec& env, const Classifier& f, double fidelity) {
    if (fidelity < 0.0 || fidelity > 1.0)
        throw std::invalid_argument("make_uniform_generator: fidelity must lie in [0,1]");
    ControlGenerator gen;
    gen.num_states = env.num_states;
    gen.num_actions = env.num_actions;
    gen.num_categories = f.num_categories;
    gen.assign = f.assign;
    gen.fidelity = fidelity;
    gen.cond.assign(static_cast<size_t>(env.num_states),
                    std::vector<std::vector<double>>(
                        static_cast<size_t>(f.num_categories),
                        std::vector<double>(static_cast<size_t>(env.num_actions), 0.0)));
    for (int s = 0; s < env.num_states; ++s)
        for (int c = 0; c < f.num_categories; ++c) {
            auto block = f.members(c);
            for (ActionId a : block)
                gen.cond[static_cast<size_t>(s)][static_cast<size_t>(c)][static_cast<size_t>(a)] =
                    1.0 / block.size();
        }
    return gen;
}

CategoryId best_category(const QFunction& q_coarse, StateId s, int num_categories) {
    if (s < 0 || s >= q_coarse.num_states || num_categories > q_coarse.num_arms)
        throw std::domain_error("best_category: entry outside the coarse critic domain");
    CategoryId best = 0;
    for (int c = 1; c < num_categories; ++c)
        if (q_coarse.value(s, c) > q_coarse.value(s, best)) best = c;
    return best;
}

CandidateSet sample_candidates(const Policy& source, StateId s, int n, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("sample_candidates: n must be >= 1");
    CandidateSet out;
    out.state = s;
    out.actions.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.actions.push_back(draw(source.probs[s], rng));
    return out;
}

CandidateSet sample_candidates(const ControlGenerator& source, StateId s, CategoryId category,
                               int n, std::mt19937_64& rng) {
    if (n < 1) throw std::invalid_argument("sample_candidates: n must be >= 1");
    CandidateSet out;
    out.state = s;
    out.actions.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.actions.push_back(source.sample(s, category, rng));
    return out;
}

ActionId best_action(const QFunction& q_fine, const CandidateSet& c) {
    if (c.actions.empty()) throw std::invalid_argument("best_action: empty candidate set");
    ActionId best = c.actions[0];
    for (ActionId a : c.actions) {
        double qa = q_fine.value(c.state, a);
        double qb = q_fine.value(c.state, best);
        if (qa > qb || (qa == qb && a < best)) best = a;
    }
    return best;
}

Policy clone_policy(const std::vector<std::pair<StateId, ActionId>>& choices, int num_states,
                    int num_actions, double smoothing) {
    if (choices.empty()) throw std::invalid_argument("clone_policy: no choices");
    if (smoothing < 0.0) throw std::invalid_argument("clone_policy: smoothing must be >= 0");

    std::vector<std::vector<double>> counts(static_cast<size_t>(num_states),
                                            std::vector<double>(static_cast<size_t>(num_actions), 0.0));
    std::vector<char> touched(static_cast<size_t>(num_states), 0);
    for (const auto& [s, a] : choices) {
        counts[static_cast<size_t>(s)][static_cast<size_t>(a)] += 1.0;
        touched[static_cast<size_t>(s)] = 1;
    }

    Policy pi;
    pi.probs.assign(static_cast<size_t>(num_states),
                    std::vector<double>(static_cast<size_t>(num_actions), 1.0 / num_actions));
    for (int s = 0; s < num_states; ++s) {
        if (!touched[static_cast<size_t>(s)]) continue;
        double total = 0.0;
        for (int a = 0; a < num_actions; ++a) total += counts[s][a] + smoothing;
        for (int a = 0; a < num_actions; ++a) pi.probs[s][a] = (counts[s][a] + smoothing) / total;
    }
    return pi;
}

Policy improve_policy(const EnvSpec& env, const Dataset& d, const QFunction& q_fine,
                      const QFunction* q_coarse, const ControlGenerator* gen, const Policy& base,
                      const ImprovementConfig& cfg) {
    if (cfg.num_candidates < 1)
        throw std::invalid_argument("improve_policy: num_candidates must be >= 1");
    if (cfg.mode == ImproveMode::dual && (q_coarse == nullptr || gen == nullptr))
        throw std::invalid_argument("improve_policy: dual mode needs q_coarse and a generator");
    if (d.transitions.empty()) throw std::invalid_argument("improve_policy: empty dataset");

    std::vector<std::pair<StateId, ActionId>> choices;
    choices.reserve(d.transitions.size());
    for (size_t i = 0; i < d.transitions.size(); ++i) {
        StateId s = d.transitions[i].s;
        std::mt19937_64 rng = make_rng(cfg.seed, i);  // per-state sub-seed, dataset order
        CandidateSet cand;
        if (cfg.mode == ImproveMode::standard) {
            cand = sample_candidates(base, s, cfg.num_candidates, rng);
        } else {
            CategoryId c = best_category(*q_coarse, s, env.num_categories);
            cand = sample_candidates(*gen, s, c, cfg.num_candidates, rng);
        }
        choices.emplace_back(s, best_action(q_fine, cand));
    }
    return clone_policy(choices, env.num_states, env.num_actions, cfg.cloning_smoothing);
}

}  // namespace dgq
