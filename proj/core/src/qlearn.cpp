#include "dgq/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

QFunction QFunction::zeros(int states, int arms, bool coarse, QBacking backing) {
    QFunction q;
    q.backing = backing;
    q.coarse = coarse;
    q.num_states = states;
    q.num_arms = arms;
    q.params.assign(static_cast<size_t>(states) * static_cast<size_t>(arms), 0.0);
    q.target_params = q.params;
    return q;
}

double td_step(QFunction& q, const std::vector<Transition>& batch, const FitConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("td_step: empty batch");

    std::vector<double> grad(q.params.size(), 0.0);
    double loss = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        if (t.s < 0 || t.s >= q.num_states || t.action < 0 || t.action >= q.num_arms)
            throw std::domain_error("td_step: transition outside the Q-function domain");
        double target = t.r;
        if (!t.done) target += cfg.discount * q.target_value(t.s_next, t.action_next);
        if (!std::isfinite(target))
            throw std::runtime_error("td_step: non-finite target at batch transition " +
                                     std::to_string(i) + " (episode " +
                                     std::to_string(t.episode_id) + ", t=" + std::to_string(t.t) + ")");
        double err = target - q.value(t.s, t.action);
        loss += err * err;
        grad[q.index(t.s, t.action)] += err;
    }
    loss /= static_cast<double>(batch.size());
    const double scale = cfg.learning_rate / static_cast<double>(batch.size());
    for (size_t i = 0; i < grad.size(); ++i) q.params[i] += scale * grad[i];
    ++q.step_counter;
    return loss;
}

bool check_convergence(const std::vector<double>& loss_history, double delta, int patience) {
    if (!(delta > 0.0)) throw std::invalid_argument("check_convergence: delta must be > 0");
    if (patience < 1) throw std::invalid_argument("check_convergence: patience must be >= 1");
    if (static_cast<int>(loss_history.size()) < patience + 1) return false;
    size_t n = loss_history.size();
    for (int k = 0; k < patience; ++k) {
        double change = std::abs(loss_history[n - 1 - k] - loss_history[n - 2 - k]);
        if (!(change < delta)) return false;
    }
    return true;
}

namespace {

QFunction fit_q(const Dataset& d, int num_states, int num_arms, bool coarse, const FitConfig& cfg) {
    if (d.transitions.empty()) throw std::invalid_argument("fit: dataset is empty");
    if (d.coarse != coarse)
        throw std::invalid_argument(coarse ? "fit_coarse_q: dataset is not coarse"
                                           : "fit_fine_q: dataset is coarse");

    // No-OOD guarantee: every (s', a') the TD targets will query must appear
    // verbatim as an (s, a) pair of the dataset.
    std::set<std::pair<int, int>> seen;
    for (const auto& t : d.transitions) seen.emplace(t.s, t.action);
    for (const auto& t : d.transitions)
        if (!t.done && !seen.count({t.s_next, t.action_next}))
            throw std::runtime_error("fit: bootstrap pair (s', a') not present in the dataset");

    QFunction q = QFunction::zeros(num_states, num_arms, coarse);
    q.sync_target();

    std::mt19937_64 rng = make_rng(cfg.seed, coarse ? 1 : 0);
    std::vector<size_t> order(d.transitions.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> loss_history;
    std::vector<Transition> batch;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            batch.clear();
            size_t end = std::min(order.size(), off + static_cast<size_t>(cfg.batch_size));
            for (size_t i = off; i < end; ++i) batch.push_back(d.transitions[order[i]]);
            epoch_loss += td_step(q, batch, cfg);
            ++batches;
            if (cfg.target_update_mode == TargetUpdate::hard_copy) {
                if (q.step_counter % cfg.target_sync_interval == 0) q.sync_target();
            } else {
                for (size_t i = 0; i < q.params.size(); ++i)
                    q.target_params[i] += cfg.polyak_rate * (q.params[i] - q.target_params[i]);
            }
        }
        loss_history.push_back(epoch_loss / batches);
        if (check_convergence(loss_history, cfg.convergence_delta, cfg.convergence_patience)) {
            q.converged = true;
            break;
        }
    }
    return q;
}

}  // namespace

QFunction fit_fine_q(const Dataset& d, const EnvSpec& env, const FitConfig& cfg) {
    return fit_q(d, env.num_states, env.num_actions, /*coarse=*/false, cfg);
}

QFunction fit_coarse_q(const Dataset& dc, const EnvSpec& env, const FitConfig& cfg) {
    return fit_q(dc, env.num_states, env.num_categories, /*coarse=*/true, cfg);
}

}  // namespace dgq
