#pragma once

#include <cstdint>
#include <vector>

#include "dgq/dataset.hpp"
#include "dgq/mdp.hpp"

namespace dgq {

enum class QBacking { tabular, linear };
enum class TargetUpdate { hard_copy, polyak };

/// Action-value estimator with a delayed target copy. The linear backing
/// uses one-hot state-action features, so both backings share the dense
/// weight layout [state * arms + arm].
struct QFunction {
    QBacking backing = QBacking::tabular;
    bool coarse = false;
    int num_states = 0;
    int num_arms = 0;  // actions, or categories when coarse
    std::vector<double> params;
    std::vector<double> target_params;
    long step_counter = 0;
    bool converged = false;

    static QFunction zeros(int states, int arms, bool coarse,
                           QBacking backing = QBacking::tabular);

    double value(StateId s, int arm) const { return params[index(s, arm)]; }
    double target_value(StateId s, int arm) const { return target_params[index(s, arm)]; }
    void set(StateId s, int arm, double v) { params[index(s, arm)] = v; }
    void sync_target() { target_params = params; }

    size_t index(StateId s, int arm) const {
        return static_cast<size_t>(s) * static_cast<size_t>(num_arms) + static_cast<size_t>(arm);
    }
};

struct FitConfig {
    double learning_rate = 0.1;
    double discount = 0.5;
    int target_sync_interval = 30;
    TargetUpdate target_update_mode = TargetUpdate::hard_copy;
    double polyak_rate = 2.4e-5;
    int batch_size = 32;
    double convergence_delta = 0.01;
    int convergence_patience = 10;
    int max_epochs = 200;
    std::uint64_t seed = 0;
};

/// One gradient step toward targets r + gamma * Q_target(s', a') (r alone on
/// done tuples). Returns the mean squared TD error before the update. Target
/// params are only touched by the sync schedule in the fit drivers.
double td_step(QFunction& q, const std::vector<Transition>& batch, const FitConfig& cfg);

/// Shuffled mini-batch TD over fine transitions with hard target syncs every
/// target_sync_interval steps, stopping by the convergence rule or
/// max_epochs.
QFunction fit_fine_q(const Dataset& d, const EnvSpec& env, const FitConfig& cfg);

/// Same over (state, category) pairs of a coarsened dataset.
QFunction fit_coarse_q(const Dataset& dc, const EnvSpec& env, const FitConfig& cfg);

/// True iff the last `patience` consecutive epoch-to-epoch absolute loss
/// changes are all strictly below delta.
bool check_convergence(const std::vector<double>& loss_history, double delta, int patience);

}  // namespace dgq
