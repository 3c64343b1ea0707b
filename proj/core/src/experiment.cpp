#include "dgq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dgq/rewards.hpp"
#include "dgq/rng.hpp"
#include "dgq/serialize.hpp"
#include "dgq/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dgq {

std::string method_name(Method m) {
    switch (m) {
        case Method::mle: return "mle";
        case Method::standard: return "standard";
        case Method::dual: return "dual";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "mle") return Method::mle;
    if (name == "standard") return Method::standard;
    if (name == "dual") return Method::dual;
    throw std::invalid_argument("unknown method '" + name + "' (expected mle, standard, or dual)");
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

FitConfig parse_fit(const json& obj, const std::string& where) {
    check_keys(obj,
               {"learning_rate", "discount", "target_sync_interval", "target_update_mode",
                "polyak_rate", "batch_size", "convergence_delta", "convergence_patience",
                "max_epochs", "seed"},
               where);
    FitConfig cfg;
    get_if(obj, "learning_rate", cfg.learning_rate);
    get_if(obj, "discount", cfg.discount);
    get_if(obj, "target_sync_interval", cfg.target_sync_interval);
    if (obj.contains("target_update_mode")) {
        std::string mode = obj.at("target_update_mode").get<std::string>();
        if (mode == "hard")
            cfg.target_update_mode = TargetUpdate::hard_copy;
        else if (mode == "polyak")
            cfg.target_update_mode = TargetUpdate::polyak;
        else
            throw std::runtime_error("config: target_update_mode must be 'hard' or 'polyak'");
    }
    get_if(obj, "polyak_rate", cfg.polyak_rate);
    get_if(obj, "batch_size", cfg.batch_size);
    get_if(obj, "convergence_delta", cfg.convergence_delta);
    get_if(obj, "convergence_patience", cfg.convergence_patience);
    get_if(obj, "max_epochs", cfg.max_epochs);
    get_if(obj, "seed", cfg.seed);
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json root = json::parse(in);
    check_keys(root, {"env", "data", "fit", "improve", "eval", "output_dir"}, "top level");

    ExperimentConfig cfg;
    if (root.contains("env")) {
        const json& e = root.at("env");
        std::string type = e.value("type", std::string("categorical"));
        cfg.env.type = type;
        if (type == "categorical") {
            check_keys(e,
                       {"type", "num_states", "num_categories", "actions_per_category",
                        "category_value_spread", "noise_scale", "discount", "horizon", "seed"},
                       "env");
            auto& c = cfg.env.categorical;
            get_if(e, "num_states", c.num_states);
            get_if(e, "num_categories", c.num_categories);
            get_if(e, "actions_per_category", c.actions_per_category);
            get_if(e, "category_value_spread", c.category_value_spread);
            get_if(e, "noise_scale", c.noise_scale);
            get_if(e, "discount", c.discount);
            get_if(e, "horizon", c.horizon);
            get_if(e, "seed", c.seed);
        } else if (type == "token") {
            check_keys(e,
                       {"type", "vocab_file", "dull_file", "max_len", "context_window",
                        "action_cap", "horizon", "discount", "partner_stay_prob", "weights",
                        "seed"},
                       "env");
            TokenEnvConfig t = default_token_config();
            if (e.contains("vocab_file")) t = load_vocab_file(e.at("vocab_file").get<std::string>());
            if (e.contains("dull_file"))
                t.dull_templates = load_dull_templates(e.at("dull_file").get<std::string>());
            get_if(e, "max_len", t.max_len);
            get_if(e, "context_window", t.context_window);
            get_if(e, "action_cap", t.action_cap);
            get_if(e, "horizon", t.horizon);
            get_if(e, "discount", t.discount);
            get_if(e, "partner_stay_prob", t.partner_stay_prob);
            get_if(e, "seed", t.seed);
            if (e.contains("weights")) {
                const json& w = e.at("weights");
                check_keys(w, {"w_dull", "w_surprise", "w_length", "w_question"}, "env.weights");
                get_if(w, "w_dull", t.weights.w_dull);
                get_if(w, "w_surprise", t.weights.w_surprise);
                get_if(w, "w_length", t.weights.w_length);
                get_if(w, "w_question", t.weights.w_question);
            }
            cfg.env.token = std::move(t);
        } else {
            throw std::runtime_error("config: env.type must be 'categorical' or 'token'");
        }
    }
    if (root.contains("data")) {
        const json& d = root.at("data");
        check_keys(d, {"behavior_quality", "epsilon", "episodes", "horizon"}, "data");
        get_if(d, "behavior_quality", cfg.data.behavior_quality);
        get_if(d, "epsilon", cfg.data.epsilon);
        get_if(d, "episodes", cfg.data.episodes);
        get_if(d, "horizon", cfg.data.horizon);
    }
    if (root.contains("fit")) {
        const json& f = root.at("fit");
        check_keys(f, {"fine", "coarse"}, "fit");
        if (f.contains("fine")) cfg.fit_fine = parse_fit(f.at("fine"), "fit.fine");
        if (f.contains("coarse")) cfg.fit_coarse = parse_fit(f.at("coarse"), "fit.coarse");
    }
    if (root.contains("improve")) {
        const json& i = root.at("improve");
        check_keys(i,
                   {"method", "num_candidates", "cloning_smoothing", "generator_temperature",
                    "generator_smoothing"},
                   "improve");
        if (i.contains("method")) cfg.improve.method = parse_method(i.at("method").get<std::string>());
        get_if(i, "num_candidates", cfg.improve.num_candidates);
        get_if(i, "cloning_smoothing", cfg.improve.cloning_smoothing);
        get_if(i, "generator_temperature", cfg.improve.generator_temperature);
        get_if(i, "generator_smoothing", cfg.improve.generator_smoothing);
    }
    if (root.contains("eval")) {
        const json& e = root.at("eval");
        check_keys(e, {"mode", "num_dialogues", "turns", "seeds"}, "eval");
        if (e.contains("mode")) {
            std::string m = e.at("mode").get<std::string>();
            if (m == "dataset")
                cfg.eval.mode = EvalMode::dataset;
            else if (m == "simulator")
                cfg.eval.mode = EvalMode::simulator;
            else
                throw std::runtime_error("config: eval.mode must be 'dataset' or 'simulator'");
        }
        get_if(e, "num_dialogues", cfg.eval.num_dialogues);
        get_if(e, "turns", cfg.eval.turns);
        if (e.contains("seeds")) cfg.eval.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
        if (cfg.eval.seeds.empty()) throw std::runtime_error("config: eval.seeds must be non-empty");
    }
    get_if(root, "output_dir", cfg.output_dir);
    return cfg;
}

namespace {

std::string fmt6(double v) {
    if (std::isnan(v)) return "na";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int greedy_action(const Policy& pi, StateId s) {
    int best = 0;
    for (int a = 1; a < pi.num_arms(); ++a)
        if (pi.probs[s][a] > pi.probs[s][best]) best = a;
    return best;
}

int sample_arm(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double cum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

struct MetricAccum {
    double cs = 0.0, se = 0.0, rl = 0.0, aq = 0.0;
    long n = 0;
    bool token = false;

    void add_response(const EnvSpec& env, const TokenEnvConfig* tcfg, ActionId a) {
        ++n;
        if (!tcfg || !env.has_tokens()) return;
        token = true;
        const TokenSeq& resp = env.action_tokens[static_cast<size_t>(a)];
        cs += dull_similarity(resp, tcfg->dull_templates);
        se += surprise_reward(resp, tcfg->surprise_tokens);
        rl += static_cast<double>(resp.size());
        aq += question_reward(resp, tcfg->question_tokens);
    }

    void fill(MetricsRow& row) const {
        double nan = std::nan("");
        row.cs = token ? cs / n : nan;
        row.se = token ? se / n : nan;
        row.rl = token ? rl / n : nan;
        row.aq = token ? aq / n : nan;
    }
};

}  // namespace

std::vector<MetricsRow> evaluate_agent(const Policy& agent, const EnvSpec& env,
                                       const TokenEnvConfig* token_cfg, EvalMode mode,
                                       int num_dialogues, int turns, std::uint64_t seed,
                                       const Dataset* held_out) {
    if (turns < 1) throw std::invalid_argument("evaluate_agent: turns must be >= 1");

    MetricAccum acc;
    double return_sum = 0.0;
    long return_n = 0;

    if (mode == EvalMode::dataset) {
        if (held_out == nullptr || held_out->transitions.empty())
            throw std::invalid_argument("evaluate_agent: dataset mode needs a held-out dataset");
        for (const auto& t : held_out->transitions) {
            int a = greedy_action(agent, t.s);
            acc.add_response(env, token_cfg, a);
            return_sum += env.reward[t.s][a];
            ++return_n;
        }
    } else {
        std::vector<StateId> starts;
        for (int s = 0; s < env.num_states; ++s)
            if (!env.is_terminal(s)) starts.push_back(s);
        for (int d = 0; d < num_dialogues; ++d) {
            std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(d));
            std::uniform_int_distribution<size_t> pick(0, starts.size() - 1);
            StateId s = starts[pick(rng)];
            double ret = 0.0, disc = 1.0;
            for (int turn = 0; turn < turns; ++turn) {
                int a = sample_arm(agent.probs[s], rng);
                acc.add_response(env, token_cfg, a);
                auto [sp, r, done] = env_step(env, s, a, rng);
                ret += disc * r;
                disc *= env.discount;
                if (done) break;
                s = sp;
            }
            return_sum += ret;
            ++return_n;
        }
    }

    MetricsRow row;
    acc.fill(row);
    row.avg_return = return_sum / return_n;
    return {row};
}

void emit_metrics(std::vector<MetricsRow> rows, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("emit_metrics: no rows");
    std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.method != b.method) return a.method < b.method;
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.L < b.L;
    });
    std::ostringstream out;
    out << "method,seed,L,CS,SE,RL,AQ,avg_return\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.seed << ',' << r.L << ',' << fmt6(r.cs) << ',' << fmt6(r.se)
            << ',' << fmt6(r.rl) << ',' << fmt6(r.aq) << ',' << fmt6(r.avg_return) << "\n";
    write_file(path, out.str());
}

std::pair<EnvSpec, Classifier> build_env(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.env.type == "categorical") {
        CategoricalEnvConfig c = cfg.env.categorical;
        c.seed = c.seed + seed;
        return make_categorical_env(c);
    }
    TokenEnvConfig t = cfg.env.token;
    t.seed = t.seed + seed;
    return make_token_env(t);
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, std::uint64_t seed) {
    PipelineResult res;
    std::tie(res.env, res.cls) = build_env(cfg, seed);
    res.behavior = make_behavior_policy(res.env, cfg.data.behavior_quality, cfg.data.epsilon,
                                        derive_seed(seed, 10));
    res.dataset = collect_dataset(res.env, res.cls, res.behavior, cfg.data.episodes,
                                  cfg.data.horizon, derive_seed(seed, 11));

    std::vector<std::pair<StateId, ActionId>> logged;
    logged.reserve(res.dataset.transitions.size());
    for (const auto& t : res.dataset.transitions) logged.emplace_back(t.s, t.action);
    res.mle_agent = clone_policy(logged, res.env.num_states, res.env.num_actions,
                                 cfg.improve.cloning_smoothing);

    if (cfg.improve.method == Method::mle) {
        res.agent = res.mle_agent;
        return res;
    }

    FitConfig ff = cfg.fit_fine;
    ff.discount = res.env.discount;
    ff.seed = derive_seed(seed, 12);
    res.q_fine = fit_fine_q(res.dataset, res.env, ff);

    if (cfg.improve.method == Method::dual) {
        Dataset dc = coarsen_dataset(res.dataset, res.cls);
        FitConfig fc = cfg.fit_coarse;
        fc.discount = res.env.discount;
        fc.seed = derive_seed(seed, 13);
        res.q_coarse = fit_coarse_q(dc, res.env, fc);
        res.generator = fit_control_generator(res.dataset, res.env, res.cls,
                                              cfg.improve.generator_temperature,
                                              cfg.improve.generator_smoothing);
    }

    ImprovementConfig ic;
    ic.num_candidates = cfg.improve.num_candidates;
    ic.mode = cfg.improve.method == Method::dual ? ImproveMode::dual : ImproveMode::standard;
    ic.cloning_smoothing = cfg.improve.cloning_smoothing;
    ic.seed = derive_seed(seed, 14);
    res.agent = improve_policy(res.env, res.dataset, *res.q_fine,
                               res.q_coarse ? &*res.q_coarse : nullptr,
                               res.generator ? &*res.generator : nullptr, res.mle_agent, ic);
    return res;
}

namespace {

MetricsRow evaluate_pipeline(const ExperimentConfig& cfg, const PipelineResult& res,
                             std::uint64_t seed) {
    const TokenEnvConfig* tcfg = cfg.env.type == "token" ? &cfg.env.token : nullptr;
    auto rows = evaluate_agent(res.agent, res.env, tcfg, cfg.eval.mode, cfg.eval.num_dialogues,
                               cfg.eval.turns, derive_seed(seed, 15), &res.dataset);
    MetricsRow row = rows.front();
    row.method = method_name(cfg.improve.method);
    row.seed = seed;
    row.L = cfg.improve.method == Method::mle ? 0 : cfg.improve.num_candidates;
    return row;
}

}  // namespace

void write_manifest(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name == "manifest.txt") continue;
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    std::ostringstream out;
    for (const auto& name : names) {
        char h[24];
        std::snprintf(h, sizeof(h), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(read_file(dir + "/" + name))));
        out << name << '\t' << h << "\n";
    }
    write_file(dir + "/manifest.txt", out.str());
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::vector<std::string> created;
    auto keep = [&](const std::string& name) {
        created.push_back(cfg.output_dir + "/" + name);
        return created.back();
    };

    std::string stage = "setup";
    try {
        std::vector<MetricsRow> rows;
        for (std::uint64_t seed : cfg.eval.seeds) {
            std::string tag = "_s" + std::to_string(seed);
            stage = "pipeline";
            PipelineResult res = run_pipeline(cfg, seed);
            stage = "artifacts";
            save_env(res.env, res.cls, keep("env" + tag + ".txt"));
            save_dataset(res.dataset, res.env, keep("dataset" + tag + ".tsv"));
            if (res.q_fine) save_qfunction(*res.q_fine, keep("q_fine" + tag + ".txt"));
            if (res.q_coarse) save_qfunction(*res.q_coarse, keep("q_coarse" + tag + ".txt"));
            save_policy(res.agent, keep("agent" + tag + ".txt"));
            stage = "evaluate";
            rows.push_back(evaluate_pipeline(cfg, res, seed));
        }
        stage = "metrics";
        emit_metrics(rows, keep("metrics.csv"));
        write_manifest(cfg.output_dir);
        return rows;
    } catch (const std::exception& e) {
        for (const auto& f : created) fs::remove(f);
        fs::remove(cfg.output_dir + "/manifest.txt");
        throw std::runtime_error("run_experiment failed at stage '" + stage + "': " + e.what());
    }
}

SweepResult sweep_sampling_size(const ExperimentConfig& cfg, const std::vector<int>& Ls) {
    if (Ls.empty()) throw std::invalid_argument("sweep_sampling_size: Ls must be non-empty");
    fs::create_directories(cfg.output_dir);

    SweepResult result;
    result.Ls = Ls;

    // per (method, L): one EvalSummary per seed, shared MLE anchor at L = 0
    std::map<std::string, std::map<int, std::vector<MetricsRow>>> cells;

    for (std::uint64_t seed : cfg.eval.seeds) {
        ExperimentConfig mle_cfg = cfg;
        mle_cfg.improve.method = Method::mle;
        PipelineResult mle_res = run_pipeline(mle_cfg, seed);
        MetricsRow anchor = evaluate_pipeline(mle_cfg, mle_res, seed);
        cells["standard"][0].push_back(anchor);
        cells["dual"][0].push_back(anchor);
        result.rows.push_back(anchor);

        for (Method m : {Method::standard, Method::dual}) {
            for (int L : Ls) {
                ExperimentConfig run_cfg = cfg;
                run_cfg.improve.method = m;
                run_cfg.improve.num_candidates = L;
                PipelineResult res = run_pipeline(run_cfg, seed);
                MetricsRow row = evaluate_pipeline(run_cfg, res, seed);
                cells[method_name(m)][L].push_back(row);
                result.rows.push_back(row);
            }
        }
    }

    for (const auto& [method, by_L] : cells)
        for (const auto& [L, rows] : by_L) {
            auto& dest = result.returns[method][L];
            for (const auto& r : rows) dest.push_back(r.avg_return);
        }

    std::ostringstream out;
    out << "method,L,metric,mean,half_std\n";
    const char* metric_names[5] = {"CS", "SE", "RL", "AQ", "avg_return"};
    for (const char* method : {"dual", "standard"}) {
        std::vector<int> all_L = {0};
        all_L.insert(all_L.end(), Ls.begin(), Ls.end());
        for (int L : all_L) {
            const auto& rows = cells[method][L];
            for (int mi = 0; mi < 5; ++mi) {
                std::vector<double> vals;
                for (const auto& r : rows) {
                    double v = mi == 0   ? r.cs
                               : mi == 1 ? r.se
                               : mi == 2 ? r.rl
                               : mi == 3 ? r.aq
                                         : r.avg_return;
                    vals.push_back(v);
                }
                bool na = std::isnan(vals.front());
                out << method << ',' << L << ',' << metric_names[mi] << ','
                    << (na ? "na" : fmt6(mean(vals))) << ','
                    << (na ? "na" : fmt6(0.5 * stddev(vals))) << "\n";
            }
        }
    }
    write_file(cfg.output_dir + "/sweep.csv", out.str());
    write_manifest(cfg.output_dir);
    return result;
}

}  // namespace dgq
