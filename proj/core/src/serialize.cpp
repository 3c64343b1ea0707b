#include "dgq/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string serialize_env(const EnvSpec& env, const Classifier& cls) {
    std::ostringstream out;
    out << "dgq-env 1\n";
    out << "states " << env.num_states << "\n";
    out << "actions " << env.num_actions << "\n";
    out << "categories " << env.num_categories << "\n";
    out << "discount " << format_double(env.discount) << "\n";
    out << "horizon " << env.horizon << "\n";
    out << "terminal";
    for (int s = 0; s < env.num_states; ++s) out << ' ' << (env.terminal[s] ? 1 : 0);
    out << "\n";
    out << "classifier";
    for (int a = 0; a < env.num_actions; ++a) out << ' ' << cls.assign[static_cast<size_t>(a)];
    out << "\n";
    for (int s = 0; s < env.num_states; ++s) {
        out << "reward " << s;
        for (int a = 0; a < env.num_actions; ++a) out << ' ' << format_double(env.reward[s][a]);
        out << "\n";
    }
    for (int s = 0; s < env.num_states; ++s) {
        for (int a = 0; a < env.num_actions; ++a) {
            out << "trans " << s << ' ' << a;
            for (int sp = 0; sp < env.num_states; ++sp)
                out << ' ' << format_double(env.transition[s][a][sp]);
            out << "\n";
        }
    }
    for (size_t a = 0; a < env.action_tokens.size(); ++a) {
        out << "tokens " << a;
        for (const auto& tok : env.action_tokens[a]) out << ' ' << tok;
        out << "\n";
    }
    return out.str();
}

std::pair<EnvSpec, Classifier> deserialize_env(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "dgq-env" || version != 1)
        throw std::runtime_error("deserialize_env: not a dgq-env v1 file");

    EnvSpec env;
    Classifier cls;
    std::string key;
    while (in >> key) {
        if (key == "states") {
            in >> env.num_states;
        } else if (key == "actions") {
            in >> env.num_actions;
        } else if (key == "categories") {
            in >> env.num_categories;
            cls.num_categories = env.num_categories;
        } else if (key == "discount") {
            in >> env.discount;
        } else if (key == "horizon") {
            in >> env.horizon;
        } else if (key == "terminal") {
            env.terminal.resize(static_cast<size_t>(env.num_states));
            for (int s = 0; s < env.num_states; ++s) {
                int v;
                in >> v;
                env.terminal[static_cast<size_t>(s)] = static_cast<char>(v);
            }
        } else if (key == "classifier") {
            cls.assign.resize(static_cast<size_t>(env.num_actions));
            for (int a = 0; a < env.num_actions; ++a) in >> cls.assign[static_cast<size_t>(a)];
        } else if (key == "reward") {
            if (env.reward.empty())
                env.reward.assign(static_cast<size_t>(env.num_states),
                                  std::vector<double>(static_cast<size_t>(env.num_actions), 0.0));
            int s;
            in >> s;
            for (int a = 0; a < env.num_actions; ++a) in >> env.reward[s][a];
        } else if (key == "trans") {
            if (env.transition.empty())
                env.transition.assign(static_cast<size_t>(env.num_states),
                                      std::vector<std::vector<double>>(
                                          static_cast<size_t>(env.num_actions),
                                          std::vector<double>(static_cast<size_t>(env.num_states), 0.0)));
            int s, a;
            in >> s >> a;
            for (int sp = 0; sp < env.num_states; ++sp) in >> env.transition[s][a][sp];
        } else if (key == "tokens") {
            if (env.action_tokens.empty())
                env.action_tokens.resize(static_cast<size_t>(env.num_actions));
            int a;
            in >> a;
            std::string rest;
            std::getline(in, rest);
            std::istringstream ss(rest);
            std::string tok;
            while (ss >> tok) env.action_tokens[static_cast<size_t>(a)].push_back(tok);
        } else {
            throw std::runtime_error("deserialize_env: unknown key '" + key + "'");
        }
        if (!in && !in.eof()) throw std::runtime_error("deserialize_env: parse error near '" + key + "'");
    }
    env.validate();
    return {std::move(env), std::move(cls)};
}

void save_env(const EnvSpec& env, const Classifier& cls, const std::string& path) {
    write_file(path, serialize_env(env, cls));
}

std::pair<EnvSpec, Classifier> load_env(const std::string& path) {
    return deserialize_env(read_file(path));
}

std::uint64_t env_fingerprint(const EnvSpec& env, const Classifier& cls) {
    return fnv1a64(serialize_env(env, cls));
}

std::string serialize_policy(const Policy& pi) {
    std::ostringstream out;
    out << "dgq-policy 1\n";
    out << "states " << pi.num_states() << "\n";
    out << "arms " << pi.num_arms() << "\n";
    for (int s = 0; s < pi.num_states(); ++s)
        for (int a = 0; a < pi.num_arms(); ++a)
            if (pi.probs[s][a] != 0.0)
                out << s << ' ' << a << ' ' << format_double(pi.probs[s][a]) << "\n";
    return out.str();
}

Policy deserialize_policy(const std::string& text) {
    std::istringstream in(text);
    std::string magic, key;
    int version = 0, states = 0, arms = 0;
    in >> magic >> version;
    if (magic != "dgq-policy" || version != 1)
        throw std::runtime_error("deserialize_policy: not a dgq-policy v1 file");
    in >> key >> states >> key >> arms;
    Policy pi;
    pi.probs.assign(static_cast<size_t>(states), std::vector<double>(static_cast<size_t>(arms), 0.0));
    int s, a;
    double p;
    while (in >> s >> a >> p) pi.probs[s][a] = p;
    return pi;
}

void save_policy(const Policy& pi, const std::string& path) { write_file(path, serialize_policy(pi)); }

Policy load_policy(const std::string& path) { return deserialize_policy(read_file(path)); }

std::string serialize_qfunction(const QFunction& q) {
    std::ostringstream out;
    out << "dgq-q 1\n";
    out << "backing " << (q.backing == QBacking::tabular ? "tabular" : "linear") << "\n";
    out << "coarse " << (q.coarse ? 1 : 0) << "\n";
    out << "states " << q.num_states << "\n";
    out << "arms " << q.num_arms << "\n";
    out << "steps " << q.step_counter << "\n";
    out << "converged " << (q.converged ? 1 : 0) << "\n";
    for (int s = 0; s < q.num_states; ++s)
        for (int a = 0; a < q.num_arms; ++a)
            out << "q " << s << ' ' << a << ' ' << format_double(q.value(s, a)) << "\n";
    for (int s = 0; s < q.num_states; ++s)
        for (int a = 0; a < q.num_arms; ++a)
            out << "t " << s << ' ' << a << ' ' << format_double(q.target_value(s, a)) << "\n";
    return out.str();
}

QFunction deserialize_qfunction(const std::string& text) {
    std::istringstream in(text);
    std::string magic, key, val;
    int version = 0;
    in >> magic >> version;
    if (magic != "dgq-q" || version != 1)
        throw std::runtime_error("deserialize_qfunction: not a dgq-q v1 file");
    int coarse = 0, converged = 0, states = 0, arms = 0;
    long steps = 0;
    in >> key >> val;  // backing
    QBacking backing = (val == "linear") ? QBacking::linear : QBacking::tabular;
    in >> key >> coarse >> key >> states >> key >> arms >> key >> steps >> key >> converged;
    QFunction q = QFunction::zeros(states, arms, coarse != 0, backing);
    q.step_counter = steps;
    q.converged = converged != 0;
    std::string kind;
    int s, a;
    double v;
    while (in >> kind >> s >> a >> v) {
        if (kind == "q")
            q.params[q.index(s, a)] = v;
        else if (kind == "t")
            q.target_params[q.index(s, a)] = v;
        else
            throw std::runtime_error("deserialize_qfunction: unknown entry kind '" + kind + "'");
    }
    return q;
}

void save_qfunction(const QFunction& q, const std::string& path) {
    write_file(path, serialize_qfunction(q));
}

QFunction load_qfunction(const std::string& path) { return deserialize_qfunction(read_file(path)); }

}  // namespace dgq
