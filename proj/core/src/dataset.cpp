#include "dgq/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dgq/envs.hpp"
#include "dgq/rng.hpp"
#include "dgq/serialize.hpp"

namespace dgq {

namespace {

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
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

Policy make_behavior_policy(const EnvSpec& env, double quality, double epsilon,
                            [[maybe_unused]] std::uint64_t seed) {
    if (quality < 0.0 || quality > 1.0)
        throw std::invalid_argument("make_behavior_policy: quality must lie in [0,1]");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument(
            "make_behavior_policy: epsilon must lie in (0,1]; full support is required");

    Policy greedy = value_iteration(env, 1e-10).second;
    const double uni = 1.0 / env.num_actions;
    Policy pi;
    pi.probs.assign(static_cast<size_t>(env.num_states),
                    std::vector<double>(static_cast<size_t>(env.num_actions), 0.0));
    for (int s = 0; s < env.num_states; ++s)
        for (int a = 0; a < env.num_actions; ++a) {
            double mix = quality * greedy.probs[s][a] + (1.0 - quality) * uni;
            pi.probs[s][a] = (1.0 - epsilon) * mix + epsilon * uni;
        }
    return pi;
}

Dataset collect_dataset(const EnvSpec& env, const Classifier& cls, const Policy& pi_beta,
                        int episodes, int horizon, std::uint64_t seed) {
    if (episodes < 1 || horizon < 1)
        throw std::invalid_argument("collect_dataset: episodes and horizon must be >= 1");
    env.validate();
    pi_beta.validate();

    std::vector<StateId> starts;
    for (int s = 0; s < env.num_states; ++s)
        if (!env.is_terminal(s)) starts.push_back(s);
    if (starts.empty()) throw std::invalid_argument("collect_dataset: env has no non-terminal state");

    Dataset d;
    d.env_fingerprint = env_fingerprint(env, cls);
    d.behavior_descriptor = "collected eps=" + std::to_string(episodes) +
                            " horizon=" + std::to_string(horizon) +
                            " seed=" + std::to_string(seed);
    for (int ep = 0; ep < episodes; ++ep) {
        std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(ep));
        std::uniform_int_distribution<size_t> pick(0, starts.size() - 1);
        StateId s = starts[pick(rng)];
        ActionId a = sample_index(pi_beta.probs[s], rng);
        for (int t = 0; t < horizon; ++t) {
            auto [sp, r, term] = env_step(env, s, a, rng);
            bool done = term || t == horizon - 1;
            ActionId ap = done ? -1 : sample_index(pi_beta.probs[sp], rng);
            d.transitions.push_back({ep, t, s, a, r, sp, ap, done});
            if (done) break;
            s = sp;
            a = ap;
        }
    }
    return d;
}

Dataset coarsen_dataset(const Dataset& d, const Classifier& f) {
    if (d.coarse) throw std::invalid_argument("coarsen_dataset: dataset is already coarse");
    Dataset out;
    out.env_fingerprint = d.env_fingerprint;
    out.behavior_descriptor = d.behavior_descriptor + " (coarsened)";
    out.coarse = true;
    out.transitions.reserve(d.transitions.size());
    for (size_t i = 0; i < d.transitions.size(); ++i) {
        Transition t = d.transitions[i];
        if (t.action < 0 || t.action >= f.num_actions())
            throw std::domain_error("coarsen_dataset: unclassifiable action in transition " +
                                    std::to_string(i));
        t.action = f.classify(t.action);
        if (!t.done) {
            if (t.action_next < 0 || t.action_next >= f.num_actions())
                throw std::domain_error("coarsen_dataset: unclassifiable next action in transition " +
                                        std::to_string(i));
            t.action_next = f.classify(t.action_next);
        }
        out.transitions.push_back(t);
    }
    return out;
}

namespace {

std::string action_field(const Dataset& d, const EnvSpec& env, int action) {
    if (action < 0) return "-";
    if (!d.coarse && env.has_tokens()) {
        std::string s = "\"";
        const auto& toks = env.action_tokens[static_cast<size_t>(action)];
        for (size_t i = 0; i < toks.size(); ++i) {
            if (i) s += ' ';
            s += toks[i];
        }
        s += '"';
        return s;
    }
    return std::to_string(action);
}

int parse_action_field(const std::string& field, const Dataset& d, const EnvSpec& env, int lineno) {
    if (field == "-") return -1;
    if (!field.empty() && field.front() == '"') {
        if (field.size() < 2 || field.back() != '"')
            throw std::runtime_error("dataset parse error at line " + std::to_string(lineno) +
                                     ": unterminated quoted action");
        std::string body = field.substr(1, field.size() - 2);
        std::istringstream ss(body);
        TokenSeq toks;
        std::string tok;
        while (ss >> tok) toks.push_back(tok);
        for (size_t a = 0; a < env.action_tokens.size(); ++a)
            if (env.action_tokens[a] == toks) return static_cast<int>(a);
        throw std::runtime_error("dataset parse error at line " + std::to_string(lineno) +
                                 ": unknown token action");
    }
    (void)d;
    try {
        return std::stoi(field);
    } catch (const std::exception&) {
        throw std::runtime_error("dataset parse error at line " + std::to_string(lineno) +
                                 ": bad action field '" + field + "'");
    }
}

}  // namespace

void save_dataset(const Dataset& d, const EnvSpec& env, const std::string& path) {
    std::ostringstream out;
    char fp[24];
    std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(d.env_fingerprint));
    out << "# dgq-dataset 1\tfingerprint=" << fp << "\tcoarse=" << (d.coarse ? 1 : 0)
        << "\tdescriptor=" << d.behavior_descriptor << "\n";
    for (const auto& t : d.transitions) {
        out << t.episode_id << '\t' << t.t << '\t' << t.s << '\t' << action_field(d, env, t.action)
            << '\t' << format_double(t.r) << '\t' << t.s_next << '\t'
            << action_field(d, env, t.action_next) << '\t' << (t.done ? 1 : 0) << "\n";
    }
    write_file(path, out.str());
}

Dataset load_dataset(const std::string& path, const EnvSpec& env, const Classifier& cls) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    Dataset d;
    std::string header;
    if (!std::getline(in, header) || header.rfind("# dgq-dataset 1", 0) != 0)
        throw std::runtime_error("load_dataset: missing dgq-dataset header");
    {
        auto fp_pos = header.find("fingerprint=");
        auto coarse_pos = header.find("coarse=");
        auto desc_pos = header.find("descriptor=");
        if (fp_pos == std::string::npos || coarse_pos == std::string::npos ||
            desc_pos == std::string::npos)
            throw std::runtime_error("load_dataset: malformed header");
        d.env_fingerprint = std::stoull(header.substr(fp_pos + 12, 16), nullptr, 16);
        d.coarse = header[coarse_pos + 7] == '1';
        d.behavior_descriptor = header.substr(desc_pos + 11);
    }
    std::uint64_t expected = env_fingerprint(env, cls);
    if (d.env_fingerprint != expected)
        throw std::runtime_error("load_dataset: fingerprint mismatch; dataset was collected on a different env");

    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() != 8)
            throw std::runtime_error("dataset parse error at line " + std::to_string(lineno) +
                                     ": expected 8 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        Transition t;
        try {
            t.episode_id = std::stoi(fields[0]);
            t.t = std::stoi(fields[1]);
            t.s = std::stoi(fields[2]);
            t.action = parse_action_field(fields[3], d, env, lineno);
            t.r = std::stod(fields[4]);
            t.s_next = std::stoi(fields[5]);
            t.action_next = parse_action_field(fields[6], d, env, lineno);
            t.done = fields[7] == "1";
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception&) {
            throw std::runtime_error("dataset parse error at line " + std::to_string(lineno));
        }
        d.transitions.push_back(t);
    }
    return d;
}

}  // namespace dgq
