#include "dgq/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dgq {

namespace {

std::map<std::string, int> term_counts(const TokenSeq& seq) {
    std::map<std::string, int> counts;
    for (const auto& t : seq) ++counts[t];
    return counts;
}

double cosine(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
    double dot = 0.0;
    for (const auto& [tok, n] : a) {
        auto it = b.find(tok);
        if (it != b.end()) dot += static_cast<double>(n) * it->second;
    }
    if (dot == 0.0) return 0.0;
    double na = 0.0, nb = 0.0;
    for (const auto& [tok, n] : a) na += static_cast<double>(n) * n;
    for (const auto& [tok, n] : b) nb += static_cast<double>(n) * n;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double dull_similarity(const TokenSeq& response, const std::vector<TokenSeq>& dull_list) {
    if (dull_list.empty()) throw std::invalid_argument("dull_similarity: empty dull list");
    if (response.empty()) return 1.0;
    auto rc = term_counts(response);
    double best = 0.0;
    for (const auto& tmpl : dull_list) best = std::max(best, cosine(rc, term_counts(tmpl)));
    return best;
}

double surprise_reward(const TokenSeq& response, const std::vector<std::string>& surprise_set) {
    for (const auto& tok : response)
        if (std::find(surprise_set.begin(), surprise_set.end(), tok) != surprise_set.end())
            return 1.0;
    return 0.0;
}

double length_reward(const TokenSeq& response) {
    size_t n = response.size();
    if (n < 5) return -0.5;
    if (n < 10) return 0.0;
    if (n < 15) return 0.5;
    return 1.0;
}

double question_reward(const TokenSeq& response, const std::vector<std::string>& question_set) {
    for (const auto& tok : response) {
        if (tok == "?") return 1.0;
        if (std::find(question_set.begin(), question_set.end(), tok) != question_set.end())
            return 1.0;
    }
    return 0.0;
}

double total_reward(const TokenSeq& response, const RewardWeights& weights,
                    const std::vector<TokenSeq>& dull_list,
                    const std::vector<std::string>& surprise_set,
                    const std::vector<std::string>& question_set) {
    return -weights.w_dull * dull_similarity(response, dull_list) +
           weights.w_surprise * surprise_reward(response, surprise_set) +
           weights.w_length * length_reward(response) +
           weights.w_question * question_reward(response, question_set);
}

std::vector<TokenSeq> load_dull_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dull_templates: cannot open " + path);
    std::vector<TokenSeq> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        TokenSeq seq;
        std::string tok;
        while (ss >> tok) seq.push_back(tok);
        if (!seq.empty()) out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace dgq
