#pragma once

#include <string>
#include <vector>

namespace dgq {

using TokenSeq = std::vector<std::string>;

/// Weights of the four response reward components; the dull term enters the
/// total negatively.
struct RewardWeights {
    double w_dull = 1.0;
    double w_surprise = 1.0;
    double w_length = 1.0;
    double w_question = 1.0;
};

/// Max over dull templates of the bag-of-words cosine similarity, in [0,1].
/// An empty response counts as maximally dull (1).
double dull_similarity(const TokenSeq& response, const std::vector<TokenSeq>& dull_list);

/// 1 iff the response contains at least one token from the surprise set
/// (exact token match), else 0.
double surprise_reward(const TokenSeq& response, const std::vector<std::string>& surprise_set);

/// Step function of the token count: -0.5 below 5, 0 below 10, 0.5 below 15,
/// 1 from 15 up.
double length_reward(const TokenSeq& response);

/// 1 iff the response contains a question-set token or a "?" token, else 0.
double question_reward(const TokenSeq& response, const std::vector<std::string>& question_set);

/// -w_dull*dull + w_surprise*surprise + w_length*length + w_question*question.
double total_reward(const TokenSeq& response, const RewardWeights& weights,
                    const std::vector<TokenSeq>& dull_list,
                    const std::vector<std::string>& surprise_set,
                    const std::vector<std::string>& question_set);

/// One template per line, tokens separated by whitespace; blank lines skipped.
std::vector<TokenSeq> load_dull_templates(const std::string& path);

}  // namespace dgq
