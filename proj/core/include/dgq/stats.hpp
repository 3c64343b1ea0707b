#pragma once

#include <cstdint>
#include <vector>

namespace dgq {

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);  // population

/// Spearman rank correlation; average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// One-sided paired permutation test of H1: mean(a - b) > 0, with
/// `permutations` random sign flips. Returns the p-value.
double paired_permutation_pvalue(const std::vector<double>& a, const std::vector<double>& b,
                                 int permutations, std::uint64_t seed);

}  // namespace dgq
