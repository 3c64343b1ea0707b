#include "dgq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dgq/rng.hpp"

namespace dgq {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

double stddev(const std::vector<double>& xs) {
    double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / xs.size());
}

namespace {

std::vector<double> ranks(const std::vector<double>& xs) {
    std::vector<size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (size_t k = i; k < j; ++k) r[order[k]] = avg;
        i = j;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length series");
    std::vector<double> rx = ranks(xs), ry = ranks(ys);
    double mx = mean(rx), my = mean(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

double paired_permutation_pvalue(const std::vector<double>& a, const std::vector<double>& b,
                                 int permutations, std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("paired_permutation_pvalue: need paired samples");
    std::vector<double> diff(a.size());
    for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    double observed = mean(diff);

    std::mt19937_64 rng = make_rng(seed, 0);
    std::uniform_int_distribution<int> coin(0, 1);
    int at_least = 1;  // observed labelling counts
    for (int p = 0; p < permutations; ++p) {
        double sum = 0.0;
        for (double d : diff) sum += coin(rng) ? d : -d;
        if (sum / diff.size() >= observed) ++at_least;
    }
    return static_cast<double>(at_least) / (permutations + 1);
}

}  // namespace dgq
