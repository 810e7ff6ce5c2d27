#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cbct/eval/metrics.hpp"

namespace cbct::eval {

namespace {

// Twice the average rank of each |d| (integers even with ties).
std::vector<int> doubled_ranks(const std::vector<double>& abs_d, std::vector<int>* tie_sizes) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<int> r2(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        // Positions i..j (0-based) hold ranks i+1..j+1; their doubled mean is i+j+2.
        for (std::size_t k = i; k <= j; ++k) r2[order[k]] = static_cast<int>(i + j + 2);
        if (tie_sizes) tie_sizes->push_back(static_cast<int>(j - i + 1));
        i = j + 1;
    }
    return r2;
}

}  // namespace

double wilcoxon_one_sided(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("wilcoxon: samples have different lengths (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    }
    std::vector<double> abs_d;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon: non-finite difference");
        if (d == 0.0) continue;
        abs_d.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }
    const int n = static_cast<int>(abs_d.size());
    if (n == 0) throw std::invalid_argument("wilcoxon: all differences are zero");
    if (n < kWilcoxonMinPairs) {
        throw std::invalid_argument("wilcoxon: " + std::to_string(n) + " non-zero differences, need at least " +
                                    std::to_string(kWilcoxonMinPairs));
    }

    std::vector<int> ties;
    const auto r2 = doubled_ranks(abs_d, &ties);
    int w2 = 0;
    for (int i = 0; i < n; ++i) {
        if (positive[static_cast<std::size_t>(i)]) w2 += r2[static_cast<std::size_t>(i)];
    }

    if (n <= kWilcoxonExactMax) {
        // counts[s] = number of sign assignments whose doubled W+ equals s.
        const int total = std::accumulate(r2.begin(), r2.end(), 0);
        std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
        counts[0] = 1.0;
        int reach = 0;
        for (int r : r2) {
            for (int s = reach; s >= 0; --s) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
            reach += r;
        }
        double tail = 0.0;
        for (int s = w2; s <= total; ++s) tail += counts[static_cast<std::size_t>(s)];
        return tail / std::ldexp(1.0, n);
    }

    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (int t : ties) var -= (static_cast<double>(t) * t * t - t) / 48.0;
    const double w = w2 / 2.0;
    const double z = (w - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace cbct::eval
