#include "biomark/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "biomark/errors.hpp"

namespace biomark {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DataError("auc: scores and labels length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l == 1 ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("auc: both classes must be present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks within tie groups
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] == 1) rank_sum_pos += rank[k];
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double f1(const std::vector<int>& pred, const std::vector<int>& labels) {
    if (pred.size() != labels.size())
        throw DataError("f1: pred and labels length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && labels[i] == 1) ++tp;
        if (pred[i] == 1 && labels[i] == 0) ++fp;
        if (pred[i] == 0 && labels[i] == 1) ++fn;
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

double feature_precision(const std::vector<std::string>& selected,
                         const std::vector<std::string>& truth) {
    if (selected.empty())
        throw DataError("feature_precision: empty selection");
    std::unordered_set<std::string> truth_set(truth.begin(), truth.end());
    std::size_t hits = 0;
    for (const auto& id : selected) hits += truth_set.count(id);
    return static_cast<double>(hits) / static_cast<double>(selected.size());
}

} // namespace biomark
