#pragma once

#include <string>
#include <vector>

namespace biomark {

/// Area under the ROC curve via the Mann-Whitney rank statistic with
/// average ranks for ties: the probability a random positive outranks a
/// random negative. Throws DataError unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// 2·precision·recall / (precision + recall); 0 when there are no true
/// positives (covers the no-predictions and no-positives cases).
double f1(const std::vector<int>& pred, const std::vector<int>& labels);

/// |selected ∩ truth| / |selected|. Throws DataError on empty selection;
/// callers report that case as n/a instead.
double feature_precision(const std::vector<std::string>& selected,
                         const std::vector<std::string>& truth);

} // namespace biomark
