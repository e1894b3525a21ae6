#pragma once

#include <string>
#include <vector>

#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

struct PValueSet {
    std::vector<std::string> feature_ids;
    std::vector<double> p;
    std::string method; // "permutation" or "t_test"
};

struct QValueTable {
    std::vector<std::string> feature_ids;
    std::vector<double> p;
    std::vector<double> q;
    double pi0 = 1.0;
    std::vector<double> thresholds;                // {0.01, 0.05, 0.10}
    std::vector<std::vector<bool>> significant_at; // [feature][threshold], q <= t

    std::size_t count_significant(double threshold) const;
};

/// Per-feature statistic given 0/1 labels. Group sums accumulate in sample
/// index order, which pins down floating-point results for exact-match tests.
using PermStat = std::vector<double> (*)(const Matrix& x, const std::vector<int>& labels);

/// Two-sample mean difference (class 1 minus class 0) per feature.
std::vector<double> mean_diff_stat(const Matrix& x, const std::vector<int>& labels);

/// Permutation p-values with add-one smoothing:
///   p_j = (1 + #{b : |stat_b,j| >= |stat_obs,j|}) / (B + 1)
/// Labels are reshuffled per permutation from an independent substream.
PValueSet perm_pvalues(const Matrix& x, const std::vector<int>& labels,
                       const std::vector<std::string>& feature_ids, std::size_t n_perm,
                       SeededRng rng, PermStat stat = mean_diff_stat);

/// Exact permutation p-values over all distinct 0/1 labelings (the observed
/// one included, so p > 0 without smoothing): p_j = #{|stat| >= |obs|} / total.
/// Refuses instances with more than 200000 labelings.
PValueSet perm_pvalues_exhaustive(const Matrix& x, const std::vector<int>& labels,
                                  const std::vector<std::string>& feature_ids,
                                  PermStat stat = mean_diff_stat);

/// Storey q-values. pi0 = #{p > lambda} / (m·(1-lambda)), capped at 1 and
/// floored at 1/m. With p sorted ascending, q_(i) = min_{k>=i} pi0·p_(k)·m/k,
/// clamped to [0,1]. pi0 = 1 reduces this to Benjamini-Hochberg adjustment.
QValueTable storey_qvalues(const PValueSet& pvals, double lambda);

/// CSV with columns feature,p,q,sig_0.01,sig_0.05,sig_0.10. pi0 and any
/// extra provenance lines are written as leading '#' comments.
void write_qvalues_csv(const QValueTable& table, const std::string& path,
                       const std::vector<std::string>& header_comments = {});

} // namespace biomark
