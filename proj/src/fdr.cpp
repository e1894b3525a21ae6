#include "biomark/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "biomark/errors.hpp"
#include "biomark/io.hpp"

namespace biomark {

namespace {

void check_two_classes(const std::vector<int>& labels) {
    std::size_t n0 = 0, n1 = 0;
    for (int l : labels) {
        if (l == 0)
            ++n0;
        else if (l == 1)
            ++n1;
        else
            throw DataError("permutation test: labels must be 0 or 1");
    }
    if (n0 == 0 || n1 == 0)
        throw DataError("permutation test: both classes must be present");
}

void check_inputs(const Matrix& x, const std::vector<int>& labels,
                  const std::vector<std::string>& feature_ids) {
    if (x.rows() != labels.size())
        throw DataError("permutation test: rows != label count");
    if (x.cols() != feature_ids.size())
        throw DataError("permutation test: columns != feature id count");
    if (x.cols() == 0) throw DataError("permutation test: no features");
    check_two_classes(labels);
}

} // namespace

std::size_t QValueTable::count_significant(double threshold) const {
    std::size_t n = 0;
    for (double v : q)
        if (v <= threshold) ++n;
    return n;
}

std::vector<double> mean_diff_stat(const Matrix& x, const std::vector<int>& labels) {
    const std::size_t p = x.cols();
    std::vector<double> sum0(p, 0.0), sum1(p, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row(i);
        double* dst = labels[i] == 1 ? sum1.data() : sum0.data();
        (labels[i] == 1 ? n1 : n0)++;
        for (std::size_t j = 0; j < p; ++j) dst[j] += row[j];
    }
    std::vector<double> stat(p);
    for (std::size_t j = 0; j < p; ++j)
        stat[j] = sum1[j] / static_cast<double>(n1) - sum0[j] / static_cast<double>(n0);
    return stat;
}

PValueSet perm_pvalues(const Matrix& x, const std::vector<int>& labels,
                       const std::vector<std::string>& feature_ids, std::size_t n_perm,
                       SeededRng rng, PermStat stat) {
    check_inputs(x, labels, feature_ids);
    if (n_perm < 99)
        throw ConfigError("permutation test: need at least 99 permutations, got " +
                          std::to_string(n_perm));

    const std::vector<double> obs = stat(x, labels);
    std::vector<std::size_t> exceed(x.cols(), 0);

    for (std::size_t b = 0; b < n_perm; ++b) {
        SeededRng pr = rng.split("perm/" + std::to_string(b));
        std::vector<int> perm = labels;
        pr.shuffle(perm);
        const std::vector<double> s = stat(x, perm);
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (std::abs(s[j]) >= std::abs(obs[j])) ++exceed[j];
    }

    PValueSet out;
    out.feature_ids = feature_ids;
    out.method = "permutation";
    out.p.resize(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j)
        out.p[j] = static_cast<double>(1 + exceed[j]) / static_cast<double>(n_perm + 1);
    return out;
}

PValueSet perm_pvalues_exhaustive(const Matrix& x, const std::vector<int>& labels,
                                  const std::vector<std::string>& feature_ids,
                                  PermStat stat) {
    check_inputs(x, labels, feature_ids);
    const std::size_t n = labels.size();
    const std::size_t n1 = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));

    double total_d = 1.0;
    for (std::size_t i = 0; i < n1; ++i)
        total_d = total_d * static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (total_d > 200000.0)
        throw ConfigError("exhaustive permutation test: too many labelings (" +
                          std::to_string(static_cast<long long>(total_d)) + ")");

    const std::vector<double> obs = stat(x, labels);
    std::vector<std::size_t> exceed(x.cols(), 0);
    std::size_t total = 0;

    // enumerate index combinations for the class-1 positions
    std::vector<std::size_t> pick(n1);
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<int> perm(n);
    while (true) {
        std::fill(perm.begin(), perm.end(), 0);
        for (std::size_t i : pick) perm[i] = 1;
        const std::vector<double> s = stat(x, perm);
        for (std::size_t j = 0; j < x.cols(); ++j)
            if (std::abs(s[j]) >= std::abs(obs[j])) ++exceed[j];
        ++total;

        // advance to the next combination
        std::size_t k = n1;
        while (k > 0 && pick[k - 1] == n - n1 + k - 1) --k;
        if (k == 0) break;
        ++pick[k - 1];
        for (std::size_t i = k; i < n1; ++i) pick[i] = pick[i - 1] + 1;
    }

    PValueSet out;
    out.feature_ids = feature_ids;
    out.method = "permutation";
    out.p.resize(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j)
        out.p[j] = static_cast<double>(exceed[j]) / static_cast<double>(total);
    return out;
}

QValueTable storey_qvalues(const PValueSet& pvals, double lambda) {
    const std::size_t m = pvals.p.size();
    if (m == 0) throw DataError("storey_qvalues: empty p-value set");
    if (pvals.feature_ids.size() != m)
        throw DataError("storey_qvalues: feature id count mismatch");
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw ConfigError("storey_qvalues: lambda must be in [0,1), got " +
                          std::to_string(lambda));
    for (double p : pvals.p)
        if (!(p >= 0.0 && p <= 1.0))
            throw DataError("storey_qvalues: p-value outside [0,1]");

    QValueTable table;
    table.feature_ids = pvals.feature_ids;
    table.p = pvals.p;

    std::size_t n_above = 0;
    for (double p : pvals.p)
        if (p > lambda) ++n_above;
    const double md = static_cast<double>(m);
    double pi0 = static_cast<double>(n_above) / (md * (1.0 - lambda));
    pi0 = std::min(1.0, pi0);
    pi0 = std::max(pi0, 1.0 / md);
    table.pi0 = pi0;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvals.p[a] < pvals.p[b]; });

    table.q.resize(m);
    double running = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        const double rank = static_cast<double>(i + 1);
        const double raw = ((pi0 * pvals.p[order[i]]) * md) / rank;
        running = std::min(running, raw);
        table.q[order[i]] = std::clamp(running, 0.0, 1.0);
    }

    table.thresholds = {0.01, 0.05, 0.10};
    table.significant_at.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        table.significant_at[i].resize(table.thresholds.size());
        for (std::size_t t = 0; t < table.thresholds.size(); ++t)
            table.significant_at[i][t] = table.q[i] <= table.thresholds[t];
    }
    return table;
}

void write_qvalues_csv(const QValueTable& table, const std::string& path,
                       const std::vector<std::string>& header_comments) {
    std::ostringstream out;
    out << "# pi0=" << fmt_double(table.pi0) << "\n";
    for (const auto& line : header_comments) out << "# " << line << "\n";
    out << "feature,p,q";
    for (double t : table.thresholds) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", t);
        out << ",sig_" << buf;
    }
    out << "\n";
    for (std::size_t i = 0; i < table.q.size(); ++i) {
        out << table.feature_ids[i] << "," << fmt_double(table.p[i]) << ","
            << fmt_double(table.q[i]);
        for (std::size_t t = 0; t < table.thresholds.size(); ++t)
            out << "," << (table.significant_at[i][t] ? 1 : 0);
        out << "\n";
    }
    write_file(path, out.str());
}

} // namespace biomark
