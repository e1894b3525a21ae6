#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "biomark/errors.hpp"
#include "biomark/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace biomark;

namespace {

SimConfig small_config() {
    SimConfig cfg;
    cfg.n_samples = 60;
    cfg.modalities = {{"genomics", 40}, {"proteomics", 20}};
    cfg.module_count = 2;
    cfg.module_size = 4;
    cfg.ba_attach = 2;
    return cfg;
}

double column_mean(const Matrix& x, std::size_t j, const std::vector<int>& keep,
                   int want) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (keep[i] == want) {
            s += x.at(i, j);
            ++n;
        }
    return s / static_cast<double>(n);
}

double column_var(const Matrix& x, std::size_t j, const std::vector<int>& keep,
                  int want) {
    const double m = column_mean(x, j, keep, want);
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (keep[i] == want) {
            const double d = x.at(i, j) - m;
            s += d * d;
            ++n;
        }
    return s / static_cast<double>(n - 1);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_CASE("default simulation has the documented shape") {
    SimConfig cfg;
    auto [ds, graph] = simulate(cfg, SeededRng(1));

    REQUIRE(ds.modalities.size() == 4);
    CHECK(ds.modalities[0].rows() == 200);
    CHECK(ds.modalities[0].cols() == 500);
    CHECK(ds.modalities[1].cols() == 300);
    CHECK(ds.modalities[2].cols() == 200);
    CHECK(ds.modalities[3].cols() == 100);
    CHECK(graph.n_nodes == 500);

    // balanced, interleaved labels; batches alternate in pairs
    int cases = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        cases += ds.labels[i];
        CHECK(ds.labels[i] == static_cast<int>(i % 2));
        CHECK(ds.batch[i] == static_cast<int>((i / 2) % 2));
    }
    CHECK(cases == 100);

    // every batch contains both classes
    std::set<std::pair<int, int>> combos;
    for (std::size_t i = 0; i < 200; ++i) combos.insert({ds.batch[i], ds.labels[i]});
    CHECK(combos.size() == 4);

    for (const auto& m : ds.modalities) CHECK(m.all_finite());
}

TEST_CASE("truth masks mark hub modules and leading blocks") {
    SimConfig cfg;
    auto [ds, graph] = simulate(cfg, SeededRng(2));
    REQUIRE(ds.truth_mask.size() == 4);

    const std::size_t budget = cfg.module_count * cfg.module_size;
    const auto count_ones = [](const std::vector<std::uint8_t>& m) {
        return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
    };

    // graph modality: union of hub neighborhoods, overlap allowed
    CHECK(count_ones(ds.truth_mask[0]) <= budget);
    CHECK(count_ones(ds.truth_mask[0]) >= cfg.module_size);

    // other modalities: exactly the first budget indices
    for (std::size_t m = 1; m < 4; ++m) {
        for (std::size_t j = 0; j < ds.truth_mask[m].size(); ++j)
            CHECK(ds.truth_mask[m][j] == (j < budget ? 1 : 0));
    }

    // single module is trivially disjoint, so the graph mask is exact
    SimConfig one = cfg;
    one.module_count = 1;
    auto [ds1, g1] = simulate(one, SeededRng(3));
    CHECK(count_ones(ds1.truth_mask[0]) == one.module_size);
}

TEST_CASE("signal modules sit on the highest-degree hubs") {
    const GeneGraph g = barabasi_albert(100, 3, SeededRng(4));
    const auto modules = pick_signal_modules(g, 3, 5);
    REQUIRE(modules.size() == 3);
    const auto deg = g.degrees();
    std::size_t max_deg = *std::max_element(deg.begin(), deg.end());

    // first module contains the top hub and only hub-adjacent nodes
    const auto& m0 = modules[0];
    CHECK(m0.size() == 5);
    bool has_top = false;
    for (std::uint32_t v : m0)
        if (deg[v] == max_deg) has_top = true;
    CHECK(has_top);
    for (const auto& mod : modules) {
        CHECK(std::is_sorted(mod.begin(), mod.end()));
        CHECK(std::set<std::uint32_t>(mod.begin(), mod.end()).size() == mod.size());
    }
}

TEST_CASE("simulation is deterministic per seed") {
    SimConfig cfg = small_config();
    auto [a, ga] = simulate(cfg, SeededRng(42));
    auto [b, gb] = simulate(cfg, SeededRng(42));
    CHECK(ga.edges == gb.edges);
    for (std::size_t m = 0; m < a.modalities.size(); ++m)
        CHECK(a.modalities[m].data() == b.modalities[m].data());
    auto [c, gc] = simulate(cfg, SeededRng(43));
    CHECK(a.modalities[0].data() != c.modalities[0].data());
}

TEST_CASE("null simulation shows no systematic class separation") {
    SimConfig cfg;
    cfg.effect_size = 0.0;
    cfg.noise_sd = 0.0;
    cfg.batch_sd = 0.0;
    auto [ds, graph] = simulate(cfg, SeededRng(5));

    const double bound = 4.0 / std::sqrt(static_cast<double>(cfg.n_samples));
    std::size_t total = 0, exceed = 0;
    double grand = 0.0;
    for (const auto& x : ds.modalities) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double diff = column_mean(x, j, ds.labels, 1) -
                                column_mean(x, j, ds.labels, 0);
            grand += diff;
            ++total;
            if (std::abs(diff) > bound) ++exceed;
        }
    }
    CHECK(std::abs(grand / static_cast<double>(total)) < bound);
    // per-feature diffs are mean-zero noise; only a small tail may cross 4/sqrt(n)
    CHECK(static_cast<double>(exceed) / static_cast<double>(total) <= 0.12);
}

TEST_CASE("default effect size separates the signal features") {
    SimConfig cfg; // effect 0.8
    auto [ds, graph] = simulate(cfg, SeededRng(6));

    std::size_t n_signal = 0, strong = 0;
    for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
        const auto& x = ds.modalities[m];
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (!ds.truth_mask[m][j]) continue;
            ++n_signal;
            const double diff =
                column_mean(x, j, ds.labels, 1) - column_mean(x, j, ds.labels, 0);
            const double se = std::sqrt(column_var(x, j, ds.labels, 1) / 100.0 +
                                        column_var(x, j, ds.labels, 0) / 100.0);
            const double z = diff / se;
            const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
            if (p < 0.01) ++strong;
        }
    }
    REQUIRE(n_signal > 0);
    CHECK(static_cast<double>(strong) / static_cast<double>(n_signal) >= 0.9);
}

TEST_CASE("strong batch effects dominate the leading principal component") {
    SimConfig cfg;
    cfg.effect_size = 0.0;
    cfg.batch_sd = 1.0;
    auto [ds, graph] = simulate(cfg, SeededRng(7));

    // power iteration on X X^T gives the PC1 score vector
    const Matrix& x0 = ds.modalities[0];
    const std::size_t n = x0.rows(), p = x0.cols();
    Matrix xc(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x0.at(i, j);
        m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) xc.at(i, j) = x0.at(i, j) - m;
    }
    std::vector<double> u(n, 1.0);
    for (int it = 0; it < 60; ++it) {
        // u <- Xc (Xc^T u), normalized
        std::vector<double> w(p, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) w[j] += xc.at(i, j) * u[i];
        std::vector<double> v(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) v[i] += xc.at(i, j) * w[j];
        double norm = 0.0;
        for (double t : v) norm += t * t;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) u[i] = v[i] / norm;
    }

    std::vector<double> batch_d(n), label_d(n);
    for (std::size_t i = 0; i < n; ++i) {
        batch_d[i] = static_cast<double>(ds.batch[i]);
        label_d[i] = static_cast<double>(ds.labels[i]);
    }
    CHECK(std::abs(pearson(u, batch_d)) > std::abs(pearson(u, label_d)));
}

TEST_CASE("sim config validation rejects bad parameters") {
    SimConfig cfg = small_config();
    cfg.n_samples = 61;
    CHECK_THROWS_AS(simulate(cfg, SeededRng(1)), ConfigError);

    cfg = small_config();
    cfg.module_count = 10;
    cfg.module_size = 10; // 100 > smallest modality (20)
    CHECK_THROWS_AS(simulate(cfg, SeededRng(1)), ConfigError);

    cfg = small_config();
    cfg.noise_sd = -0.1;
    CHECK_THROWS_AS(simulate(cfg, SeededRng(1)), ConfigError);

    cfg = small_config();
    cfg.ba_attach = 40; // >= first modality width
    CHECK_THROWS_AS(simulate(cfg, SeededRng(1)), ConfigError);

    cfg = small_config();
    cfg.n_batches = 0;
    CHECK_THROWS_AS(simulate(cfg, SeededRng(1)), ConfigError);
}

TEST_CASE("ingest intersects sample ids across files") {
    testutil::TempDir tmp;
    testutil::write_text(tmp.str("a.csv"),
                         "sample_id,f1,f2\nS1,1.0,4.0\nS2,2.0,5.0\nS3,3.0,6.0\nS5,9.0,9.0\n");
    testutil::write_text(tmp.str("b.csv"),
                         "sample_id,g1\nS4,0.0\nS3,30.0\nS2,20.0\nS1,10.0\n");
    testutil::write_text(tmp.str("labels.csv"),
                         "sample_id,label\nS1,0\nS2,1\nS3,0\nS5,1\n");

    const OmicsDataset ds = ingest_cohort({{"alpha", tmp.str("a.csv")},
                                           {"beta", tmp.str("b.csv")}},
                                          tmp.str("labels.csv"));
    REQUIRE(ds.sample_ids == std::vector<std::string>{"S1", "S2", "S3"});
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    REQUIRE(ds.modalities.size() == 2);
    CHECK(ds.modalities[0].rows() == 3);
    CHECK(ds.modalities[0].cols() == 2);
    CHECK(ds.feature_names[0][0] == "alpha.f1");
    CHECK(ds.feature_names[1][0] == "beta.g1");

    // rows must be realigned to the sorted id order regardless of file order
    // beta column {10,20,30} standardizes to -sqrt(3/2), 0, +sqrt(3/2)
    const double s = std::sqrt(1.5);
    CHECK(ds.modalities[1].at(0, 0) == doctest::Approx(-s).epsilon(1e-12));
    CHECK(ds.modalities[1].at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ds.modalities[1].at(2, 0) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("ingest mean-imputes missing cells before standardizing") {
    testutil::TempDir tmp;
    testutil::write_text(tmp.str("a.csv"), "sample_id,f1\nS1,1.0\nS2,NA\nS3,3.0\n");
    testutil::write_text(tmp.str("labels.csv"), "sample_id,label\nS1,0\nS2,1\nS3,0\n");
    const OmicsDataset ds =
        ingest_cohort({{"m", tmp.str("a.csv")}}, tmp.str("labels.csv"));
    // fill = mean(1,3) = 2, then {1,2,3} standardized
    const double s = std::sqrt(1.5);
    CHECK(ds.modalities[0].at(0, 0) == doctest::Approx(-s).epsilon(1e-12));
    CHECK(ds.modalities[0].at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ds.modalities[0].at(2, 0) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("ingested features are standardized to mean zero and unit sd") {
    testutil::TempDir tmp;
    SeededRng r(8);
    std::string csv = "sample_id,f1,f2,f3\n";
    for (int i = 0; i < 25; ++i) {
        csv += "S" + std::to_string(i);
        for (int j = 0; j < 3; ++j)
            csv += "," + std::to_string(r.gauss(5.0, 3.0));
        csv += "\n";
    }
    std::string labels = "sample_id,label\n";
    for (int i = 0; i < 25; ++i)
        labels += "S" + std::to_string(i) + "," + std::to_string(i % 2) + "\n";
    testutil::write_text(tmp.str("a.csv"), csv);
    testutil::write_text(tmp.str("labels.csv"), labels);

    const OmicsDataset ds =
        ingest_cohort({{"m", tmp.str("a.csv")}}, tmp.str("labels.csv"));
    const Matrix& x = ds.modalities[0];
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mean += x.at(i, j);
        mean /= static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double d = x.at(i, j) - mean;
            sq += d * d;
        }
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(sq / x.rows()) - 1.0) < 1e-9);
    }
}

TEST_CASE("ingest error reporting names the offending cell") {
    testutil::TempDir tmp;
    testutil::write_text(tmp.str("a.csv"), "sample_id,f1\nS1,1.0\nS2,oops\n");
    testutil::write_text(tmp.str("labels.csv"), "sample_id,label\nS1,0\nS2,1\n");
    try {
        ingest_cohort({{"m", tmp.str("a.csv")}}, tmp.str("labels.csv"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("oops") != std::string::npos);
        CHECK(msg.find("row 3") != std::string::npos);
    }
}

TEST_CASE("ingest failure modes") {
    testutil::TempDir tmp;
    testutil::write_text(tmp.str("a.csv"), "sample_id,f1\nS1,1.0\n");
    testutil::write_text(tmp.str("labels.csv"), "sample_id,label\nS9,0\n");
    CHECK_THROWS_AS(
        ingest_cohort({{"m", tmp.str("a.csv")}}, tmp.str("labels.csv")),
        DataError); // empty intersection
    CHECK_THROWS_AS(
        ingest_cohort({{"m", tmp.str("missing.csv")}}, tmp.str("labels.csv")),
        DataError);
    CHECK_THROWS_AS(ingest_cohort({}, tmp.str("labels.csv")), ConfigError);

    testutil::write_text(tmp.str("bad_labels.csv"), "sample_id,label\nS1,2\n");
    CHECK_THROWS_AS(
        ingest_cohort({{"m", tmp.str("a.csv")}}, tmp.str("bad_labels.csv")),
        DataError);
}

TEST_CASE("cohort csv round trip preserves samples and labels") {
    SimConfig cfg = small_config();
    auto [ds, graph] = simulate(cfg, SeededRng(9));

    testutil::TempDir tmp;
    write_cohort_csv(ds, tmp.str(), "config=cafe seed=9");

    std::vector<std::pair<std::string, std::string>> paths;
    for (const auto& name : ds.modality_names)
        paths.emplace_back(name, tmp.str(name + ".csv"));
    const OmicsDataset back = ingest_cohort(paths, tmp.str("labels.csv"));

    REQUIRE(back.sample_ids == ds.sample_ids);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.modalities.size() == ds.modalities.size());

    // ingested values are the standardized originals
    const Matrix& orig = ds.modalities[0];
    const Matrix& got = back.modalities[0];
    for (std::size_t j = 0; j < orig.cols(); ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < orig.rows(); ++i) mean += orig.at(i, j);
        mean /= static_cast<double>(orig.rows());
        for (std::size_t i = 0; i < orig.rows(); ++i) {
            const double d = orig.at(i, j) - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / orig.rows());
        for (std::size_t i = 0; i < orig.rows(); ++i)
            CHECK(got.at(i, j) ==
                  doctest::Approx((orig.at(i, j) - mean) / sd).epsilon(1e-9));
    }

    const std::string labels_text = testutil::read_all(tmp.str("labels.csv"));
    CHECK(labels_text.find("# config=cafe seed=9") != std::string::npos);
    CHECK(testutil::read_all(tmp.str("truth_genomics.csv")).find("feature,signal") !=
          std::string::npos);
}
