#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "biomark/errors.hpp"
#include "biomark/pipeline.hpp"
#include "biomark/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace biomark;

namespace {

// small but complete configuration; keeps the full stage chain under a second
std::string small_config_json(std::uint64_t seed, double effect = 1.2) {
    std::ostringstream ss;
    ss << R"({"seed": )" << seed << R"(,
        "data": {"mode": "simulate", "sim": {
            "n_samples": 60,
            "modalities": [{"name": "genomics", "features": 40},
                           {"name": "proteomics", "features": 20}],
            "module_count": 2, "module_size": 4,
            "effect_size": )"
       << effect << R"(, "noise_sd": 0.5, "batch_sd": 0.2, "ba_attach": 2}},
        "gat": {"heads": 2, "head_dim": 4, "epochs": 30},
        "vae": {"latent_dim": 4, "hidden_dim": 8, "epochs": 40},
        "enet": {"n_lambda": 25},
        "fdr": {"n_perm": 199},
        "top_k": 10})";
    return ss.str();
}

} // namespace

TEST_CASE("full pipeline run satisfies its output contracts") {
    const PipelineConfig cfg = parse_pipeline_config(small_config_json(5));
    const PipelineResult res = run_pipeline(cfg);

    // ranked features are original columns, never synthetic latents
    for (const auto& id : res.qvalues.feature_ids) {
        CHECK(id.rfind("latent.", 0) == std::string::npos);
        CHECK((id.rfind("genomics.", 0) == 0 || id.rfind("proteomics.", 0) == 0));
    }
    CHECK(res.qvalues.p.size() == res.qvalues.q.size());
    // the permutation test covers exactly the nonzero original coefficients
    CHECK(res.selected_features.size() == res.qvalues.q.size());
    CHECK(res.selected_beta.size() == res.selected_features.size());

    CHECK(res.report.auc >= 0.0);
    CHECK(res.report.auc <= 1.0);
    CHECK(res.report.f1 >= 0.0);
    CHECK(res.report.f1 <= 1.0);
    CHECK(res.report.selected == res.qvalues.count_significant(0.05));
    CHECK(res.report.runtime_seconds > 0.0);

    REQUIRE(res.map.nodes.size() <= 10);
    for (std::size_t k = 1; k < res.map.nodes.size(); ++k)
        CHECK(res.map.nodes[k - 1].q <= res.map.nodes[k].q);
    for (const auto& node : res.map.nodes) {
        CHECK(node.q <= 0.10 + 1e-12); // loosest default threshold
        CHECK(node.size == doctest::Approx(-std::log10(std::max(node.q, 1e-300))));
    }
    std::vector<std::string> on_map;
    for (const auto& node : res.map.nodes) on_map.push_back(node.id);
    for (const auto& edge : res.map.edges) {
        CHECK(std::find(on_map.begin(), on_map.end(), edge.a) != on_map.end());
        CHECK(std::find(on_map.begin(), on_map.end(), edge.b) != on_map.end());
        CHECK(edge.strength >= 0.0);
        CHECK(edge.strength <= 1.0);
    }
    CHECK(res.map.provenance == provenance_line(cfg));

    CHECK(res.graph.n_nodes == 40);
    CHECK(res.graph.edge_strength.size() == res.graph.edges.size());
    CHECK(!res.gat_loss.empty());
    CHECK(!res.vae_loss.empty());
}

TEST_CASE("pipeline artifacts are byte-identical across reruns") {
    const PipelineConfig cfg = parse_pipeline_config(small_config_json(7));
    testutil::TempDir d1, d2;
    write_pipeline_outputs(run_pipeline(cfg), cfg, d1.str());
    write_pipeline_outputs(run_pipeline(cfg), cfg, d2.str());

    for (const char* name :
         {"qvalues.csv", "map.dot", "map.json", "report.csv", "edges.tsv"}) {
        const std::string a = testutil::read_all(d1.str(name));
        const std::string b = testutil::read_all(d2.str(name));
        REQUIRE(!a.empty());
        CHECK(a == b);
    }

    const std::string prov = provenance_line(cfg);
    CHECK(testutil::read_all(d1.str("qvalues.csv")).find("# " + prov) !=
          std::string::npos);
    CHECK(testutil::read_all(d1.str("report.csv")).find("# " + prov) !=
          std::string::npos);
    CHECK(testutil::read_all(d1.str("report.csv"))
              .find("auc,f1,feature_precision,selected") != std::string::npos);
    CHECK(testutil::read_all(d1.str("map.dot")).rfind("// " + prov, 0) == 0);
}

TEST_CASE("different seeds change the artifacts") {
    const PipelineConfig a = parse_pipeline_config(small_config_json(11));
    const PipelineConfig b = parse_pipeline_config(small_config_json(12));
    testutil::TempDir d1, d2;
    write_pipeline_outputs(run_pipeline(a), a, d1.str());
    write_pipeline_outputs(run_pipeline(b), b, d2.str());
    CHECK(testutil::read_all(d1.str("qvalues.csv")) !=
          testutil::read_all(d2.str("qvalues.csv")));
}

TEST_CASE("attention smoothing can be disabled") {
    PipelineConfig cfg = parse_pipeline_config(small_config_json(13));
    cfg.vae.gat_smoothing = false;
    const PipelineResult res = run_pipeline(cfg);
    CHECK(res.report.auc >= 0.0);
    CHECK(res.qvalues.feature_ids.size() == res.qvalues.q.size());
}

TEST_CASE("ingest mode runs end to end on written cohort files") {
    // generate a cohort on disk, then ingest it back through the pipeline
    SimConfig sim;
    sim.n_samples = 50;
    sim.modalities = {{"rna", 30}, {"prot", 15}};
    sim.module_count = 2;
    sim.module_size = 3;
    sim.effect_size = 1.5;
    sim.ba_attach = 2;
    auto [ds, graph] = simulate(sim, SeededRng(1));
    testutil::TempDir data_dir;
    write_cohort_csv(ds, data_dir.str());

    std::ostringstream ss;
    ss << R"({"seed": 3, "data": {"mode": "ingest",
        "modalities": [{"name": "rna", "path": ")"
       << data_dir.str("rna.csv") << R"("},
                       {"name": "prot", "path": ")"
       << data_dir.str("prot.csv") << R"("}],
        "labels": ")"
       << data_dir.str("labels.csv") << R"(", "corr_threshold": 0.3},
        "gat": {"heads": 2, "head_dim": 3, "epochs": 15},
        "vae": {"latent_dim": 3, "hidden_dim": 6, "epochs": 25},
        "enet": {"n_lambda": 20},
        "fdr": {"n_perm": 199}})";
    const PipelineConfig cfg = parse_pipeline_config(ss.str());
    const PipelineResult res = run_pipeline(cfg);

    // no ground truth on ingested data
    CHECK(!res.report.feature_precision.has_value());
    CHECK(res.graph.n_nodes == 30);
    testutil::TempDir out;
    write_pipeline_outputs(res, cfg, out.str());
    const std::string report = testutil::read_all(out.str("report.csv"));
    CHECK(report.find(",na,") != std::string::npos);
}

TEST_CASE("stage failures carry the stage name") {
    PipelineConfig cfg = parse_pipeline_config(
        R"({"data": {"mode": "ingest",
             "modalities": [{"name": "a", "path": "/nonexistent/x.csv"}],
             "labels": "/nonexistent/l.csv"}})");
    try {
        run_pipeline(cfg);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).rfind("data:", 0) == 0);
    }
}

TEST_CASE("map export formats") {
    BiomarkerMap map;
    map.provenance = "config=0123456789abcdef seed=3";
    map.nodes.push_back({"geneA", 1e-6, 6.0, 0.5});
    map.nodes.push_back({"geneB", 0.02, -std::log10(0.02), -0.25});
    map.edges.push_back({"geneA", "geneB", 0.5});

    SUBCASE("dot rendering") {
        const std::string dot = map_to_dot(map);
        CHECK(dot.rfind("// config=0123456789abcdef seed=3", 0) == 0);
        CHECK(dot.find("graph biomarker_map {") != std::string::npos);
        CHECK(dot.find("\"geneA\" [width=1.5") != std::string::npos);
        CHECK(dot.find("\"geneA\" -- \"geneB\" [penwidth=3];") != std::string::npos);
        CHECK(dot.back() == '\n');
        CHECK(dot.find("}\n") != std::string::npos);
    }

    SUBCASE("json round trip") {
        const BiomarkerMap back = map_from_json_text(map_to_json_text(map));
        REQUIRE(back.nodes.size() == 2);
        CHECK(back.nodes[0].id == "geneA");
        CHECK(back.nodes[0].q == map.nodes[0].q);
        CHECK(back.nodes[0].size == map.nodes[0].size);
        CHECK(back.nodes[0].beta == map.nodes[0].beta);
        REQUIRE(back.edges.size() == 1);
        CHECK(back.edges[0].strength == 0.5);
        CHECK(back.provenance == map.provenance);
    }

    SUBCASE("exports and validation") {
        testutil::TempDir tmp;
        export_map(map, tmp.str("m.dot"), "dot");
        export_map(map, tmp.str("m.json"), "json");
        CHECK(testutil::read_all(tmp.str("m.dot")) == map_to_dot(map));
        CHECK(map_from_json_text(testutil::read_all(tmp.str("m.json"))).nodes.size() ==
              2);
        CHECK_THROWS_AS(export_map(map, tmp.str("m.x"), "svg"), ConfigError);
        CHECK_THROWS_AS(map_from_json_text("not json"), DataError);
        CHECK_THROWS_AS(map_from_json_text(R"({"nodes": [{"id": "x"}], "edges": []})"),
                        DataError);
    }

    SUBCASE("empty map still renders valid dot") {
        BiomarkerMap empty;
        empty.provenance = "config=0 seed=0";
        const std::string dot = map_to_dot(empty);
        CHECK(dot.find("graph biomarker_map {") != std::string::npos);
        CHECK(dot.find("}\n") != std::string::npos);
    }
}

TEST_CASE("benchmark grid aggregates per method") {
    std::ostringstream ss;
    ss << R"({"seeds": [21, 22], "entries": [
        {"method": "proposed", "config": )"
       << small_config_json(0) << R"(},
        {"method": "no_smoothing", "config": )";
    ss << R"({"seed": 0,
        "data": {"mode": "simulate", "sim": {
            "n_samples": 60,
            "modalities": [{"name": "genomics", "features": 40},
                           {"name": "proteomics", "features": 20}],
            "module_count": 2, "module_size": 4,
            "effect_size": 1.2, "noise_sd": 0.5, "batch_sd": 0.2, "ba_attach": 2}},
        "gat": {"heads": 2, "head_dim": 4, "epochs": 30},
        "vae": {"latent_dim": 4, "hidden_dim": 8, "epochs": 40, "gat_smoothing": false},
        "enet": {"n_lambda": 25},
        "fdr": {"n_perm": 199},
        "top_k": 10}}]})";
    const BenchmarkConfig bc = parse_benchmark_config(ss.str());
    const auto rows = run_benchmark(bc);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(!row.failed);
        CHECK(row.n_runs == 2);
        CHECK(row.auc_mean >= 0.0);
        CHECK(row.auc_mean <= 1.0);
        CHECK(row.auc_sd >= 0.0);
        CHECK(std::isfinite(row.fp_mean)); // simulated truth available
    }
    CHECK(rows[0].method == "proposed");
    CHECK(rows[1].method == "no_smoothing");

    const std::string csv = benchmark_csv(rows);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "method,auc_mean,auc_sd,f1_mean,f1_sd,fp_mean,fp_sd");
    std::string row1, row2, extra;
    REQUIRE(std::getline(lines, row1));
    REQUIRE(std::getline(lines, row2));
    CHECK(!std::getline(lines, extra));
    CHECK(row1.rfind("proposed,", 0) == 0);
    CHECK(row2.rfind("no_smoothing,", 0) == 0);
}

TEST_CASE("benchmark rows survive a failing entry") {
    std::ostringstream ss;
    ss << R"({"seeds": [31], "entries": [
        {"method": "broken", "config": {"data": {"mode": "ingest",
            "modalities": [{"name": "a", "path": "/nonexistent/a.csv"}],
            "labels": "/nonexistent/l.csv"}}},
        {"method": "works", "config": )"
       << small_config_json(0) << R"(}]})";
    const auto rows = run_benchmark(parse_benchmark_config(ss.str()));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].failed);
    CHECK(!rows[0].error.empty());
    CHECK(std::isnan(rows[0].auc_mean));
    CHECK(!rows[1].failed);

    const std::string csv = benchmark_csv(rows);
    CHECK(csv.find("broken,nan,") != std::string::npos);
}

TEST_CASE("simulated cohorts can be written for later ingestion") {
    const PipelineConfig cfg = parse_pipeline_config(small_config_json(17));
    testutil::TempDir out;
    write_simulated_cohort(cfg, out.str());
    for (const char* name :
         {"genomics.csv", "proteomics.csv", "labels.csv", "edges.tsv",
          "truth_genomics.csv"})
        CHECK(!testutil::read_all(out.str(name)).empty());

    PipelineConfig bad = cfg;
    bad.data.mode = "ingest";
    bad.data.ingest_modalities = {{"a", "b"}};
    bad.data.label_path = "l";
    CHECK_THROWS_AS(write_simulated_cohort(bad, out.str()), ConfigError);
}
