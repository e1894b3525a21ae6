#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biomark/config.hpp"
#include "biomark/fdr.hpp"
#include "biomark/graph.hpp"

namespace biomark {

struct MapNode {
    std::string id;
    double q = 1.0;
    double size = 0.0; // -log10(q)
    double beta = 0.0;
};

struct MapEdge {
    std::string a;
    std::string b;
    double strength = 0.0;
};

/// Top-ranked features with the strongest learned interactions among them.
/// Nodes are ordered by (q asc, |beta| desc, id asc); every edge endpoint
/// is a listed node.
struct BiomarkerMap {
    std::vector<MapNode> nodes;
    std::vector<MapEdge> edges;
    std::string provenance; // "config=<hex> seed=<n>"
};

struct EvalReport {
    double auc = 0.0;
    double f1 = 0.0;
    std::optional<double> feature_precision; // absent without ground truth
    std::size_t selected = 0;                // features with q <= 0.05
    // kept out of the written report so identical runs produce identical bytes
    double runtime_seconds = 0.0;
};

struct PipelineResult {
    QValueTable qvalues;
    BiomarkerMap map;
    EvalReport report;
    GeneGraph graph; // learned attention strengths on the gene graph
    std::vector<std::string> selected_features; // nonzero-coefficient originals
    std::vector<double> selected_beta;
    double lambda_chosen = 0.0;
    std::vector<double> gat_loss;
    std::vector<double> vae_loss;
};

/// Full run: data (simulate or ingest) -> stratified 70/30 split -> gene
/// graph -> attention training -> multi-modal encoding -> sparse selection
/// with cross-validated lambda -> permutation FDR on the surviving original
/// features -> map + held-out evaluation. Stage failures rethrow with the
/// stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Writes qvalues.csv, map.dot, map.json, report.csv, edges.tsv into dir.
void write_pipeline_outputs(const PipelineResult& result, const PipelineConfig& cfg,
                            const std::string& out_dir);

/// DOT rendering: node width 0.3 + 0.2·(-log10 q clamped to [0,6]), fill
/// bucketed into 4 color classes by q quartile, edge penwidth 1 + 4·strength.
std::string map_to_dot(const BiomarkerMap& map);
std::string map_to_json_text(const BiomarkerMap& map);
BiomarkerMap map_from_json_text(const std::string& text);

/// format is "dot" or "json"; anything else is a config error.
void export_map(const BiomarkerMap& map, const std::string& path, const std::string& format);

struct BenchmarkRow {
    std::string method;
    std::size_t n_runs = 0;
    double auc_mean = 0.0, auc_sd = 0.0;
    double f1_mean = 0.0, f1_sd = 0.0;
    double fp_mean = 0.0, fp_sd = 0.0; // nan when no run had ground truth
    bool failed = false;
    std::string error;
};

/// One row per entry, aggregated over the seed list. A failing run marks
/// the whole row failed (metrics nan) and the grid continues.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg);

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);
void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::string& path);

/// The `simulate` subcommand: cohort CSVs plus the generating graph.
void write_simulated_cohort(const PipelineConfig& cfg, const std::string& out_dir);

} // namespace biomark
