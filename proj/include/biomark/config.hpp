#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biomark/gat.hpp"
#include "biomark/mvae.hpp"
#include "biomark/synth.hpp"

namespace biomark {

/// Sparse-selection hyperparameters used by the pipeline.
struct EnetConfig {
    double alpha = 0.5;
    double tol = 1e-7;
    std::size_t max_iter = 10000;
    std::size_t n_lambda = 50;
    double lambda_decades = 4.0;
    std::size_t n_folds = 5;
    std::string cv_rule = "1se"; // "min" or "1se"
};

struct FdrConfig {
    std::size_t n_perm = 999;
    double pi0_lambda = 0.5;
};

/// Data source: either a simulated cohort or CSV ingestion paths.
struct DataConfig {
    std::string mode = "simulate"; // "simulate" or "ingest"
    SimConfig sim;
    std::vector<std::pair<std::string, std::string>> ingest_modalities; // (name, path)
    std::string label_path;
    double corr_threshold = 0.6; // graph construction for ingested data
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    DataConfig data;
    GatConfig gat;
    MvaeConfig vae;
    EnetConfig enet;
    FdrConfig fdr;
    std::vector<double> thresholds = {0.01, 0.05, 0.10};
    std::size_t top_k = 20;
    double train_fraction = 0.7;

    void validate() const; // throws ConfigError naming the offending field
};

/// Strict JSON parse: unknown keys are rejected with their path, missing
/// keys fall back to defaults. Empty or "{}" input yields the defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text);

/// Canonical serialization with every field materialized (sorted keys,
/// compact). Two configs are operationally identical iff these bytes match.
std::string pipeline_config_canonical_json(const PipelineConfig& cfg);

/// FNV-1a hash of the canonical serialization, seed included.
std::uint64_t config_hash(const PipelineConfig& cfg);

/// Provenance string stamped into output headers: "config=<hex> seed=<n>".
std::string provenance_line(const PipelineConfig& cfg);

struct BenchmarkEntry {
    std::string method = "proposed";
    PipelineConfig config;
};

struct BenchmarkConfig {
    std::vector<std::uint64_t> seeds;
    std::vector<BenchmarkEntry> entries;
};

/// Layout: {"seeds":[...], "entries":[{"method":"...", "config":{...}}]}.
/// Missing seeds default to {1,2,3}; entries must be non-empty.
BenchmarkConfig parse_benchmark_config(const std::string& json_text);

} // namespace biomark
