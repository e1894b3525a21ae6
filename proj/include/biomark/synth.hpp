#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biomark/graph.hpp"
#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

/// Cohort simulation parameters. Data dimensions follow the default
/// four-layer layout (500/300/200/100 features, 200 samples).
struct SimConfig {
    std::size_t n_samples = 200;
    std::vector<std::pair<std::string, std::size_t>> modalities = {
        {"genomics", 500},
        {"transcriptomics", 300},
        {"proteomics", 200},
        {"metabolomics", 100},
    };
    std::size_t module_count = 5;
    std::size_t module_size = 10;
    double effect_size = 0.8; // case mean shift, in baseline-sd units
    double noise_sd = 0.5;
    double batch_sd = 0.2;
    std::size_t n_batches = 2;
    std::size_t ba_attach = 3; // attachment parameter of the scale-free graph

    void validate() const; // throws ConfigError naming the offending field
};

/// Multi-modality feature matrices over a shared, ordered sample set.
struct OmicsDataset {
    std::vector<std::string> modality_names;
    std::vector<Matrix> modalities; // samples x features, aligned sample order
    std::vector<std::vector<std::string>> feature_names; // per modality
    std::vector<int> labels;        // 0 = control, 1 = case
    std::vector<int> batch;         // per-sample batch id (empty if unknown)
    std::vector<std::vector<std::uint8_t>> truth_mask; // per modality; empty if absent
    std::vector<std::string> sample_ids;

    bool has_truth() const { return !truth_mask.empty(); }
    void validate() const;
};

/// Signal placement: the module_count highest-degree hubs, each bundled
/// with its strongest neighbors up to module_size members. Modules may
/// overlap when hubs are adjacent.
std::vector<std::vector<std::uint32_t>> pick_signal_modules(const GeneGraph& g,
                                                            std::size_t module_count,
                                                            std::size_t module_size);

/// Generate a cohort plus the gene-interaction graph the first modality's
/// signal modules were placed on. Deterministic under (cfg, rng seed).
std::pair<OmicsDataset, GeneGraph> simulate(const SimConfig& cfg, SeededRng rng);

/// Load pre-tabulated per-modality CSVs and a label file. Sample ids are
/// intersected across all files and sorted; missing values are mean-imputed
/// per feature, then every feature is standardized to mean 0 / sd 1.
OmicsDataset ingest_cohort(
    const std::vector<std::pair<std::string, std::string>>& modality_paths,
    const std::string& label_path);

/// Dump a cohort in the ingestion CSV layout (<modality>.csv, labels.csv),
/// plus truth_<modality>.csv mask files when ground truth is present.
void write_cohort_csv(const OmicsDataset& ds, const std::string& dir,
                      const std::string& provenance_comment = "");

} // namespace biomark
