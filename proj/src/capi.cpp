#include "biomark.h"

#include <cstring>
#include <string>

#include "biomark/config.hpp"
#include "biomark/errors.hpp"
#include "biomark/fdr.hpp"
#include "biomark/io.hpp"
#include "biomark/metrics.hpp"
#include "biomark/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

bm_status fail(bm_status status, const char* what) {
    g_last_error = what;
    return status;
}

template <typename F>
bm_status guarded(F&& f) {
    try {
        f();
        return BM_OK;
    } catch (const biomark::ConfigError& e) {
        return fail(BM_ERR_CONFIG, e.what());
    } catch (const biomark::DataError& e) {
        return fail(BM_ERR_DATA, e.what());
    } catch (const biomark::NumericError& e) {
        return fail(BM_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return fail(BM_ERR, e.what());
    } catch (...) {
        return fail(BM_ERR, "unknown error");
    }
}

biomark::PipelineConfig load_config(const char* config_json, int has_seed, uint64_t seed) {
    biomark::PipelineConfig cfg =
        biomark::parse_pipeline_config(config_json ? std::string(config_json) : std::string());
    if (has_seed) cfg.seed = seed;
    return cfg;
}

} // namespace

struct bm_result {
    biomark::PipelineResult res;
};

extern "C" {

const char* bm_version(void) { return "1.0.0"; }

const char* bm_last_error(void) { return g_last_error.c_str(); }

bm_status bm_simulate(const char* config_json, int has_seed, uint64_t seed,
                      const char* out_dir) {
    if (!out_dir) return fail(BM_ERR_CONFIG, "bm_simulate: out_dir is required");
    return guarded([&] {
        biomark::write_simulated_cohort(load_config(config_json, has_seed, seed), out_dir);
    });
}

bm_status bm_run(const char* config_json, int has_seed, uint64_t seed, const char* out_dir,
                 bm_result** out_result) {
    if (out_result) *out_result = nullptr;
    return guarded([&] {
        const biomark::PipelineConfig cfg = load_config(config_json, has_seed, seed);
        biomark::PipelineResult res = biomark::run_pipeline(cfg);
        if (out_dir) biomark::write_pipeline_outputs(res, cfg, out_dir);
        if (out_result) *out_result = new bm_result{std::move(res)};
    });
}

bm_status bm_benchmark(const char* config_json, const char* out_csv_path) {
    if (!config_json) return fail(BM_ERR_CONFIG, "bm_benchmark: config_json is required");
    if (!out_csv_path) return fail(BM_ERR_CONFIG, "bm_benchmark: out_csv_path is required");
    return guarded([&] {
        const biomark::BenchmarkConfig cfg = biomark::parse_benchmark_config(config_json);
        biomark::write_benchmark_csv(biomark::run_benchmark(cfg), out_csv_path);
    });
}

bm_status bm_map_convert(const char* map_json_path, const char* out_path,
                         const char* format) {
    if (!map_json_path || !out_path || !format)
        return fail(BM_ERR_CONFIG, "bm_map_convert: all arguments are required");
    return guarded([&] {
        const biomark::BiomarkerMap map =
            biomark::map_from_json_text(biomark::slurp_file(map_json_path));
        biomark::export_map(map, out_path, format);
    });
}

size_t bm_result_feature_count(const bm_result* result) {
    return result ? result->res.qvalues.feature_ids.size() : 0;
}

const char* bm_result_feature_id(const bm_result* result, size_t index) {
    if (!result || index >= result->res.qvalues.feature_ids.size()) return nullptr;
    return result->res.qvalues.feature_ids[index].c_str();
}

bm_status bm_result_feature_stats(const bm_result* result, size_t index, double* p_out,
                                  double* q_out) {
    if (!result) return fail(BM_ERR_CONFIG, "bm_result_feature_stats: null result");
    if (index >= result->res.qvalues.q.size())
        return fail(BM_ERR_CONFIG, "bm_result_feature_stats: index out of range");
    if (p_out) *p_out = result->res.qvalues.p[index];
    if (q_out) *q_out = result->res.qvalues.q[index];
    return BM_OK;
}

bm_status bm_result_metric(const bm_result* result, const char* name, double* out) {
    if (!result || !name || !out)
        return fail(BM_ERR_CONFIG, "bm_result_metric: null argument");
    const biomark::EvalReport& report = result->res.report;
    if (std::strcmp(name, "auc") == 0) {
        *out = report.auc;
    } else if (std::strcmp(name, "f1") == 0) {
        *out = report.f1;
    } else if (std::strcmp(name, "feature_precision") == 0) {
        if (!report.feature_precision)
            return fail(BM_ERR_DATA, "feature_precision unavailable (no ground truth)");
        *out = *report.feature_precision;
    } else if (std::strcmp(name, "selected") == 0) {
        *out = static_cast<double>(report.selected);
    } else if (std::strcmp(name, "pi0") == 0) {
        *out = result->res.qvalues.pi0;
    } else {
        return fail(BM_ERR_CONFIG, "bm_result_metric: unknown metric name");
    }
    return BM_OK;
}

void bm_result_free(bm_result* result) { delete result; }

bm_status bm_storey_qvalues(const double* p, size_t m, double lambda, double* q_out,
                            double* pi0_out) {
    if (!p || !q_out) return fail(BM_ERR_CONFIG, "bm_storey_qvalues: null array");
    return guarded([&] {
        biomark::PValueSet pvals;
        pvals.p.assign(p, p + m);
        pvals.feature_ids.resize(m);
        for (size_t i = 0; i < m; ++i) pvals.feature_ids[i] = std::to_string(i);
        pvals.method = "external";
        const biomark::QValueTable table = biomark::storey_qvalues(pvals, lambda);
        for (size_t i = 0; i < m; ++i) q_out[i] = table.q[i];
        if (pi0_out) *pi0_out = table.pi0;
    });
}

bm_status bm_auc(const double* scores, const int* labels, size_t n, double* out) {
    if (!scores || !labels || !out) return fail(BM_ERR_CONFIG, "bm_auc: null argument");
    return guarded([&] {
        *out = biomark::auc(std::vector<double>(scores, scores + n),
                            std::vector<int>(labels, labels + n));
    });
}

} // extern "C"
