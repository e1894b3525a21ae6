// Command-line front end. Talks to the pipeline exclusively through the
// shared-library C API, so it doubles as a smoke test of that surface.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "biomark.h"

namespace {

bool read_file(const std::string& path, std::string& out, std::string& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err = "cannot open config file: " + path;
        return false;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

int report(bm_status status) {
    if (status != BM_OK) std::fprintf(stderr, "error: %s\n", bm_last_error());
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-omics biomarker discovery pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out_dir;
    std::string format = "dot";
    std::string map_path;

    auto add_common = [&](CLI::App* cmd, bool out_required) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "Override the config seed")
            ->each([&](const std::string&) { has_seed = true; });
        auto* out = cmd->add_option("--out", out_dir, "Output directory");
        if (out_required) out->required();
    };

    CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic cohort");
    add_common(sim, true);

    CLI::App* run = app.add_subcommand("run", "Run the full discovery pipeline");
    add_common(run, true);

    CLI::App* bench = app.add_subcommand("benchmark", "Aggregate runs over a seed grid");
    add_common(bench, true);

    CLI::App* exp = app.add_subcommand("export-map", "Convert a map JSON artifact");
    exp->add_option("map", map_path, "map.json produced by `run`")->required();
    exp->add_option("--format", format, "Output format: dot or json")
        ->check(CLI::IsMember({"dot", "json"}));
    exp->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11's own exit codes are for humans; keep 0 for --help, else
        // report a configuration error
        return code == 0 ? 0 : static_cast<int>(BM_ERR_CONFIG);
    }

    std::string config_text;
    if (!config_path.empty()) {
        std::string err;
        if (!read_file(config_path, config_text, err)) {
            std::fprintf(stderr, "error: %s\n", err.c_str());
            return static_cast<int>(BM_ERR_DATA);
        }
    }

    if (sim->parsed())
        return report(bm_simulate(config_text.c_str(), has_seed ? 1 : 0, seed, out_dir.c_str()));

    if (run->parsed()) {
        bm_result* result = nullptr;
        const bm_status status =
            bm_run(config_text.c_str(), has_seed ? 1 : 0, seed, out_dir.c_str(), &result);
        if (status != BM_OK) return report(status);
        double auc_v = 0.0, f1_v = 0.0, selected = 0.0, pi0 = 0.0;
        bm_result_metric(result, "auc", &auc_v);
        bm_result_metric(result, "f1", &f1_v);
        bm_result_metric(result, "selected", &selected);
        bm_result_metric(result, "pi0", &pi0);
        std::printf("features_ranked=%zu significant_0.05=%d pi0=%.4f auc=%.4f f1=%.4f\n",
                    bm_result_feature_count(result), static_cast<int>(selected), pi0, auc_v,
                    f1_v);
        double fp = 0.0;
        if (bm_result_metric(result, "feature_precision", &fp) == BM_OK)
            std::printf("feature_precision=%.4f\n", fp);
        bm_result_free(result);
        return 0;
    }

    if (bench->parsed()) {
        if (config_text.empty()) {
            std::fprintf(stderr, "error: benchmark requires --config\n");
            return static_cast<int>(BM_ERR_CONFIG);
        }
        if (has_seed) {
            std::fprintf(stderr, "error: benchmark seeds come from the config seed list\n");
            return static_cast<int>(BM_ERR_CONFIG);
        }
        const std::string csv_path = out_dir + "/benchmark.csv";
        return report(bm_benchmark(config_text.c_str(), csv_path.c_str()));
    }

    if (exp->parsed()) {
        const std::string out_path = out_dir + "/map." + format;
        return report(bm_map_convert(map_path.c_str(), out_path.c_str(), format.c_str()));
    }

    return static_cast<int>(BM_ERR_CONFIG);
}
