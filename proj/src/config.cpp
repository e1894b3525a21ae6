#include "biomark/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>

#include "json.hpp"

#include "biomark/errors.hpp"

namespace biomark {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& path) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + key + "\" in " + path);
}

const json* maybe(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const std::string& path) {
    if (!j.is_number())
        throw ConfigError("config: " + path + " must be a number");
    return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && j.get<long long>() < 0))
        throw ConfigError("config: " + path + " must be a non-negative integer");
    return j.get<std::size_t>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return static_cast<std::uint64_t>(j.get<long long>());
    throw ConfigError("config: " + path + " must be a non-negative integer");
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string())
        throw ConfigError("config: " + path + " must be a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean())
        throw ConfigError("config: " + path + " must be a boolean");
    return j.get<bool>();
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object())
        throw ConfigError("config: " + path + " must be an object");
}

SimConfig parse_sim(const json& j) {
    require_object(j, "data.sim");
    reject_unknown(j,
                   {"n_samples", "modalities", "module_count", "module_size", "effect_size",
                    "noise_sd", "batch_sd", "n_batches", "ba_attach"},
                   "data.sim");
    SimConfig sim;
    if (auto* v = maybe(j, "n_samples")) sim.n_samples = get_count(*v, "data.sim.n_samples");
    if (auto* v = maybe(j, "modalities")) {
        if (!v->is_array() || v->empty())
            throw ConfigError("config: data.sim.modalities must be a non-empty array");
        sim.modalities.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& mj = (*v)[i];
            const std::string path = "data.sim.modalities[" + std::to_string(i) + "]";
            require_object(mj, path);
            reject_unknown(mj, {"name", "features"}, path);
            if (!maybe(mj, "name") || !maybe(mj, "features"))
                throw ConfigError("config: " + path + " needs \"name\" and \"features\"");
            sim.modalities.emplace_back(get_string(mj.at("name"), path + ".name"),
                                        get_count(mj.at("features"), path + ".features"));
        }
    }
    if (auto* v = maybe(j, "module_count"))
        sim.module_count = get_count(*v, "data.sim.module_count");
    if (auto* v = maybe(j, "module_size"))
        sim.module_size = get_count(*v, "data.sim.module_size");
    if (auto* v = maybe(j, "effect_size"))
        sim.effect_size = get_double(*v, "data.sim.effect_size");
    if (auto* v = maybe(j, "noise_sd")) sim.noise_sd = get_double(*v, "data.sim.noise_sd");
    if (auto* v = maybe(j, "batch_sd")) sim.batch_sd = get_double(*v, "data.sim.batch_sd");
    if (auto* v = maybe(j, "n_batches")) sim.n_batches = get_count(*v, "data.sim.n_batches");
    if (auto* v = maybe(j, "ba_attach")) sim.ba_attach = get_count(*v, "data.sim.ba_attach");
    return sim;
}

DataConfig parse_data(const json& j) {
    require_object(j, "data");
    reject_unknown(j, {"mode", "sim", "modalities", "labels", "corr_threshold"}, "data");
    DataConfig data;
    if (auto* v = maybe(j, "mode")) data.mode = get_string(*v, "data.mode");
    if (data.mode != "simulate" && data.mode != "ingest")
        throw ConfigError("config: data.mode must be \"simulate\" or \"ingest\", got \"" +
                          data.mode + "\"");
    if (auto* v = maybe(j, "sim")) {
        if (data.mode != "simulate")
            throw ConfigError("config: data.sim only applies to simulate mode");
        data.sim = parse_sim(*v);
    }
    if (auto* v = maybe(j, "corr_threshold"))
        data.corr_threshold = get_double(*v, "data.corr_threshold");
    if (data.mode == "ingest") {
        const json* mods = maybe(j, "modalities");
        const json* labels = maybe(j, "labels");
        if (!mods || !labels)
            throw ConfigError("config: ingest mode needs data.modalities and data.labels");
        if (!mods->is_array() || mods->empty())
            throw ConfigError("config: data.modalities must be a non-empty array");
        for (std::size_t i = 0; i < mods->size(); ++i) {
            const json& mj = (*mods)[i];
            const std::string path = "data.modalities[" + std::to_string(i) + "]";
            require_object(mj, path);
            reject_unknown(mj, {"name", "path"}, path);
            if (!maybe(mj, "name") || !maybe(mj, "path"))
                throw ConfigError("config: " + path + " needs \"name\" and \"path\"");
            data.ingest_modalities.emplace_back(get_string(mj.at("name"), path + ".name"),
                                                get_string(mj.at("path"), path + ".path"));
        }
        data.label_path = get_string(*labels, "data.labels");
    } else if (maybe(j, "modalities") || maybe(j, "labels")) {
        throw ConfigError("config: data.modalities/data.labels only apply to ingest mode");
    }
    return data;
}

GatConfig parse_gat(const json& j) {
    require_object(j, "gat");
    reject_unknown(j, {"heads", "head_dim", "leaky_slope", "lr", "epochs", "noise_sd"}, "gat");
    GatConfig gat;
    if (auto* v = maybe(j, "heads")) gat.heads = get_count(*v, "gat.heads");
    if (auto* v = maybe(j, "head_dim")) gat.head_dim = get_count(*v, "gat.head_dim");
    if (auto* v = maybe(j, "leaky_slope")) gat.leaky_slope = get_double(*v, "gat.leaky_slope");
    if (auto* v = maybe(j, "lr")) gat.lr = get_double(*v, "gat.lr");
    if (auto* v = maybe(j, "epochs")) gat.epochs = get_count(*v, "gat.epochs");
    if (auto* v = maybe(j, "noise_sd")) gat.noise_sd = get_double(*v, "gat.noise_sd");
    return gat;
}

MvaeConfig parse_vae(const json& j) {
    require_object(j, "vae");
    reject_unknown(
        j, {"latent_dim", "hidden_dim", "beta", "lambda_cross", "lr", "epochs", "gat_smoothing"},
        "vae");
    MvaeConfig vae;
    if (auto* v = maybe(j, "latent_dim")) vae.latent_dim = get_count(*v, "vae.latent_dim");
    if (auto* v = maybe(j, "hidden_dim")) vae.hidden_dim = get_count(*v, "vae.hidden_dim");
    if (auto* v = maybe(j, "beta")) vae.beta = get_double(*v, "vae.beta");
    if (auto* v = maybe(j, "lambda_cross")) vae.lambda_cross = get_double(*v, "vae.lambda_cross");
    if (auto* v = maybe(j, "lr")) vae.lr = get_double(*v, "vae.lr");
    if (auto* v = maybe(j, "epochs")) vae.epochs = get_count(*v, "vae.epochs");
    if (auto* v = maybe(j, "gat_smoothing")) vae.gat_smoothing = get_bool(*v, "vae.gat_smoothing");
    return vae;
}

EnetConfig parse_enet(const json& j) {
    require_object(j, "enet");
    reject_unknown(j, {"alpha", "tol", "max_iter", "n_lambda", "lambda_decades", "n_folds",
                       "cv_rule"},
                   "enet");
    EnetConfig enet;
    if (auto* v = maybe(j, "alpha")) enet.alpha = get_double(*v, "enet.alpha");
    if (auto* v = maybe(j, "tol")) enet.tol = get_double(*v, "enet.tol");
    if (auto* v = maybe(j, "max_iter")) enet.max_iter = get_count(*v, "enet.max_iter");
    if (auto* v = maybe(j, "n_lambda")) enet.n_lambda = get_count(*v, "enet.n_lambda");
    if (auto* v = maybe(j, "lambda_decades"))
        enet.lambda_decades = get_double(*v, "enet.lambda_decades");
    if (auto* v = maybe(j, "n_folds")) enet.n_folds = get_count(*v, "enet.n_folds");
    if (auto* v = maybe(j, "cv_rule")) enet.cv_rule = get_string(*v, "enet.cv_rule");
    return enet;
}

FdrConfig parse_fdr(const json& j) {
    require_object(j, "fdr");
    reject_unknown(j, {"n_perm", "pi0_lambda"}, "fdr");
    FdrConfig fdr;
    if (auto* v = maybe(j, "n_perm")) fdr.n_perm = get_count(*v, "fdr.n_perm");
    if (auto* v = maybe(j, "pi0_lambda")) fdr.pi0_lambda = get_double(*v, "fdr.pi0_lambda");
    return fdr;
}

json parse_text(const std::string& json_text, const char* what) {
    if (json_text.empty()) return json::object();
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(what) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError(std::string(what) + ": top level must be an object");
    return j;
}

} // namespace

void PipelineConfig::validate() const {
    if (thresholds.empty())
        throw ConfigError("config: thresholds must be non-empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
            throw ConfigError("config: thresholds must lie in (0,1)");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw ConfigError("config: thresholds must be strictly ascending");
    }
    if (top_k < 1) throw ConfigError("config: top_k must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("config: train_fraction must lie in (0,1)");
    if (enet.cv_rule != "min" && enet.cv_rule != "1se")
        throw ConfigError("config: enet.cv_rule must be \"min\" or \"1se\"");
    if (!(enet.alpha >= 0.0 && enet.alpha <= 1.0))
        throw ConfigError("config: enet.alpha must lie in [0,1]");
    if (!(enet.tol > 0.0)) throw ConfigError("config: enet.tol must be > 0");
    if (enet.n_lambda < 2) throw ConfigError("config: enet.n_lambda must be >= 2");
    if (enet.n_folds < 2) throw ConfigError("config: enet.n_folds must be >= 2");
    if (fdr.n_perm < 99) throw ConfigError("config: fdr.n_perm must be >= 99");
    if (!(fdr.pi0_lambda >= 0.0 && fdr.pi0_lambda < 1.0))
        throw ConfigError("config: fdr.pi0_lambda must lie in [0,1)");
    if (data.mode == "simulate") {
        data.sim.validate();
    } else {
        if (data.ingest_modalities.empty())
            throw ConfigError("config: ingest mode needs at least one modality path");
        if (data.label_path.empty())
            throw ConfigError("config: ingest mode needs a label path");
        if (!(data.corr_threshold > 0.0 && data.corr_threshold < 1.0))
            throw ConfigError("config: data.corr_threshold must lie in (0,1)");
    }
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    const json j = parse_text(json_text, "config");
    reject_unknown(j,
                   {"seed", "data", "gat", "vae", "enet", "fdr", "thresholds", "top_k",
                    "train_fraction"},
                   "top level");
    PipelineConfig cfg;
    if (auto* v = maybe(j, "seed")) cfg.seed = get_u64(*v, "seed");
    if (auto* v = maybe(j, "data")) cfg.data = parse_data(*v);
    if (auto* v = maybe(j, "gat")) cfg.gat = parse_gat(*v);
    if (auto* v = maybe(j, "vae")) cfg.vae = parse_vae(*v);
    if (auto* v = maybe(j, "enet")) cfg.enet = parse_enet(*v);
    if (auto* v = maybe(j, "fdr")) cfg.fdr = parse_fdr(*v);
    if (auto* v = maybe(j, "thresholds")) {
        if (!v->is_array()) throw ConfigError("config: thresholds must be an array");
        cfg.thresholds.clear();
        for (const auto& t : *v) cfg.thresholds.push_back(get_double(t, "thresholds[]"));
    }
    if (auto* v = maybe(j, "top_k")) cfg.top_k = get_count(*v, "top_k");
    if (auto* v = maybe(j, "train_fraction"))
        cfg.train_fraction = get_double(*v, "train_fraction");
    cfg.validate();
    return cfg;
}

std::string pipeline_config_canonical_json(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["data"]["mode"] = cfg.data.mode;
    if (cfg.data.mode == "simulate") {
        json sim;
        sim["n_samples"] = cfg.data.sim.n_samples;
        sim["modalities"] = json::array();
        for (const auto& [name, features] : cfg.data.sim.modalities)
            sim["modalities"].push_back({{"name", name}, {"features", features}});
        sim["module_count"] = cfg.data.sim.module_count;
        sim["module_size"] = cfg.data.sim.module_size;
        sim["effect_size"] = cfg.data.sim.effect_size;
        sim["noise_sd"] = cfg.data.sim.noise_sd;
        sim["batch_sd"] = cfg.data.sim.batch_sd;
        sim["n_batches"] = cfg.data.sim.n_batches;
        sim["ba_attach"] = cfg.data.sim.ba_attach;
        j["data"]["sim"] = std::move(sim);
    } else {
        j["data"]["modalities"] = json::array();
        for (const auto& [name, path] : cfg.data.ingest_modalities)
            j["data"]["modalities"].push_back({{"name", name}, {"path", path}});
        j["data"]["labels"] = cfg.data.label_path;
        j["data"]["corr_threshold"] = cfg.data.corr_threshold;
    }
    j["gat"] = {{"heads", cfg.gat.heads},
                {"head_dim", cfg.gat.head_dim},
                {"leaky_slope", cfg.gat.leaky_slope},
                {"lr", cfg.gat.lr},
                {"epochs", cfg.gat.epochs},
                {"noise_sd", cfg.gat.noise_sd}};
    j["vae"] = {{"latent_dim", cfg.vae.latent_dim},
                {"hidden_dim", cfg.vae.hidden_dim},
                {"beta", cfg.vae.beta},
                {"lambda_cross", cfg.vae.lambda_cross},
                {"lr", cfg.vae.lr},
                {"epochs", cfg.vae.epochs},
                {"gat_smoothing", cfg.vae.gat_smoothing}};
    j["enet"] = {{"alpha", cfg.enet.alpha},
                 {"tol", cfg.enet.tol},
                 {"max_iter", cfg.enet.max_iter},
                 {"n_lambda", cfg.enet.n_lambda},
                 {"lambda_decades", cfg.enet.lambda_decades},
                 {"n_folds", cfg.enet.n_folds},
                 {"cv_rule", cfg.enet.cv_rule}};
    j["fdr"] = {{"n_perm", cfg.fdr.n_perm}, {"pi0_lambda", cfg.fdr.pi0_lambda}};
    j["thresholds"] = cfg.thresholds;
    j["top_k"] = cfg.top_k;
    j["train_fraction"] = cfg.train_fraction;
    return j.dump();
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
    return fnv1a64(pipeline_config_canonical_json(cfg));
}

std::string provenance_line(const PipelineConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return "config=" + std::string(buf) + " seed=" + std::to_string(cfg.seed);
}

BenchmarkConfig parse_benchmark_config(const std::string& json_text) {
    const json j = parse_text(json_text, "benchmark config");
    reject_unknown(j, {"seeds", "entries"}, "top level");
    BenchmarkConfig cfg;
    if (auto* v = maybe(j, "seeds")) {
        if (!v->is_array() || v->empty())
            throw ConfigError("config: seeds must be a non-empty array");
        for (const auto& s : *v) cfg.seeds.push_back(get_u64(s, "seeds[]"));
    } else {
        cfg.seeds = {1, 2, 3};
    }
    const json* entries = maybe(j, "entries");
    if (!entries || !entries->is_array() || entries->empty())
        throw ConfigError("config: benchmark needs a non-empty entries array");
    for (std::size_t i = 0; i < entries->size(); ++i) {
        const json& ej = (*entries)[i];
        const std::string path = "entries[" + std::to_string(i) + "]";
        require_object(ej, path);
        reject_unknown(ej, {"method", "config"}, path);
        BenchmarkEntry entry;
        if (auto* v = maybe(ej, "method")) entry.method = get_string(*v, path + ".method");
        if (entry.method.empty() || entry.method.find(',') != std::string::npos)
            throw ConfigError("config: " + path + ".method must be non-empty without commas");
        if (auto* v = maybe(ej, "config"))
            entry.config = parse_pipeline_config(v->dump());
        cfg.entries.push_back(std::move(entry));
    }
    return cfg;
}

} // namespace biomark
