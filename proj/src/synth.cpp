#include "biomark/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "biomark/errors.hpp"
#include "biomark/io.hpp"

namespace biomark {

void SimConfig::validate() const {
    if (n_samples == 0 || n_samples % 2 != 0)
        throw ConfigError("sim config: n_samples must be even and positive");
    if (modalities.empty()) throw ConfigError("sim config: modalities empty");
    std::size_t min_dim = SIZE_MAX;
    for (const auto& [name, dim] : modalities) {
        if (name.empty()) throw ConfigError("sim config: empty modality name");
        if (dim == 0) throw ConfigError("sim config: zero-width modality " + name);
        min_dim = std::min(min_dim, dim);
    }
    if (module_count == 0 || module_size == 0)
        throw ConfigError("sim config: module_count and module_size must be positive");
    if (module_count * module_size > min_dim)
        throw ConfigError("sim config: module_count * module_size exceeds smallest modality");
    if (noise_sd < 0.0) throw ConfigError("sim config: noise_sd negative");
    if (batch_sd < 0.0) throw ConfigError("sim config: batch_sd negative");
    if (n_batches == 0) throw ConfigError("sim config: n_batches must be positive");
    if (ba_attach == 0 || ba_attach >= modalities.front().second)
        throw ConfigError("sim config: ba_attach must satisfy 1 <= ba_attach < first modality size");
}

void OmicsDataset::validate() const {
    if (modalities.size() != modality_names.size() ||
        modalities.size() != feature_names.size())
        throw DataError("dataset: modality bookkeeping out of sync");
    const std::size_t n = labels.size();
    for (std::size_t m = 0; m < modalities.size(); ++m) {
        if (modalities[m].rows() != n)
            throw DataError("dataset: sample count mismatch in modality " + modality_names[m]);
        if (feature_names[m].size() != modalities[m].cols())
            throw DataError("dataset: feature name count mismatch in " + modality_names[m]);
        if (!truth_mask.empty() && truth_mask[m].size() != modalities[m].cols())
            throw DataError("dataset: truth mask length mismatch in " + modality_names[m]);
    }
    if (!sample_ids.empty() && sample_ids.size() != n)
        throw DataError("dataset: sample id count mismatch");
    if (!batch.empty() && batch.size() != n) throw DataError("dataset: batch length mismatch");
    for (int l : labels)
        if (l != 0 && l != 1) throw DataError("dataset: label outside {0,1}");
}

std::vector<std::vector<std::uint32_t>> pick_signal_modules(const GeneGraph& g,
                                                            std::size_t module_count,
                                                            std::size_t module_size) {
    const auto deg = g.degrees();
    std::vector<std::uint32_t> order(g.n_nodes);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (deg[a] != deg[b]) return deg[a] > deg[b];
        return a < b;
    });

    std::vector<std::vector<std::uint32_t>> modules;
    for (std::size_t t = 0; t < module_count && t < order.size(); ++t) {
        const std::uint32_t hub = order[t];
        std::vector<std::uint32_t> members{hub};
        std::vector<std::uint32_t> nb = g.neighbors[hub];
        std::sort(nb.begin(), nb.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (deg[a] != deg[b]) return deg[a] > deg[b];
            return a < b;
        });
        for (std::uint32_t v : nb) {
            if (members.size() >= module_size) break;
            members.push_back(v);
        }
        std::sort(members.begin(), members.end());
        modules.push_back(std::move(members));
    }
    return modules;
}

std::pair<OmicsDataset, GeneGraph> simulate(const SimConfig& cfg, SeededRng rng) {
    cfg.validate();

    GeneGraph graph =
        barabasi_albert(cfg.modalities.front().second, cfg.ba_attach, rng.split("graph"));

    const auto modules = pick_signal_modules(graph, cfg.module_count, cfg.module_size);
    const std::size_t n = cfg.n_samples;
    const std::size_t n_mod = cfg.modalities.size();

    OmicsDataset ds;
    ds.labels.resize(n);
    ds.batch.resize(n);
    ds.sample_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = static_cast<int>(i % 2); // interleaved, exactly half/half
        // batches alternate in pairs so every batch holds both classes
        ds.batch[i] = static_cast<int>((i / 2) % cfg.n_batches);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "S%04zu", i);
        ds.sample_ids[i] = buf;
    }

    // shared per-sample module factors drive within-module (and cross-modal)
    // correlation
    constexpr double kFactorLoading = 0.5;
    SeededRng factor_rng = rng.split("factors");
    Matrix factors(n, cfg.module_count);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < cfg.module_count; ++t)
            factors.at(i, t) = factor_rng.gauss(0.0, 1.0);

    for (std::size_t m = 0; m < n_mod; ++m) {
        const auto& [mod_name, dim] = cfg.modalities[m];

        // signal features: hub neighborhoods for the graph modality, leading
        // block otherwise. module_of[j] = module index + 1, 0 = background.
        std::vector<std::uint32_t> module_of(dim, 0);
        std::vector<std::uint8_t> mask(dim, 0);
        if (m == 0) {
            for (std::size_t t = 0; t < modules.size(); ++t)
                for (std::uint32_t j : modules[t]) {
                    mask[j] = 1;
                    if (module_of[j] == 0) module_of[j] = static_cast<std::uint32_t>(t + 1);
                }
        } else {
            for (std::size_t t = 0; t < cfg.module_count; ++t)
                for (std::size_t k = 0; k < cfg.module_size; ++k) {
                    const std::size_t j = t * cfg.module_size + k;
                    mask[j] = 1;
                    module_of[j] = static_cast<std::uint32_t>(t + 1);
                }
        }

        SeededRng mod_rng = rng.split("modality/" + mod_name);
        Matrix x(n, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const bool is_case = ds.labels[i] == 1;
            for (std::size_t j = 0; j < dim; ++j) {
                double v = mod_rng.gauss(0.0, 1.0);
                if (module_of[j] != 0) v += kFactorLoading * factors.at(i, module_of[j] - 1);
                if (is_case && mask[j]) v += cfg.effect_size;
                if (cfg.noise_sd > 0.0) v += mod_rng.gauss(0.0, cfg.noise_sd);
                x.at(i, j) = v;
            }
        }

        if (cfg.batch_sd > 0.0) {
            SeededRng batch_rng = rng.split("batch/" + mod_name);
            Matrix offset(cfg.n_batches, dim);
            for (std::size_t b = 0; b < cfg.n_batches; ++b)
                for (std::size_t j = 0; j < dim; ++j)
                    offset.at(b, j) = batch_rng.gauss(0.0, cfg.batch_sd);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    x.at(i, j) += offset.at(ds.batch[i], j);
        }

        std::vector<std::string> names(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s.f%04zu", mod_name.c_str(), j);
            names[j] = buf;
        }

        ds.modality_names.push_back(mod_name);
        ds.modalities.push_back(std::move(x));
        ds.feature_names.push_back(std::move(names));
        ds.truth_mask.push_back(std::move(mask));
    }

    ds.validate();
    return {std::move(ds), std::move(graph)};
}

namespace {

struct CsvTable {
    std::vector<std::string> feature_names;       // header minus sample id column
    std::vector<std::string> sample_ids;          // first column
    std::vector<std::vector<double>> values;      // rows; NaN = missing
};

bool is_missing_token(const std::string& t) {
    return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == "NAN";
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    CsvTable tbl;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (tbl.feature_names.empty()) {
            if (cells.size() < 2)
                throw DataError(path + ": header needs a sample id column plus features");
            tbl.feature_names.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != tbl.feature_names.size() + 1)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(tbl.feature_names.size() + 1) + " cells, got " +
                            std::to_string(cells.size()));
        tbl.sample_ids.push_back(cells[0]);
        std::vector<double> row(tbl.feature_names.size());
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (is_missing_token(cells[c])) {
                row[c - 1] = std::nan("");
            } else if (!parse_double(cells[c], row[c - 1])) {
                throw DataError(path + ": non-numeric cell at row " + std::to_string(lineno) +
                                ", column " + std::to_string(c + 1) + " (" + cells[c] + ")");
            }
        }
        tbl.values.push_back(std::move(row));
    }
    if (tbl.feature_names.empty()) throw DataError(path + ": empty file");
    return tbl;
}

} // namespace

OmicsDataset ingest_cohort(
    const std::vector<std::pair<std::string, std::string>>& modality_paths,
    const std::string& label_path) {
    if (modality_paths.empty()) throw ConfigError("ingest: no modality files given");

    std::vector<CsvTable> tables;
    tables.reserve(modality_paths.size());
    for (const auto& [name, path] : modality_paths) tables.push_back(read_csv_table(path));

    // labels: sample_id,label
    std::map<std::string, int> label_of;
    {
        std::ifstream in(label_path);
        if (!in) throw DataError("cannot open: " + label_path);
        std::string line;
        std::size_t lineno = 0;
        bool header_skipped = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto cells = split_csv_line(line);
            if (!header_skipped) {
                header_skipped = true;
                if (cells.size() >= 2 && cells[1] != "0" && cells[1] != "1") continue;
            }
            if (cells.size() < 2)
                throw DataError(label_path + ":" + std::to_string(lineno) + ": expected sample_id,label");
            if (cells[1] != "0" && cells[1] != "1")
                throw DataError(label_path + ":" + std::to_string(lineno) +
                                ": label must be 0 or 1, got " + cells[1]);
            label_of[cells[0]] = cells[1] == "1" ? 1 : 0;
        }
    }

    // intersect sample ids across all modalities and the label file
    std::set<std::string> common;
    for (const auto& [id, l] : label_of) common.insert(id);
    for (const auto& tbl : tables) {
        std::set<std::string> ids(tbl.sample_ids.begin(), tbl.sample_ids.end());
        std::set<std::string> kept;
        std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(),
                              std::inserter(kept, kept.begin()));
        common.swap(kept);
    }
    if (common.empty()) throw DataError("ingest: empty intersection of sample ids");

    OmicsDataset ds;
    ds.sample_ids.assign(common.begin(), common.end()); // sorted
    const std::size_t n = ds.sample_ids.size();
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = label_of.at(ds.sample_ids[i]);

    for (std::size_t m = 0; m < tables.size(); ++m) {
        const auto& tbl = tables[m];
        std::map<std::string, std::size_t> row_of;
        for (std::size_t r = 0; r < tbl.sample_ids.size(); ++r) row_of[tbl.sample_ids[r]] = r;

        const std::size_t p = tbl.feature_names.size();
        Matrix x(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& src = tbl.values[row_of.at(ds.sample_ids[i])];
            for (std::size_t j = 0; j < p; ++j) x.at(i, j) = src[j];
        }

        // mean-impute, then standardize to mean 0 / sd 1 (population sd)
        for (std::size_t j = 0; j < p; ++j) {
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (!std::isnan(x.at(i, j))) {
                    sum += x.at(i, j);
                    ++cnt;
                }
            const double fill = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (std::isnan(x.at(i, j))) x.at(i, j) = fill;

            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x.at(i, j);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x.at(i, j) - mean;
                var += d * d;
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            for (std::size_t i = 0; i < n; ++i)
                x.at(i, j) = sd > 0.0 ? (x.at(i, j) - mean) / sd : 0.0;
        }

        ds.modality_names.push_back(modality_paths[m].first);
        std::vector<std::string> names(p);
        for (std::size_t j = 0; j < p; ++j)
            names[j] = modality_paths[m].first + "." + tbl.feature_names[j];
        ds.feature_names.push_back(std::move(names));
        ds.modalities.push_back(std::move(x));
    }

    ds.validate();
    return ds;
}

void write_cohort_csv(const OmicsDataset& ds, const std::string& dir,
                      const std::string& provenance_comment) {
    std::filesystem::create_directories(dir);
    for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
        std::ofstream out(dir + "/" + ds.modality_names[m] + ".csv");
        if (!out) throw DataError("cannot write under: " + dir);
        if (!provenance_comment.empty()) out << "# " << provenance_comment << "\n";
        out << "sample_id";
        for (const auto& fn : ds.feature_names[m]) out << "," << fn;
        out << "\n";
        for (std::size_t i = 0; i < ds.modalities[m].rows(); ++i) {
            out << ds.sample_ids[i];
            for (std::size_t j = 0; j < ds.modalities[m].cols(); ++j)
                out << "," << fmt_double(ds.modalities[m].at(i, j));
            out << "\n";
        }
        if (!ds.truth_mask.empty()) {
            std::ofstream tm(dir + "/truth_" + ds.modality_names[m] + ".csv");
            tm << "feature,signal\n";
            for (std::size_t j = 0; j < ds.truth_mask[m].size(); ++j)
                tm << ds.feature_names[m][j] << "," << int(ds.truth_mask[m][j]) << "\n";
        }
    }
    std::ofstream lab(dir + "/labels.csv");
    if (!provenance_comment.empty()) lab << "# " << provenance_comment << "\n";
    lab << "sample_id,label\n";
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        lab << ds.sample_ids[i] << "," << ds.labels[i] << "\n";
}

} // namespace biomark
