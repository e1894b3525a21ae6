#include "biomark/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "biomark/elasticnet.hpp"
#include "biomark/errors.hpp"
#include "biomark/gat.hpp"
#include "biomark/io.hpp"
#include "biomark/metrics.hpp"
#include "biomark/mvae.hpp"
#include "biomark/synth.hpp"

namespace biomark {

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string(name) + ": " + e.what());
    }
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

Split stratified_split(const std::vector<int>& labels, double train_fraction, SeededRng rng) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw DataError("split: labels must be 0 or 1");
        by_class[labels[i]].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty())
        throw DataError("split: both classes must be present");

    Split split;
    for (auto& cls : by_class) {
        rng.shuffle(cls);
        std::size_t n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(cls.size()) + 0.5));
        n_train = std::clamp<std::size_t>(n_train, 1, cls.size() - 1);
        for (std::size_t k = 0; k < cls.size(); ++k)
            (k < n_train ? split.train : split.test).push_back(cls[k]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(rows[r], c);
    return out;
}

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> sd; // population sd; 0 marks a constant column
};

ColumnStats column_stats(const Matrix& x) {
    ColumnStats st;
    st.mean.assign(x.cols(), 0.0);
    st.sd.assign(x.cols(), 0.0);
    const double n = static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) st.mean[c] += x.at(r, c);
    for (double& v : st.mean) v /= n;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x.at(r, c) - st.mean[c];
            st.sd[c] += d * d;
        }
    for (double& v : st.sd) v = std::sqrt(v / n);
    return st;
}

/// Constant columns become all-zero (inert for the sparse model).
Matrix apply_stats(const Matrix& x, const ColumnStats& st) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out.at(r, c) = st.sd[c] > 0.0 ? (x.at(r, c) - st.mean[c]) / st.sd[c] : 0.0;
    return out;
}

std::string fmt_optional(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string("na");
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    SeededRng rng(cfg.seed);

    OmicsDataset ds;
    GeneGraph graph;
    if (cfg.data.mode == "simulate") {
        stage("data", [&] {
            auto [d, g] = simulate(cfg.data.sim, rng.split("sim"));
            ds = std::move(d);
            graph = std::move(g);
            return 0;
        });
    } else {
        stage("data", [&] {
            ds = ingest_cohort(cfg.data.ingest_modalities, cfg.data.label_path);
            return 0;
        });
    }
    ds.validate();

    const Split split = stage("split", [&] {
        return stratified_split(ds.labels, cfg.train_fraction, rng.split("split"));
    });

    // standardize every modality with training-rows statistics
    const std::size_t n_mod = ds.modalities.size();
    std::vector<Matrix> xtr(n_mod), xte(n_mod);
    for (std::size_t m = 0; m < n_mod; ++m) {
        Matrix tr = take_rows(ds.modalities[m], split.train);
        const ColumnStats st = column_stats(tr);
        xtr[m] = apply_stats(tr, st);
        xte[m] = apply_stats(take_rows(ds.modalities[m], split.test), st);
    }

    if (cfg.data.mode != "simulate")
        graph = stage("graph", [&] {
            return correlation_graph(xtr[0], cfg.data.corr_threshold);
        });

    const GatTrainResult gat = stage("gat", [&] {
        return gat_train(graph, transpose(xtr[0]), cfg.gat, rng.split("gat"));
    });

    // attention smoothing feeds the encoder only; the sparse model sees
    // the original standardized features
    std::vector<Matrix> enc_tr = xtr, enc_te = xte;
    if (cfg.vae.gat_smoothing)
        for (std::size_t m = 0; m < n_mod; ++m)
            if (enc_tr[m].cols() == graph.n_nodes) {
                enc_tr[m] = attention_smooth(gat, enc_tr[m]);
                enc_te[m] = attention_smooth(gat, enc_te[m]);
            }

    const MvaeTrainResult vae = stage("vae", [&] {
        return mvae_train(enc_tr, cfg.vae, rng.split("vae"));
    });
    const Matrix z_te = stage("vae", [&] { return mvae_fused_latent(vae.model, enc_te); });

    // design matrix: original features across modalities, then latent columns
    std::vector<std::string> design_names;
    for (std::size_t m = 0; m < n_mod; ++m)
        for (const auto& name : ds.feature_names[m]) design_names.push_back(name);
    const std::size_t n_original = design_names.size();
    for (std::size_t k = 0; k < vae.fused_latent.cols(); ++k)
        design_names.push_back("latent.z" + std::to_string(k));

    auto build_design = [&](const std::vector<Matrix>& mats, const Matrix& z) {
        Matrix d(z.rows(), design_names.size());
        for (std::size_t r = 0; r < d.rows(); ++r) {
            std::size_t c = 0;
            for (std::size_t m = 0; m < n_mod; ++m)
                for (std::size_t j = 0; j < mats[m].cols(); ++j) d.at(r, c++) = mats[m].at(r, j);
            for (std::size_t j = 0; j < z.cols(); ++j) d.at(r, c++) = z.at(r, j);
        }
        return d;
    };
    Matrix design_tr = build_design(xtr, vae.fused_latent);
    Matrix design_te = build_design(xte, z_te);
    {
        const ColumnStats st = column_stats(design_tr);
        design_tr = apply_stats(design_tr, st);
        design_te = apply_stats(design_te, st);
    }

    std::vector<double> y_tr, y_te;
    std::vector<int> y_tr_int, y_te_int;
    for (std::size_t i : split.train) {
        y_tr.push_back(static_cast<double>(ds.labels[i]));
        y_tr_int.push_back(ds.labels[i]);
    }
    for (std::size_t i : split.test) {
        y_te.push_back(static_cast<double>(ds.labels[i]));
        y_te_int.push_back(ds.labels[i]);
    }

    struct Selection {
        ElasticNetFit fit;
        double lambda = 0.0;
    };
    const Selection sel = stage("select", [&] {
        const double alpha = cfg.enet.alpha;
        const double lmax = enet_lambda_max(design_tr, y_tr, alpha);
        const auto grid = enet_lambda_grid(lmax, cfg.enet.n_lambda, cfg.enet.lambda_decades);
        const CvResult cv =
            cv_select_lambda(design_tr, y_tr, alpha, grid, cfg.enet.n_folds, cfg.enet.tol,
                             cfg.enet.max_iter, cfg.enet.cv_rule, rng.split("cv"));
        ElasticNetProblem prob(design_tr, y_tr, alpha, cv.chosen);
        return Selection{enet_fit(prob, cfg.enet.tol, cfg.enet.max_iter), cv.chosen};
    });
    const ElasticNetFit& fit = sel.fit;

    PipelineResult result;
    result.lambda_chosen = sel.lambda;
    std::vector<std::size_t> selected_cols;
    for (std::size_t j = 0; j < n_original; ++j)
        if (fit.beta[j] != 0.0) {
            result.selected_features.push_back(design_names[j]);
            result.selected_beta.push_back(fit.beta[j]);
            selected_cols.push_back(j);
        }

    if (!selected_cols.empty()) {
        // permutation inference runs on the held-out rows: the training rows
        // already picked these features, so reshuffling them would compare a
        // selection-inflated statistic against an honest null and flag chance
        // selections as significant
        result.qvalues = stage("fdr", [&] {
            Matrix sub(design_te.rows(), selected_cols.size());
            for (std::size_t r = 0; r < design_te.rows(); ++r)
                for (std::size_t k = 0; k < selected_cols.size(); ++k)
                    sub.at(r, k) = design_te.at(r, selected_cols[k]);
            const PValueSet pvals = perm_pvalues(sub, y_te_int, result.selected_features,
                                                 cfg.fdr.n_perm, rng.split("fdr"));
            return storey_qvalues(pvals, cfg.fdr.pi0_lambda);
        });
    } else {
        result.qvalues.pi0 = 1.0;
        result.qvalues.thresholds = {0.01, 0.05, 0.10};
    }

    // map: nodes ranked by (q, |beta|, id) among features clearing the
    // loosest threshold; edges are the strongest learned interactions
    // with both endpoints on the map
    stage("map", [&] {
        const double loosest = cfg.thresholds.back();
        std::unordered_map<std::string, double> beta_of;
        for (std::size_t k = 0; k < result.selected_features.size(); ++k)
            beta_of[result.selected_features[k]] = result.selected_beta[k];

        std::vector<std::size_t> cand;
        for (std::size_t i = 0; i < result.qvalues.q.size(); ++i)
            if (result.qvalues.q[i] <= loosest) cand.push_back(i);
        std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            if (result.qvalues.q[a] != result.qvalues.q[b])
                return result.qvalues.q[a] < result.qvalues.q[b];
            const double ba = std::abs(beta_of[result.qvalues.feature_ids[a]]);
            const double bb = std::abs(beta_of[result.qvalues.feature_ids[b]]);
            if (ba != bb) return ba > bb;
            return result.qvalues.feature_ids[a] < result.qvalues.feature_ids[b];
        });
        if (cand.size() > cfg.top_k) cand.resize(cfg.top_k);

        for (std::size_t i : cand) {
            MapNode node;
            node.id = result.qvalues.feature_ids[i];
            node.q = result.qvalues.q[i];
            node.size = -std::log10(std::max(node.q, 1e-300));
            node.beta = beta_of[node.id];
            result.map.nodes.push_back(std::move(node));
        }

        std::unordered_set<std::string> on_map;
        for (const auto& node : result.map.nodes) on_map.insert(node.id);
        std::vector<MapEdge> cand_edges;
        for (std::size_t e = 0; e < gat.graph.edges.size(); ++e) {
            const auto [i, j] = gat.graph.edges[e];
            const std::string& a = ds.feature_names[0][i];
            const std::string& b = ds.feature_names[0][j];
            if (on_map.count(a) && on_map.count(b))
                cand_edges.push_back({a, b, gat.graph.edge_strength[e]});
        }
        std::sort(cand_edges.begin(), cand_edges.end(), [](const MapEdge& x, const MapEdge& y) {
            if (x.strength != y.strength) return x.strength > y.strength;
            if (x.a != y.a) return x.a < y.a;
            return x.b < y.b;
        });
        if (cand_edges.size() > cfg.top_k) cand_edges.resize(cfg.top_k);
        result.map.edges = std::move(cand_edges);
        result.map.provenance = provenance_line(cfg);
        return 0;
    });

    stage("eval", [&] {
        std::vector<double> scores(design_te.rows(), fit.intercept);
        for (std::size_t r = 0; r < design_te.rows(); ++r)
            for (std::size_t j = 0; j < design_te.cols(); ++j)
                scores[r] += design_te.at(r, j) * fit.beta[j];
        result.report.auc = auc(scores, y_te_int);
        std::vector<int> pred(scores.size());
        for (std::size_t r = 0; r < scores.size(); ++r) pred[r] = scores[r] >= 0.5 ? 1 : 0;
        result.report.f1 = f1(pred, y_te_int);

        std::vector<std::string> sig;
        for (std::size_t i = 0; i < result.qvalues.q.size(); ++i)
            if (result.qvalues.q[i] <= 0.05) sig.push_back(result.qvalues.feature_ids[i]);
        result.report.selected = sig.size();
        if (ds.has_truth() && !sig.empty()) {
            std::vector<std::string> truth;
            for (std::size_t m = 0; m < n_mod; ++m)
                for (std::size_t j = 0; j < ds.feature_names[m].size(); ++j)
                    if (ds.truth_mask[m][j]) truth.push_back(ds.feature_names[m][j]);
            result.report.feature_precision = feature_precision(sig, truth);
        }
        return 0;
    });

    result.graph = gat.graph;
    result.gat_loss = gat.loss_history;
    result.vae_loss = vae.loss_history;
    result.report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string map_to_dot(const BiomarkerMap& map) {
    static const char* kFill[4] = {"#d73027", "#fc8d59", "#fee08b", "#ffffbf"};
    std::ostringstream out;
    out << "// " << map.provenance << "\n";
    out << "graph biomarker_map {\n";
    out << "  node [shape=circle style=filled];\n";
    const std::size_t n = map.nodes.size();
    for (std::size_t k = 0; k < n; ++k) {
        const MapNode& node = map.nodes[k];
        const double clamped = std::clamp(node.size, 0.0, 6.0);
        const double width = 0.3 + 0.2 * clamped;
        const std::size_t bucket = n > 0 ? (k * 4) / n : 0;
        out << "  \"" << node.id << "\" [width=" << fmt_double(width) << " fillcolor=\""
            << kFill[bucket] << "\"];\n";
    }
    for (const MapEdge& edge : map.edges)
        out << "  \"" << edge.a << "\" -- \"" << edge.b
            << "\" [penwidth=" << fmt_double(1.0 + 4.0 * edge.strength) << "];\n";
    out << "}\n";
    return out.str();
}

std::string map_to_json_text(const BiomarkerMap& map) {
    nlohmann::json j;
    j["provenance"] = map.provenance;
    j["nodes"] = nlohmann::json::array();
    for (const MapNode& node : map.nodes)
        j["nodes"].push_back(
            {{"id", node.id}, {"q", node.q}, {"size", node.size}, {"beta", node.beta}});
    j["edges"] = nlohmann::json::array();
    for (const MapEdge& edge : map.edges)
        j["edges"].push_back({{"a", edge.a}, {"b", edge.b}, {"strength", edge.strength}});
    return j.dump(2) + "\n";
}

BiomarkerMap map_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("map file: invalid JSON: ") + e.what());
    }
    BiomarkerMap map;
    try {
        map.provenance = j.value("provenance", std::string());
        for (const auto& nj : j.at("nodes")) {
            MapNode node;
            node.id = nj.at("id").get<std::string>();
            node.q = nj.at("q").get<double>();
            node.size = nj.at("size").get<double>();
            node.beta = nj.value("beta", 0.0);
            map.nodes.push_back(std::move(node));
        }
        for (const auto& ej : j.at("edges")) {
            MapEdge edge;
            edge.a = ej.at("a").get<std::string>();
            edge.b = ej.at("b").get<std::string>();
            edge.strength = ej.at("strength").get<double>();
            map.edges.push_back(std::move(edge));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("map file: ") + e.what());
    }
    return map;
}

void export_map(const BiomarkerMap& map, const std::string& path, const std::string& format) {
    if (format == "dot")
        write_file(path, map_to_dot(map));
    else if (format == "json")
        write_file(path, map_to_json_text(map));
    else
        throw ConfigError("export_map: unknown format \"" + format + "\" (dot or json)");
}

void write_pipeline_outputs(const PipelineResult& result, const PipelineConfig& cfg,
                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string prov = provenance_line(cfg);
    const std::filesystem::path dir(out_dir);

    write_qvalues_csv(result.qvalues, (dir / "qvalues.csv").string(), {prov});
    export_map(result.map, (dir / "map.dot").string(), "dot");
    export_map(result.map, (dir / "map.json").string(), "json");
    write_edge_list(result.graph, (dir / "edges.tsv").string(), prov);

    std::ostringstream report;
    report << "# " << prov << "\n";
    report << "auc,f1,feature_precision,selected\n";
    report << fmt_double(result.report.auc) << "," << fmt_double(result.report.f1) << ","
           << fmt_optional(result.report.feature_precision) << "," << result.report.selected
           << "\n";
    write_file((dir / "report.csv").string(), report.str());
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.entries.empty()) throw ConfigError("benchmark: no entries");
    if (cfg.seeds.empty()) throw ConfigError("benchmark: no seeds");

    std::vector<BenchmarkRow> rows;
    for (const BenchmarkEntry& entry : cfg.entries) {
        BenchmarkRow row;
        row.method = entry.method;
        std::vector<double> aucs, f1s, fps;
        try {
            for (std::uint64_t seed : cfg.seeds) {
                PipelineConfig run_cfg = entry.config;
                run_cfg.seed = seed;
                const PipelineResult res = run_pipeline(run_cfg);
                aucs.push_back(res.report.auc);
                f1s.push_back(res.report.f1);
                if (res.report.feature_precision) fps.push_back(*res.report.feature_precision);
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
            if (v.empty()) {
                mean = sd = std::nan("");
                return;
            }
            mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            if (v.size() < 2) {
                sd = 0.0;
                return;
            }
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        };
        if (row.failed) {
            row.auc_mean = row.auc_sd = row.f1_mean = row.f1_sd = row.fp_mean = row.fp_sd =
                std::nan("");
        } else {
            row.n_runs = cfg.seeds.size();
            mean_sd(aucs, row.auc_mean, row.auc_sd);
            mean_sd(f1s, row.f1_mean, row.f1_sd);
            mean_sd(fps, row.fp_mean, row.fp_sd);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream out;
    out << "method,auc_mean,auc_sd,f1_mean,f1_sd,fp_mean,fp_sd\n";
    for (const BenchmarkRow& row : rows)
        out << row.method << "," << fmt_double(row.auc_mean) << "," << fmt_double(row.auc_sd)
            << "," << fmt_double(row.f1_mean) << "," << fmt_double(row.f1_sd) << ","
            << fmt_double(row.fp_mean) << "," << fmt_double(row.fp_sd) << "\n";
    return out.str();
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::string& path) {
    write_file(path, benchmark_csv(rows));
}

void write_simulated_cohort(const PipelineConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (cfg.data.mode != "simulate")
        throw ConfigError("simulate: config data.mode must be \"simulate\"");
    SeededRng rng(cfg.seed);
    auto [ds, graph] = simulate(cfg.data.sim, rng.split("sim"));
    std::filesystem::create_directories(out_dir);
    const std::string prov = provenance_line(cfg);
    write_cohort_csv(ds, out_dir, prov);
    write_edge_list(graph, (std::filesystem::path(out_dir) / "edges.tsv").string(), prov);
}

} // namespace biomark
