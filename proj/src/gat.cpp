#include "biomark/gat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biomark/errors.hpp"

namespace biomark {

namespace {

void xavier_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : m.data()) v = (2.0 * rng.uniform() - 1.0) * s;
}

} // namespace

GatLayer GatLayer::init(std::size_t input_dim, const GatConfig& cfg, SeededRng rng) {
    if (cfg.heads == 0 || cfg.head_dim == 0)
        throw ConfigError("gat config: heads and head_dim must be positive");
    GatLayer layer;
    layer.heads = cfg.heads;
    layer.head_dim = cfg.head_dim;
    layer.input_dim = input_dim;
    layer.leaky_slope = cfg.leaky_slope;
    for (std::size_t k = 0; k < cfg.heads; ++k) {
        SeededRng hr = rng.split("head/" + std::to_string(k));
        Matrix wk(input_dim, cfg.head_dim);
        xavier_fill(wk, input_dim, cfg.head_dim, hr);
        layer.w.push_back(std::move(wk));
        std::vector<double> a(2 * cfg.head_dim);
        const double s = std::sqrt(6.0 / static_cast<double>(2 * cfg.head_dim + 1));
        for (double& v : a) v = (2.0 * hr.uniform() - 1.0) * s;
        layer.attn.push_back(std::move(a));
    }
    SeededRng rr = rng.split("readout");
    layer.readout = Matrix(cfg.heads * cfg.head_dim, input_dim);
    xavier_fill(layer.readout, cfg.heads * cfg.head_dim, input_dim, rr);
    return layer;
}

GatAdjacency build_gat_adjacency(const GeneGraph& g) {
    GatAdjacency adj;
    adj.offsets.resize(g.n_nodes + 1, 0);
    for (std::size_t i = 0; i < g.n_nodes; ++i)
        adj.offsets[i + 1] = adj.offsets[i] +
                             static_cast<std::uint32_t>(g.neighbors[i].size()) + 1;
    adj.targets.resize(adj.offsets.back());
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        std::uint32_t pos = adj.offsets[i];
        bool self_placed = false;
        for (std::uint32_t j : g.neighbors[i]) {
            if (!self_placed && j > i) {
                adj.targets[pos++] = static_cast<std::uint32_t>(i);
                self_placed = true;
            }
            adj.targets[pos++] = j;
        }
        if (!self_placed) adj.targets[pos++] = static_cast<std::uint32_t>(i);
    }
    return adj;
}

GatGradients GatGradients::zeros_like(const GatLayer& layer, std::size_t n_nodes) {
    GatGradients g;
    for (std::size_t k = 0; k < layer.heads; ++k) {
        g.w.emplace_back(layer.input_dim, layer.head_dim);
        g.attn.emplace_back(2 * layer.head_dim, 0.0);
    }
    g.readout = Matrix(layer.heads * layer.head_dim, layer.input_dim);
    g.input = Matrix(n_nodes, layer.input_dim);
    return g;
}

GatForwardCache gat_forward(const GatLayer& layer, const GeneGraph& g, const Matrix& h) {
    if (h.rows() != g.n_nodes)
        throw DataError("gat_forward: feature rows (" + std::to_string(h.rows()) +
                        ") != graph nodes (" + std::to_string(g.n_nodes) + ")");
    if (h.cols() != layer.input_dim)
        throw DataError("gat_forward: feature width (" + std::to_string(h.cols()) +
                        ") != layer input_dim (" + std::to_string(layer.input_dim) + ")");

    GatForwardCache cache;
    cache.adj = build_gat_adjacency(g);
    const auto& adj = cache.adj;
    const std::size_t n = g.n_nodes, dh = layer.head_dim;

    cache.hprime = Matrix(n, layer.heads * dh);
    for (std::size_t k = 0; k < layer.heads; ++k) {
        Matrix t = matmul(h, layer.w[k]); // nodes x head_dim
        const double* a1 = layer.attn[k].data();
        const double* a2 = layer.attn[k].data() + dh;

        std::vector<double> s1(n, 0.0), s2(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* ti = t.row(i);
            double v1 = 0.0, v2 = 0.0;
            for (std::size_t d = 0; d < dh; ++d) {
                v1 += a1[d] * ti[d];
                v2 += a2[d] * ti[d];
            }
            s1[i] = v1;
            s2[i] = v2;
        }

        std::vector<double> pre(adj.targets.size());
        std::vector<double> alpha(adj.targets.size());
        std::vector<double> scores;
        for (std::size_t i = 0; i < n; ++i) {
            scores.clear();
            for (std::uint32_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
                const double raw = s1[i] + s2[adj.targets[e]];
                pre[e] = raw;
                scores.push_back(raw > 0.0 ? raw : layer.leaky_slope * raw);
            }
            const auto sm = softmax_stable(scores);
            double* out = cache.hprime.row(i) + k * dh;
            for (std::size_t c = 0; c < sm.size(); ++c) {
                const std::uint32_t e = adj.offsets[i] + static_cast<std::uint32_t>(c);
                alpha[e] = sm[c];
                const double* tj = t.row(adj.targets[e]);
                for (std::size_t d = 0; d < dh; ++d) out[d] += sm[c] * tj[d];
            }
        }

        cache.transformed.push_back(std::move(t));
        cache.pre.push_back(std::move(pre));
        cache.alpha.push_back(std::move(alpha));
    }
    return cache;
}

GatGradients gat_backward(const GatForwardCache& cache, const GatLayer& layer,
                          const GeneGraph& g, const Matrix& h, const Matrix& grad_out) {
    if (grad_out.rows() != cache.hprime.rows() || grad_out.cols() != cache.hprime.cols())
        throw DataError("gat_backward: grad_out shape mismatch");

    GatGradients grads = GatGradients::zeros_like(layer, g.n_nodes);
    const auto& adj = cache.adj;
    const std::size_t n = g.n_nodes, dh = layer.head_dim;

    for (std::size_t k = 0; k < layer.heads; ++k) {
        const Matrix& t = cache.transformed[k];
        const auto& pre = cache.pre[k];
        const auto& alpha = cache.alpha[k];
        const double* a1 = layer.attn[k].data();
        const double* a2 = layer.attn[k].data() + dh;

        Matrix dt(n, dh);
        std::vector<double> ds1(n, 0.0), ds2(n, 0.0);

        for (std::size_t i = 0; i < n; ++i) {
            const double* gi = grad_out.row(i) + k * dh;

            // d(alpha), then through the per-neighborhood softmax Jacobian
            const std::uint32_t lo = adj.offsets[i], hi = adj.offsets[i + 1];
            double dot = 0.0;
            std::vector<double> dalpha(hi - lo);
            for (std::uint32_t e = lo; e < hi; ++e) {
                const double* tj = t.row(adj.targets[e]);
                double v = 0.0;
                for (std::size_t d = 0; d < dh; ++d) v += gi[d] * tj[d];
                dalpha[e - lo] = v;
                dot += alpha[e] * v;
                // out_i = sum_j alpha_ij t_j
                double* dtj = dt.row(adj.targets[e]);
                for (std::size_t d = 0; d < dh; ++d) dtj[d] += alpha[e] * gi[d];
            }
            for (std::uint32_t e = lo; e < hi; ++e) {
                const double de = alpha[e] * (dalpha[e - lo] - dot);
                // LeakyReLU subgradient: negative-side slope at 0
                const double dpre = de * (pre[e] > 0.0 ? 1.0 : layer.leaky_slope);
                ds1[i] += dpre;
                ds2[adj.targets[e]] += dpre;
            }
        }

        // s1_i = a1 . t_i, s2_i = a2 . t_i
        double* da1 = grads.attn[k].data();
        double* da2 = grads.attn[k].data() + dh;
        for (std::size_t i = 0; i < n; ++i) {
            const double* ti = t.row(i);
            double* dti = dt.row(i);
            for (std::size_t d = 0; d < dh; ++d) {
                da1[d] += ds1[i] * ti[d];
                da2[d] += ds2[i] * ti[d];
                dti[d] += ds1[i] * a1[d] + ds2[i] * a2[d];
            }
        }

        // t = h W
        Matrix dwk = matmul(transpose(h), dt);
        grads.w[k].data() = std::move(dwk.data());
        Matrix dh_k = matmul(dt, transpose(layer.w[k]));
        for (std::size_t idx = 0; idx < dh_k.data().size(); ++idx)
            grads.input.data()[idx] += dh_k.data()[idx];
    }
    return grads;
}

double gat_recon_loss(const GatLayer& layer, const GeneGraph& g, const Matrix& noisy,
                      const Matrix& clean, GatGradients* grads) {
    GatForwardCache cache = gat_forward(layer, g, noisy);
    Matrix xhat = matmul(cache.hprime, layer.readout);

    const double scale = 1.0 / static_cast<double>(xhat.rows() * xhat.cols());
    double loss = 0.0;
    Matrix dxhat(xhat.rows(), xhat.cols());
    for (std::size_t idx = 0; idx < xhat.data().size(); ++idx) {
        const double diff = xhat.data()[idx] - clean.data()[idx];
        loss += diff * diff * scale;
        dxhat.data()[idx] = 2.0 * diff * scale;
    }

    if (grads) {
        Matrix dreadout = matmul(transpose(cache.hprime), dxhat);
        Matrix dhprime = matmul(dxhat, transpose(layer.readout));
        *grads = gat_backward(cache, layer, g, noisy, dhprime);
        grads->readout.data() = std::move(dreadout.data());
    }
    return loss;
}

GatTrainResult gat_train(const GeneGraph& g, const Matrix& h, const GatConfig& cfg,
                         SeededRng rng) {
    if (cfg.epochs == 0) throw ConfigError("gat config: epochs must be >= 1");

    GatLayer layer = GatLayer::init(h.cols(), cfg, rng.split("init"));

    Matrix noisy = h;
    if (cfg.noise_sd > 0.0) {
        SeededRng nr = rng.split("noise");
        for (double& v : noisy.data()) v += nr.gauss(0.0, cfg.noise_sd);
    }

    GatTrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        GatGradients grads;
        const double loss = gat_recon_loss(layer, g, noisy, h, &grads);
        if (!std::isfinite(loss))
            throw NumericError("gat_train: loss diverged at epoch " + std::to_string(epoch) +
                               "; reduce lr (" + std::to_string(cfg.lr) + ")");
        result.loss_history.push_back(loss);

        for (std::size_t k = 0; k < layer.heads; ++k) {
            for (std::size_t idx = 0; idx < layer.w[k].data().size(); ++idx)
                layer.w[k].data()[idx] -= cfg.lr * grads.w[k].data()[idx];
            for (std::size_t idx = 0; idx < layer.attn[k].size(); ++idx)
                layer.attn[k][idx] -= cfg.lr * grads.attn[k][idx];
        }
        for (std::size_t idx = 0; idx < layer.readout.data().size(); ++idx)
            layer.readout.data()[idx] -= cfg.lr * grads.readout.data()[idx];
    }

    // final attention on the clean features drives strengths and smoothing
    GatForwardCache cache = gat_forward(layer, g, h);
    const auto& adj = cache.adj;

    result.attention_mean.assign(adj.targets.size(), 0.0);
    for (std::size_t k = 0; k < layer.heads; ++k)
        for (std::size_t e = 0; e < adj.targets.size(); ++e)
            result.attention_mean[e] += cache.alpha[k][e] / static_cast<double>(layer.heads);

    // per-edge strength: mean attention over heads and both directions
    GeneGraph out_graph = g;
    out_graph.edge_strength.assign(g.edges.size(), 0.0);
    if (!g.edges.empty()) {
        std::vector<std::vector<std::pair<std::uint32_t, double>>> att_of(g.n_nodes);
        for (std::size_t i = 0; i < g.n_nodes; ++i)
            for (std::uint32_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e)
                att_of[i].emplace_back(adj.targets[e], result.attention_mean[e]);
        auto lookup = [&](std::uint32_t i, std::uint32_t j) {
            for (const auto& [tgt, a] : att_of[i])
                if (tgt == j) return a;
            return 0.0;
        };
        double max_strength = 0.0;
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            const auto [i, j] = g.edges[e];
            const double s = 0.5 * (lookup(i, j) + lookup(j, i));
            out_graph.edge_strength[e] = s;
            max_strength = std::max(max_strength, s);
        }
        if (max_strength > 0.0)
            for (double& s : out_graph.edge_strength) s /= max_strength;
    }

    result.layer = std::move(layer);
    result.graph = std::move(out_graph);
    result.adj = adj;
    return result;
}

Matrix attention_smooth(const GatTrainResult& trained, const Matrix& x) {
    const auto& adj = trained.adj;
    const std::size_t n_nodes = adj.offsets.size() - 1;
    if (x.cols() != n_nodes)
        throw DataError("attention_smooth: feature count (" + std::to_string(x.cols()) +
                        ") != graph nodes (" + std::to_string(n_nodes) + ")");
    Matrix out(x.rows(), x.cols());
    for (std::size_t s = 0; s < x.rows(); ++s) {
        const double* xr = x.row(s);
        double* orow = out.row(s);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            double v = 0.0;
            for (std::uint32_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e)
                v += trained.attention_mean[e] * xr[adj.targets[e]];
            orow[i] = v;
        }
    }
    return out;
}

} // namespace biomark
