#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "biomark/errors.hpp"
#include "biomark/gat.hpp"
#include "doctest.h"

using namespace biomark;

namespace {

GeneGraph make_graph(std::size_t n,
                     std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
    GeneGraph g;
    g.n_nodes = n;
    g.edges = std::move(edges);
    std::sort(g.edges.begin(), g.edges.end());
    g.build_neighbor_index();
    g.validate();
    return g;
}

Matrix random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
    SeededRng r(seed);
    Matrix h(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) h.at(i, j) = r.gauss(0.0, 1.0);
    return h;
}

GeneGraph random_graph(std::size_t n, std::uint64_t seed) {
    return barabasi_albert(n, 2, SeededRng(seed));
}

double leaky(double v, double slope) { return v >= 0.0 ? v : slope * v; }

// flat views over layer parameters, used by the finite-difference loops
std::vector<std::pair<double*, std::size_t>> layer_blocks(GatLayer& layer) {
    std::vector<std::pair<double*, std::size_t>> blocks;
    for (auto& w : layer.w) blocks.emplace_back(w.data().data(), w.data().size());
    for (auto& a : layer.attn) blocks.emplace_back(a.data(), a.size());
    blocks.emplace_back(layer.readout.data().data(), layer.readout.data().size());
    return blocks;
}

std::vector<std::pair<double*, std::size_t>> grad_blocks(GatGradients& g) {
    std::vector<std::pair<double*, std::size_t>> blocks;
    for (auto& w : g.w) blocks.emplace_back(w.data().data(), w.data().size());
    for (auto& a : g.attn) blocks.emplace_back(a.data(), a.size());
    blocks.emplace_back(g.readout.data().data(), g.readout.data().size());
    return blocks;
}

} // namespace

TEST_CASE("isolated node attends only to itself") {
    const GeneGraph g = make_graph(1, {});
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    const Matrix h = random_features(1, 4, 1);
    const GatLayer layer = GatLayer::init(4, cfg, SeededRng(2));
    const GatForwardCache cache = gat_forward(layer, g, h);

    for (std::size_t k = 0; k < 2; ++k) {
        REQUIRE(cache.alpha[k].size() == 1);
        CHECK(cache.alpha[k][0] == 1.0);
    }
    // h' is the concatenation of the per-head transforms
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t d = 0; d < 3; ++d) {
            double want = 0.0;
            for (std::size_t c = 0; c < 4; ++c) want += layer.w[k].at(c, d) * h.at(0, c);
            CHECK(cache.hprime.at(0, k * 3 + d) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("identical features spread attention uniformly") {
    const GeneGraph g = make_graph(3, {{0, 1}, {0, 2}});
    GatConfig cfg;
    cfg.heads = 1;
    cfg.head_dim = 2;
    Matrix h(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        h.at(i, 0) = 0.7;
        h.at(i, 1) = -0.4;
    }
    const GatLayer layer = GatLayer::init(2, cfg, SeededRng(3));
    const GatForwardCache cache = gat_forward(layer, g, h);

    // node 0 neighborhood = {0,1,2}, all scores equal by symmetry
    const auto& off = cache.adj.offsets;
    for (std::uint32_t e = off[0]; e < off[1]; ++e)
        CHECK(cache.alpha[0][e] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward pass matches a scalar transcription on a 3-node path") {
    const GeneGraph g = make_graph(3, {{0, 1}, {1, 2}});
    const std::size_t d_in = 2, d_head = 2;
    GatConfig cfg;
    cfg.heads = 1;
    cfg.head_dim = d_head;
    cfg.leaky_slope = 0.2;
    GatLayer layer = GatLayer::init(d_in, cfg, SeededRng(4));
    layer.w[0].at(0, 0) = 0.3;
    layer.w[0].at(0, 1) = -0.2;
    layer.w[0].at(1, 0) = 0.1;
    layer.w[0].at(1, 1) = 0.4;
    layer.attn[0] = {0.5, -0.3, 0.2, 0.1};
    Matrix h(3, d_in);
    h.at(0, 0) = 1.0;
    h.at(0, 1) = 0.0;
    h.at(1, 0) = 0.0;
    h.at(1, 1) = 1.0;
    h.at(2, 0) = 1.0;
    h.at(2, 1) = 1.0;

    // scalar-by-scalar recomputation, no shared matrix code
    double t[3][2];
    for (int i = 0; i < 3; ++i)
        for (int d = 0; d < 2; ++d)
            t[i][d] = h.at(i, 0) * layer.w[0].at(0, d) + h.at(i, 1) * layer.w[0].at(1, d);
    const auto score = [&](int i, int j) {
        const double pre = 0.5 * t[i][0] + (-0.3) * t[i][1] + 0.2 * t[j][0] + 0.1 * t[j][1];
        return leaky(pre, 0.2);
    };
    const std::vector<std::vector<int>> hood{{0, 1}, {0, 1, 2}, {1, 2}};
    double alpha[3][3] = {};
    double want[3][2] = {};
    for (int i = 0; i < 3; ++i) {
        double mx = -1e300;
        for (int j : hood[i]) mx = std::max(mx, score(i, j));
        double denom = 0.0;
        for (int j : hood[i]) denom += std::exp(score(i, j) - mx);
        for (int j : hood[i]) alpha[i][j] = std::exp(score(i, j) - mx) / denom;
        for (int j : hood[i])
            for (int d = 0; d < 2; ++d) want[i][d] += alpha[i][j] * t[j][d];
    }

    const GatForwardCache cache = gat_forward(layer, g, h);
    for (int i = 0; i < 3; ++i)
        for (int d = 0; d < 2; ++d)
            CHECK(cache.hprime.at(i, d) == doctest::Approx(want[i][d]).epsilon(1e-12));

    const auto& off = cache.adj.offsets;
    for (int i = 0; i < 3; ++i)
        for (std::uint32_t e = off[i]; e < off[i + 1]; ++e) {
            const int j = static_cast<int>(cache.adj.targets[e]);
            CHECK(cache.alpha[0][e] == doctest::Approx(alpha[i][j]).epsilon(1e-12));
        }
}

TEST_CASE("attention rows are stochastic on random instances") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const GeneGraph g = random_graph(12 + s, 100 + s);
        GatConfig cfg;
        cfg.heads = 3;
        cfg.head_dim = 4;
        const Matrix h = random_features(g.n_nodes, 5, 200 + s);
        const GatLayer layer = GatLayer::init(5, cfg, SeededRng(300 + s));
        const GatForwardCache cache = gat_forward(layer, g, h);
        for (std::size_t k = 0; k < cfg.heads; ++k)
            for (std::size_t i = 0; i < g.n_nodes; ++i) {
                double sum = 0.0;
                for (std::uint32_t e = cache.adj.offsets[i]; e < cache.adj.offsets[i + 1];
                     ++e)
                    sum += cache.alpha[k][e];
                CHECK(std::abs(sum - 1.0) <= 1e-10);
            }
    }
}

TEST_CASE("relabeling nodes permutes the output rows") {
    const GeneGraph g = random_graph(15, 7);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    const Matrix h = random_features(15, 4, 8);
    const GatLayer layer = GatLayer::init(4, cfg, SeededRng(9));
    const GatForwardCache base = gat_forward(layer, g, h);

    std::vector<std::uint32_t> perm(15);
    std::iota(perm.begin(), perm.end(), 0u);
    SeededRng shuffler(10);
    shuffler.shuffle(perm);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& [a, b] : g.edges)
        edges.emplace_back(std::min(perm[a], perm[b]), std::max(perm[a], perm[b]));
    const GeneGraph pg = make_graph(15, std::move(edges));
    Matrix ph(15, 4);
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t j = 0; j < 4; ++j) ph.at(perm[i], j) = h.at(i, j);

    const GatForwardCache permuted = gat_forward(layer, pg, ph);
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t c = 0; c < base.hprime.cols(); ++c)
            CHECK(std::abs(permuted.hprime.at(perm[i], c) - base.hprime.at(i, c)) <
                  1e-12);
}

TEST_CASE("zero cotangent yields zero gradients") {
    const GeneGraph g = random_graph(8, 11);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    const Matrix h = random_features(8, 4, 12);
    const GatLayer layer = GatLayer::init(4, cfg, SeededRng(13));
    const GatForwardCache cache = gat_forward(layer, g, h);
    const Matrix zero(8, 6);
    const GatGradients grads = gat_backward(cache, layer, g, h, zero);
    for (const auto& w : grads.w)
        for (double v : w.data()) CHECK(v == 0.0);
    for (const auto& a : grads.attn)
        for (double v : a) CHECK(v == 0.0);
    for (double v : grads.input.data()) CHECK(v == 0.0);
}

TEST_CASE("duplicated heads produce identical gradient blocks") {
    const GeneGraph g = random_graph(9, 14);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    const Matrix h = random_features(9, 4, 15);
    GatLayer layer = GatLayer::init(4, cfg, SeededRng(16));
    layer.w[1] = layer.w[0];
    layer.attn[1] = layer.attn[0];

    // cotangent repeated across the two head slices
    Matrix grad_out(9, 6);
    SeededRng r(17);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t d = 0; d < 3; ++d) {
            const double v = r.gauss(0.0, 1.0);
            grad_out.at(i, d) = v;
            grad_out.at(i, 3 + d) = v;
        }
    const GatForwardCache cache = gat_forward(layer, g, h);
    const GatGradients grads = gat_backward(cache, layer, g, h, grad_out);
    CHECK(grads.w[0].data() == grads.w[1].data());
    CHECK(grads.attn[0] == grads.attn[1]);
}

TEST_CASE("backward pass matches central finite differences") {
    // property run over 10 random instances: VJP against a directional
    // finite difference of L = sum(hprime * G)
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const GeneGraph g = random_graph(5, 400 + s);
        GatConfig cfg;
        cfg.heads = 2;
        cfg.head_dim = 2;
        GatLayer layer = GatLayer::init(3, cfg, SeededRng(500 + s));
        Matrix h = random_features(5, 3, 600 + s);
        Matrix gmat = random_features(5, 4, 700 + s);

        const auto loss = [&]() {
            const GatForwardCache c = gat_forward(layer, g, h);
            double L = 0.0;
            for (std::size_t i = 0; i < c.hprime.rows(); ++i)
                for (std::size_t j = 0; j < c.hprime.cols(); ++j)
                    L += c.hprime.at(i, j) * gmat.at(i, j);
            return L;
        };

        const GatForwardCache cache = gat_forward(layer, g, h);
        GatGradients grads = gat_backward(cache, layer, g, h, gmat);

        const double step = 1e-5;
        const auto check_block = [&](double* params, const double* analytic,
                                     std::size_t len) {
            for (std::size_t t = 0; t < len; ++t) {
                const double keep = params[t];
                params[t] = keep + step;
                const double up = loss();
                params[t] = keep - step;
                const double down = loss();
                params[t] = keep;
                const double fd = (up - down) / (2.0 * step);
                const double rel = std::abs(analytic[t] - fd) /
                                   std::max({std::abs(analytic[t]), std::abs(fd), 1e-3});
                worst = std::max(worst, rel);
            }
        };
        for (std::size_t k = 0; k < 2; ++k) {
            check_block(layer.w[k].data().data(), grads.w[k].data().data(),
                        layer.w[k].data().size());
            check_block(layer.attn[k].data(), grads.attn[k].data(), layer.attn[k].size());
        }
        check_block(h.data().data(), grads.input.data().data(), h.data().size());
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("reconstruction loss gradients match finite differences") {
    const GeneGraph g = random_graph(6, 20);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 2;
    GatLayer layer = GatLayer::init(3, cfg, SeededRng(21));
    const Matrix clean = random_features(6, 3, 22);
    Matrix noisy = clean;
    SeededRng nr(23);
    for (double& v : noisy.data()) v += nr.gauss(0.0, 0.1);

    GatGradients grads = GatGradients::zeros_like(layer, 6);
    gat_recon_loss(layer, g, noisy, clean, &grads);

    auto params = layer_blocks(layer);
    auto analytic = grad_blocks(grads);
    REQUIRE(params.size() == analytic.size());
    const double step = 1e-5;
    double worst = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        REQUIRE(params[b].second == analytic[b].second);
        for (std::size_t t = 0; t < params[b].second; ++t) {
            double* slot = params[b].first + t;
            const double keep = *slot;
            *slot = keep + step;
            const double up = gat_recon_loss(layer, g, noisy, clean, nullptr);
            *slot = keep - step;
            const double down = gat_recon_loss(layer, g, noisy, clean, nullptr);
            *slot = keep;
            const double fd = (up - down) / (2.0 * step);
            const double got = analytic[b].first[t];
            worst = std::max(worst, std::abs(got - fd) /
                                        std::max({std::abs(got), std::abs(fd), 1e-3}));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("training loss is non-increasing without corruption") {
    const GeneGraph g = random_graph(10, 30);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 4; // K*d_head >= d_in so the identity readout is reachable
    cfg.noise_sd = 0.0;
    cfg.lr = 1e-2;
    cfg.epochs = 200;
    const Matrix h = random_features(10, 5, 31);
    const GatTrainResult r = gat_train(g, h, cfg, SeededRng(32));
    REQUIRE(r.loss_history.size() == cfg.epochs);
    for (std::size_t e = 1; e < r.loss_history.size(); ++e)
        CHECK(r.loss_history[e] <= r.loss_history[e - 1] + 1e-12);
}

TEST_CASE("edge strengths are rescaled into the unit interval") {
    const GeneGraph g = random_graph(12, 33);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.epochs = 10;
    const Matrix h = random_features(12, 4, 34);
    const GatTrainResult r = gat_train(g, h, cfg, SeededRng(35));
    REQUIRE(r.graph.edge_strength.size() == g.edges.size());
    double mx = 0.0;
    for (double s : r.graph.edge_strength) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        mx = std::max(mx, s);
    }
    CHECK(mx == 1.0);

    // final attention rows stay stochastic
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        double sum = 0.0;
        for (std::uint32_t e = r.adj.offsets[i]; e < r.adj.offsets[i + 1]; ++e)
            sum += r.attention_mean[e];
        CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
}

TEST_CASE("training is deterministic per seed") {
    const GeneGraph g = random_graph(10, 36);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.epochs = 20;
    const Matrix h = random_features(10, 4, 37);
    const GatTrainResult a = gat_train(g, h, cfg, SeededRng(38));
    const GatTrainResult b = gat_train(g, h, cfg, SeededRng(38));
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.graph.edge_strength == b.graph.edge_strength);
}

TEST_CASE("diverging training reports a numeric error naming lr") {
    const GeneGraph g = random_graph(8, 39);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.lr = 1e6;
    cfg.epochs = 200;
    const Matrix h = random_features(8, 4, 40);
    try {
        gat_train(g, h, cfg, SeededRng(41));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("lr") != std::string::npos);
    }
}

TEST_CASE("attention smoothing equals the dense mixing oracle") {
    const GeneGraph g = random_graph(7, 42);
    GatConfig cfg;
    cfg.heads = 2;
    cfg.head_dim = 3;
    cfg.epochs = 5;
    const Matrix node_feats = random_features(7, 4, 43);
    const GatTrainResult r = gat_train(g, node_feats, cfg, SeededRng(44));

    const Matrix x = random_features(9, 7, 45); // 9 samples over 7 graph features
    const Matrix smoothed = attention_smooth(r, x);

    Matrix dense(7, 7);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::uint32_t e = r.adj.offsets[i]; e < r.adj.offsets[i + 1]; ++e)
            dense.at(i, r.adj.targets[e]) = r.attention_mean[e];
    for (std::size_t s = 0; s < 9; ++s)
        for (std::size_t i = 0; i < 7; ++i) {
            double want = 0.0;
            for (std::size_t t = 0; t < 7; ++t) want += dense.at(i, t) * x.at(s, t);
            CHECK(smoothed.at(s, i) == doctest::Approx(want).epsilon(1e-12));
        }
}
