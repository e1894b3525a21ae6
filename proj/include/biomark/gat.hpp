#pragma once

#include <cstdint>
#include <vector>

#include "biomark/graph.hpp"
#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

struct GatConfig {
    std::size_t heads = 4;
    std::size_t head_dim = 16;
    double leaky_slope = 0.2;
    double lr = 5e-3;
    std::size_t epochs = 150;
    double noise_sd = 0.1; // corruption level of the denoising objective
};

/// One multi-head attention layer plus a linear readout used for
/// feature reconstruction during self-supervised training.
struct GatLayer {
    std::size_t heads = 0;
    std::size_t head_dim = 0;
    std::size_t input_dim = 0;
    double leaky_slope = 0.2;
    std::vector<Matrix> w;                  // per head, input_dim x head_dim
    std::vector<std::vector<double>> attn;  // per head, length 2*head_dim
    Matrix readout;                         // heads*head_dim x input_dim

    static GatLayer init(std::size_t input_dim, const GatConfig& cfg, SeededRng rng);
};

/// Adjacency in CSR form with the self-loop inserted, shared by forward
/// and backward passes.
struct GatAdjacency {
    std::vector<std::uint32_t> offsets; // n_nodes + 1
    std::vector<std::uint32_t> targets; // sorted per node, includes self
};
GatAdjacency build_gat_adjacency(const GeneGraph& g);

struct GatForwardCache {
    GatAdjacency adj;
    std::vector<Matrix> transformed;        // per head: nodes x head_dim (W h)
    std::vector<std::vector<double>> pre;   // per head, aligned with adj.targets
    std::vector<std::vector<double>> alpha; // per head, rows sum to 1
    Matrix hprime;                          // nodes x heads*head_dim
};

struct GatGradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> attn;
    Matrix readout;
    Matrix input; // gradient w.r.t. the layer input features

    static GatGradients zeros_like(const GatLayer& layer, std::size_t n_nodes);
};

/// Attention scores e_ij = LeakyReLU(a^T [W h_i || W h_j]) are normalized
/// per neighborhood (self included); the outputs of all heads are
/// concatenated.
GatForwardCache gat_forward(const GatLayer& layer, const GeneGraph& g, const Matrix& h);

/// Exact vector-Jacobian product of the forward map: grad_out is the
/// cotangent of hprime. Fills w/attn/input gradients; the readout does not
/// enter hprime, so its block stays zero here.
GatGradients gat_backward(const GatForwardCache& cache, const GatLayer& layer,
                          const GeneGraph& g, const Matrix& h, const Matrix& grad_out);

/// Denoising reconstruction loss: mean squared error between
/// readout(hprime(noisy)) and the clean features. When grads is non-null
/// all parameter gradients (w, attn, readout) are accumulated into it.
double gat_recon_loss(const GatLayer& layer, const GeneGraph& g, const Matrix& noisy,
                      const Matrix& clean, GatGradients* grads);

struct GatTrainResult {
    GatLayer layer;
    GeneGraph graph; // edge_strength filled, rescaled so the max is 1
    std::vector<double> loss_history;
    GatAdjacency adj;
    std::vector<double> attention_mean; // mean over heads, aligned with adj; row-stochastic
};

/// Full-batch gradient descent on the denoising objective. The corruption
/// is drawn once per run so the minimized objective is deterministic.
/// Throws NumericError when the loss leaves the finite range.
GatTrainResult gat_train(const GeneGraph& g, const Matrix& h, const GatConfig& cfg,
                         SeededRng rng);

/// One attention-weighted propagation step over feature columns:
/// column i of the result mixes columns of x using the learned mean
/// attention row of node i. x is samples x features with
/// features == n_nodes.
Matrix attention_smooth(const GatTrainResult& trained, const Matrix& x);

} // namespace biomark
