#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

struct MvaeConfig {
    std::size_t latent_dim = 32;
    std::size_t hidden_dim = 64;
    double beta = 1.0;         // KL weight
    double lambda_cross = 0.1; // cross-modal alignment weight
    double lr = 1e-3;
    std::size_t epochs = 150;
    bool gat_smoothing = true; // pipeline-level switch, carried here for config parity
};

/// One-hidden-layer tanh encoder producing (mu, log sigma^2), and a
/// mirrored decoder. log sigma^2 is clamped to [-10, 10].
struct MvaeEncoder {
    Matrix w1;               // in x hidden
    std::vector<double> b1;  // hidden
    Matrix w_mu;             // hidden x latent
    std::vector<double> b_mu;
    Matrix w_lv;             // hidden x latent
    std::vector<double> b_lv;
};

struct MvaeDecoder {
    Matrix v1;               // latent x hidden
    std::vector<double> c1;  // hidden
    Matrix v2;               // hidden x in
    std::vector<double> c2;  // in
};

struct MvaeModel {
    std::size_t latent_dim = 0;
    std::size_t hidden_dim = 0;
    double beta = 1.0;
    double lambda_cross = 0.1;
    std::vector<std::size_t> input_dims;
    std::vector<MvaeEncoder> encoders;
    std::vector<MvaeDecoder> decoders;

    static MvaeModel init(const std::vector<std::size_t>& input_dims,
                          const MvaeConfig& cfg, SeededRng rng);
};

struct MvaeEncodeResult {
    Matrix mu;         // samples x latent
    Matrix log_var;    // clamped
    Matrix log_var_raw; // pre-clamp, kept for the backward pass
};

struct MvaeLossReport {
    std::vector<double> recon; // per modality
    std::vector<double> kl;    // per modality
    double cross = 0.0;
    double total = 0.0;
};

/// Mirrors the model parameter layout; used for updates and gradient checks.
struct MvaeGradients {
    std::vector<MvaeEncoder> enc;
    std::vector<MvaeDecoder> dec;
    static MvaeGradients zeros_like(const MvaeModel& m);
};

/// Flat views over every parameter block, in a fixed order. The same walk
/// applies to a model and its gradients, which is what the finite-difference
/// checks iterate over.
std::vector<std::pair<double*, std::size_t>> mvae_param_blocks(MvaeModel& m);
std::vector<std::pair<double*, std::size_t>> mvae_param_blocks(MvaeGradients& g);

std::vector<MvaeEncodeResult> mvae_encode(const MvaeModel& m, const std::vector<Matrix>& x);

/// KL(N(mu, diag sigma^2) || N(0, I)) = 0.5 sum(mu^2 + sigma^2 - 1 - log sigma^2).
double kl_diag_gauss(const std::vector<double>& mu, const std::vector<double>& log_var);

/// Loss with an explicit noise realisation (eps, one matrix per modality,
/// samples x latent). recon is the per-modality MSE of the reconstruction
/// from one reparameterized sample; cross is the mean squared distance
/// between modality latent means over samples and unordered pairs,
/// normalized by latent_dim. total = sum recon + beta * sum kl + lambda * cross.
MvaeLossReport mvae_loss_eps(const MvaeModel& m, const std::vector<Matrix>& x,
                             const std::vector<Matrix>& eps, MvaeGradients* grads);

/// Convenience wrapper drawing eps from the seeded stream.
MvaeLossReport mvae_loss(const MvaeModel& m, const std::vector<Matrix>& x, SeededRng rng);

std::vector<Matrix> mvae_draw_eps(const MvaeModel& m, std::size_t n_samples, SeededRng rng);

struct MvaeTrainResult {
    MvaeModel model;
    Matrix fused_latent; // mean of modality mu's, samples x latent
    std::vector<double> loss_history;
    MvaeLossReport final_report;
};

/// Full-batch gradient descent with analytic gradients. The noise
/// realisation is drawn once per run, so the objective (and its descent)
/// is deterministic. Throws NumericError on divergence.
MvaeTrainResult mvae_train(const std::vector<Matrix>& x, const MvaeConfig& cfg, SeededRng rng);

/// Fused latent for new data: the per-sample mean over modality mu's.
Matrix mvae_fused_latent(const MvaeModel& m, const std::vector<Matrix>& x);

} // namespace biomark
