#include "biomark/mvae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biomark/errors.hpp"

namespace biomark {

namespace {

constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;

void xavier_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : m.data()) v = (2.0 * rng.uniform() - 1.0) * s;
}

std::vector<double> colsum(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
    }
    return out;
}

// dense layer: out = x w + b, optionally through tanh
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out = matmul(x, w);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] += b[c];
    }
    return out;
}

void tanh_inplace(Matrix& m) {
    for (double& v : m.data()) v = std::tanh(v);
}

void check_inputs(const MvaeModel& m, const std::vector<Matrix>& x, const char* where) {
    if (x.size() != m.encoders.size())
        throw DataError(std::string(where) + ": got " + std::to_string(x.size()) +
                        " modalities, model has " + std::to_string(m.encoders.size()));
    if (x.empty()) throw DataError(std::string(where) + ": no modalities");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].cols() != m.input_dims[i])
            throw DataError(std::string(where) + ": modality " + std::to_string(i) +
                            " width " + std::to_string(x[i].cols()) + " != expected " +
                            std::to_string(m.input_dims[i]));
        if (x[i].rows() != x[0].rows())
            throw DataError(std::string(where) + ": modality " + std::to_string(i) +
                            " sample count differs");
    }
    if (x[0].rows() == 0) throw DataError(std::string(where) + ": no samples");
}

} // namespace

MvaeModel MvaeModel::init(const std::vector<std::size_t>& input_dims,
                          const MvaeConfig& cfg, SeededRng rng) {
    if (cfg.latent_dim == 0 || cfg.hidden_dim == 0)
        throw ConfigError("mvae config: latent_dim and hidden_dim must be positive");
    if (input_dims.empty()) throw ConfigError("mvae config: at least one modality required");
    for (std::size_t d : input_dims)
        if (d == 0) throw ConfigError("mvae config: modality width must be positive");

    MvaeModel m;
    m.latent_dim = cfg.latent_dim;
    m.hidden_dim = cfg.hidden_dim;
    m.beta = cfg.beta;
    m.lambda_cross = cfg.lambda_cross;
    m.input_dims = input_dims;

    for (std::size_t i = 0; i < input_dims.size(); ++i) {
        const std::size_t p = input_dims[i];
        SeededRng er = rng.split("enc/" + std::to_string(i));
        MvaeEncoder enc;
        enc.w1 = Matrix(p, cfg.hidden_dim);
        xavier_fill(enc.w1, p, cfg.hidden_dim, er);
        enc.b1.assign(cfg.hidden_dim, 0.0);
        enc.w_mu = Matrix(cfg.hidden_dim, cfg.latent_dim);
        xavier_fill(enc.w_mu, cfg.hidden_dim, cfg.latent_dim, er);
        enc.b_mu.assign(cfg.latent_dim, 0.0);
        enc.w_lv = Matrix(cfg.hidden_dim, cfg.latent_dim);
        xavier_fill(enc.w_lv, cfg.hidden_dim, cfg.latent_dim, er);
        enc.b_lv.assign(cfg.latent_dim, 0.0);
        m.encoders.push_back(std::move(enc));

        SeededRng dr = rng.split("dec/" + std::to_string(i));
        MvaeDecoder dec;
        dec.v1 = Matrix(cfg.latent_dim, cfg.hidden_dim);
        xavier_fill(dec.v1, cfg.latent_dim, cfg.hidden_dim, dr);
        dec.c1.assign(cfg.hidden_dim, 0.0);
        dec.v2 = Matrix(cfg.hidden_dim, p);
        xavier_fill(dec.v2, cfg.hidden_dim, p, dr);
        dec.c2.assign(p, 0.0);
        m.decoders.push_back(std::move(dec));
    }
    return m;
}

MvaeGradients MvaeGradients::zeros_like(const MvaeModel& m) {
    MvaeGradients g;
    for (std::size_t i = 0; i < m.encoders.size(); ++i) {
        const std::size_t p = m.input_dims[i];
        MvaeEncoder enc;
        enc.w1 = Matrix(p, m.hidden_dim);
        enc.b1.assign(m.hidden_dim, 0.0);
        enc.w_mu = Matrix(m.hidden_dim, m.latent_dim);
        enc.b_mu.assign(m.latent_dim, 0.0);
        enc.w_lv = Matrix(m.hidden_dim, m.latent_dim);
        enc.b_lv.assign(m.latent_dim, 0.0);
        g.enc.push_back(std::move(enc));
        MvaeDecoder dec;
        dec.v1 = Matrix(m.latent_dim, m.hidden_dim);
        dec.c1.assign(m.hidden_dim, 0.0);
        dec.v2 = Matrix(m.hidden_dim, p);
        dec.c2.assign(p, 0.0);
        g.dec.push_back(std::move(dec));
    }
    return g;
}

namespace {

template <typename Enc, typename Dec>
std::vector<std::pair<double*, std::size_t>> walk_blocks(std::vector<Enc>& enc,
                                                         std::vector<Dec>& dec) {
    std::vector<std::pair<double*, std::size_t>> blocks;
    auto add_mat = [&](Matrix& m) { blocks.emplace_back(m.data().data(), m.data().size()); };
    auto add_vec = [&](std::vector<double>& v) { blocks.emplace_back(v.data(), v.size()); };
    for (std::size_t i = 0; i < enc.size(); ++i) {
        add_mat(enc[i].w1);
        add_vec(enc[i].b1);
        add_mat(enc[i].w_mu);
        add_vec(enc[i].b_mu);
        add_mat(enc[i].w_lv);
        add_vec(enc[i].b_lv);
        add_mat(dec[i].v1);
        add_vec(dec[i].c1);
        add_mat(dec[i].v2);
        add_vec(dec[i].c2);
    }
    return blocks;
}

} // namespace

std::vector<std::pair<double*, std::size_t>> mvae_param_blocks(MvaeModel& m) {
    return walk_blocks(m.encoders, m.decoders);
}

std::vector<std::pair<double*, std::size_t>> mvae_param_blocks(MvaeGradients& g) {
    return walk_blocks(g.enc, g.dec);
}

std::vector<MvaeEncodeResult> mvae_encode(const MvaeModel& m, const std::vector<Matrix>& x) {
    check_inputs(m, x, "mvae_encode");
    std::vector<MvaeEncodeResult> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const MvaeEncoder& enc = m.encoders[i];
        Matrix h1 = affine(x[i], enc.w1, enc.b1);
        tanh_inplace(h1);
        MvaeEncodeResult r;
        r.mu = affine(h1, enc.w_mu, enc.b_mu);
        r.log_var_raw = affine(h1, enc.w_lv, enc.b_lv);
        r.log_var = r.log_var_raw;
        for (double& v : r.log_var.data()) v = std::clamp(v, kLogVarMin, kLogVarMax);
        out.push_back(std::move(r));
    }
    return out;
}

double kl_diag_gauss(const std::vector<double>& mu, const std::vector<double>& log_var) {
    if (mu.size() != log_var.size())
        throw DataError("kl_diag_gauss: mu and log_var lengths differ");
    double kl = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d)
        kl += 0.5 * (mu[d] * mu[d] + std::exp(log_var[d]) - 1.0 - log_var[d]);
    return kl;
}

std::vector<Matrix> mvae_draw_eps(const MvaeModel& m, std::size_t n_samples, SeededRng rng) {
    std::vector<Matrix> eps;
    for (std::size_t i = 0; i < m.encoders.size(); ++i) {
        SeededRng er = rng.split("eps/" + std::to_string(i));
        Matrix e(n_samples, m.latent_dim);
        for (double& v : e.data()) v = er.gauss(0.0, 1.0);
        eps.push_back(std::move(e));
    }
    return eps;
}

MvaeLossReport mvae_loss_eps(const MvaeModel& m, const std::vector<Matrix>& x,
                             const std::vector<Matrix>& eps, MvaeGradients* grads) {
    check_inputs(m, x, "mvae_loss");
    const std::size_t n = x[0].rows();
    const std::size_t mods = x.size();
    if (eps.size() != mods) throw DataError("mvae_loss: eps modality count mismatch");
    for (std::size_t i = 0; i < mods; ++i)
        if (eps[i].rows() != n || eps[i].cols() != m.latent_dim)
            throw DataError("mvae_loss: eps shape mismatch for modality " + std::to_string(i));

    MvaeLossReport report;
    report.recon.resize(mods, 0.0);
    report.kl.resize(mods, 0.0);

    // forward, keeping what the backward pass needs
    std::vector<Matrix> h1(mods), mu(mods), lv_raw(mods), lv(mods), z(mods), h2(mods);
    for (std::size_t i = 0; i < mods; ++i) {
        const MvaeEncoder& enc = m.encoders[i];
        h1[i] = affine(x[i], enc.w1, enc.b1);
        tanh_inplace(h1[i]);
        mu[i] = affine(h1[i], enc.w_mu, enc.b_mu);
        lv_raw[i] = affine(h1[i], enc.w_lv, enc.b_lv);
        lv[i] = lv_raw[i];
        for (double& v : lv[i].data()) v = std::clamp(v, kLogVarMin, kLogVarMax);

        z[i] = mu[i];
        for (std::size_t idx = 0; idx < z[i].data().size(); ++idx)
            z[i].data()[idx] += std::exp(0.5 * lv[i].data()[idx]) * eps[i].data()[idx];

        const MvaeDecoder& dec = m.decoders[i];
        h2[i] = affine(z[i], dec.v1, dec.c1);
        tanh_inplace(h2[i]);
    }

    const double cross_pairs = static_cast<double>(mods * (mods - 1)) / 2.0;
    const double cross_scale =
        cross_pairs > 0.0
            ? 1.0 / (static_cast<double>(n) * cross_pairs * static_cast<double>(m.latent_dim))
            : 0.0;
    for (std::size_t a = 0; a < mods; ++a)
        for (std::size_t b = a + 1; b < mods; ++b)
            for (std::size_t idx = 0; idx < mu[a].data().size(); ++idx) {
                const double diff = mu[a].data()[idx] - mu[b].data()[idx];
                report.cross += diff * diff * cross_scale;
            }

    MvaeGradients g;
    if (grads) g = MvaeGradients::zeros_like(m);

    for (std::size_t i = 0; i < mods; ++i) {
        const std::size_t p = m.input_dims[i];
        const MvaeEncoder& enc = m.encoders[i];
        const MvaeDecoder& dec = m.decoders[i];

        Matrix xhat = affine(h2[i], dec.v2, dec.c2);
        const double recon_scale = 1.0 / static_cast<double>(n * p);
        Matrix dxhat(n, p);
        for (std::size_t idx = 0; idx < xhat.data().size(); ++idx) {
            const double diff = xhat.data()[idx] - x[i].data()[idx];
            report.recon[i] += diff * diff * recon_scale;
            dxhat.data()[idx] = 2.0 * diff * recon_scale;
        }

        for (std::size_t s = 0; s < n; ++s) {
            const double* mr = mu[i].row(s);
            const double* lr = lv[i].row(s);
            double kl = 0.0;
            for (std::size_t d = 0; d < m.latent_dim; ++d)
                kl += 0.5 * (mr[d] * mr[d] + std::exp(lr[d]) - 1.0 - lr[d]);
            report.kl[i] += kl / static_cast<double>(n);
        }

        if (!grads) continue;

        // decoder output layer
        Matrix dv2 = matmul(transpose(h2[i]), dxhat);
        g.dec[i].v2.data() = std::move(dv2.data());
        g.dec[i].c2 = colsum(dxhat);

        Matrix dh2 = matmul(dxhat, transpose(dec.v2));
        for (std::size_t idx = 0; idx < dh2.data().size(); ++idx)
            dh2.data()[idx] *= 1.0 - h2[i].data()[idx] * h2[i].data()[idx];
        Matrix dv1 = matmul(transpose(z[i]), dh2);
        g.dec[i].v1.data() = std::move(dv1.data());
        g.dec[i].c1 = colsum(dh2);
        Matrix dz = matmul(dh2, transpose(dec.v1));

        // gradient into mu and clamped log-var
        Matrix dmu = dz;
        Matrix dlv(n, m.latent_dim);
        for (std::size_t idx = 0; idx < dz.data().size(); ++idx)
            dlv.data()[idx] =
                dz.data()[idx] * eps[i].data()[idx] * 0.5 * std::exp(0.5 * lv[i].data()[idx]);

        const double kl_scale = m.beta / static_cast<double>(n);
        for (std::size_t idx = 0; idx < dmu.data().size(); ++idx) {
            dmu.data()[idx] += kl_scale * mu[i].data()[idx];
            dlv.data()[idx] += 0.5 * kl_scale * (std::exp(lv[i].data()[idx]) - 1.0);
        }

        if (cross_pairs > 0.0) {
            const double w = m.lambda_cross * 2.0 * cross_scale;
            for (std::size_t other = 0; other < mods; ++other) {
                if (other == i) continue;
                for (std::size_t idx = 0; idx < dmu.data().size(); ++idx)
                    dmu.data()[idx] += w * (mu[i].data()[idx] - mu[other].data()[idx]);
            }
        }

        // clamp blocks the gradient outside the active range
        for (std::size_t idx = 0; idx < dlv.data().size(); ++idx) {
            const double raw = lv_raw[i].data()[idx];
            if (raw <= kLogVarMin || raw >= kLogVarMax) dlv.data()[idx] = 0.0;
        }

        Matrix dwmu = matmul(transpose(h1[i]), dmu);
        g.enc[i].w_mu.data() = std::move(dwmu.data());
        g.enc[i].b_mu = colsum(dmu);
        Matrix dwlv = matmul(transpose(h1[i]), dlv);
        g.enc[i].w_lv.data() = std::move(dwlv.data());
        g.enc[i].b_lv = colsum(dlv);

        Matrix dh1 = matmul(dmu, transpose(enc.w_mu));
        Matrix dh1_lv = matmul(dlv, transpose(enc.w_lv));
        for (std::size_t idx = 0; idx < dh1.data().size(); ++idx) {
            dh1.data()[idx] += dh1_lv.data()[idx];
            dh1.data()[idx] *= 1.0 - h1[i].data()[idx] * h1[i].data()[idx];
        }
        Matrix dw1 = matmul(transpose(x[i]), dh1);
        g.enc[i].w1.data() = std::move(dw1.data());
        g.enc[i].b1 = colsum(dh1);
    }

    for (std::size_t i = 0; i < mods; ++i)
        report.total += report.recon[i] + m.beta * report.kl[i];
    report.total += m.lambda_cross * report.cross;

    if (grads) *grads = std::move(g);
    return report;
}

MvaeLossReport mvae_loss(const MvaeModel& m, const std::vector<Matrix>& x, SeededRng rng) {
    check_inputs(m, x, "mvae_loss");
    return mvae_loss_eps(m, x, mvae_draw_eps(m, x[0].rows(), rng), nullptr);
}

MvaeTrainResult mvae_train(const std::vector<Matrix>& x, const MvaeConfig& cfg, SeededRng rng) {
    if (cfg.epochs == 0) throw ConfigError("mvae config: epochs must be >= 1");
    if (x.empty()) throw DataError("mvae_train: no modalities");

    std::vector<std::size_t> dims;
    for (const Matrix& xm : x) dims.push_back(xm.cols());
    MvaeModel model = MvaeModel::init(dims, cfg, rng.split("init"));
    check_inputs(model, x, "mvae_train");

    // one noise realisation per run keeps the objective deterministic
    const std::vector<Matrix> eps = mvae_draw_eps(model, x[0].rows(), rng.split("eps"));

    MvaeTrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        MvaeGradients grads;
        const MvaeLossReport report = mvae_loss_eps(model, x, eps, &grads);
        if (!std::isfinite(report.total))
            throw NumericError("mvae_train: loss diverged at epoch " + std::to_string(epoch) +
                               "; reduce lr (" + std::to_string(cfg.lr) + ")");
        result.loss_history.push_back(report.total);

        auto pb = mvae_param_blocks(model);
        auto gb = mvae_param_blocks(grads);
        for (std::size_t b = 0; b < pb.size(); ++b)
            for (std::size_t idx = 0; idx < pb[b].second; ++idx)
                pb[b].first[idx] -= cfg.lr * gb[b].first[idx];
    }

    result.final_report = mvae_loss_eps(model, x, eps, nullptr);
    result.fused_latent = mvae_fused_latent(model, x);
    result.model = std::move(model);
    return result;
}

Matrix mvae_fused_latent(const MvaeModel& m, const std::vector<Matrix>& x) {
    const auto enc = mvae_encode(m, x);
    Matrix fused(x[0].rows(), m.latent_dim);
    const double inv = 1.0 / static_cast<double>(enc.size());
    for (const auto& r : enc)
        for (std::size_t idx = 0; idx < fused.data().size(); ++idx)
            fused.data()[idx] += inv * r.mu.data()[idx];
    return fused;
}

} // namespace biomark
