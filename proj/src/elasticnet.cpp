#include "biomark/elasticnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biomark/errors.hpp"

namespace biomark {

namespace {

constexpr double kStdTol = 1e-6;

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

ElasticNetProblem::ElasticNetProblem(Matrix x_in, std::vector<double> y_in, double alpha_in,
                                     double lambda_in)
    : x(std::move(x_in)), y(std::move(y_in)), alpha(alpha_in), lambda(lambda_in) {
    if (x.rows() == 0 || x.cols() == 0)
        throw DataError("elastic net: empty design matrix");
    if (y.size() != x.rows())
        throw DataError("elastic net: y length " + std::to_string(y.size()) +
                        " != rows " + std::to_string(x.rows()));
    if (!x.all_finite()) throw DataError("elastic net: non-finite design entries");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("elastic net: non-finite response");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("elastic net: alpha must be in [0,1], got " + std::to_string(alpha));
    if (!(lambda >= 0.0))
        throw ConfigError("elastic net: lambda must be >= 0, got " + std::to_string(lambda));

    const double n = static_cast<double>(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double v = x.at(i, j);
            sum += v;
            sumsq += v * v;
        }
        if (sumsq == 0.0) continue; // inert all-zero column
        if (std::abs(sum / n) > kStdTol || std::abs(sumsq / n - 1.0) > kStdTol)
            throw DataError("elastic net: column " + std::to_string(j) +
                            " is not standardized (mean " + std::to_string(sum / n) +
                            ", mean square " + std::to_string(sumsq / n) + ")");
    }
}

double enet_objective(const ElasticNetProblem& prob, const std::vector<double>& beta,
                      double intercept) {
    const std::size_t n = prob.x.rows(), p = prob.x.cols();
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = intercept;
        const double* row = prob.x.row(i);
        for (std::size_t j = 0; j < p; ++j) pred += row[j] * beta[j];
        const double r = prob.y[i] - pred;
        sse += r * r;
    }
    double l1 = 0.0, l2 = 0.0;
    for (double b : beta) {
        l1 += std::abs(b);
        l2 += b * b;
    }
    return sse / (2.0 * static_cast<double>(n)) +
           prob.lambda * (prob.alpha * l1 + (1.0 - prob.alpha) * l2);
}

ElasticNetFit enet_fit(const ElasticNetProblem& prob, double tol, std::size_t max_iter,
                       const std::vector<double>* warm_start) {
    if (!(tol > 0.0)) throw ConfigError("elastic net: tol must be > 0");
    const std::size_t n = prob.x.rows(), p = prob.x.cols();

    ElasticNetFit fit;
    fit.intercept = mean_of(prob.y);
    if (warm_start) {
        if (warm_start->size() != p)
            throw DataError("elastic net: warm start length mismatch");
        fit.beta = *warm_start;
    } else {
        fit.beta.assign(p, 0.0);
    }

    // c_j = (1/n)||x_j||^2; exactly 1 for standardized columns, and using the
    // computed value keeps every coordinate update an exact minimizer
    std::vector<double> colsq(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = prob.x.row(i);
        for (std::size_t j = 0; j < p; ++j) colsq[j] += row[j] * row[j];
    }
    for (double& c : colsq) c /= static_cast<double>(n);

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept;
        const double* row = prob.x.row(i);
        for (std::size_t j = 0; j < p; ++j) pred += row[j] * fit.beta[j];
        resid[i] = prob.y[i] - pred;
    }

    const double l1 = prob.lambda * prob.alpha;
    const double l2 = 2.0 * prob.lambda * (1.0 - prob.alpha);

    for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (colsq[j] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += prob.x.at(i, j) * resid[i];
            const double rho = dot / static_cast<double>(n) + colsq[j] * fit.beta[j];
            const double nb = soft_threshold(rho, l1) / (colsq[j] + l2);
            const double delta = nb - fit.beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= prob.x.at(i, j) * delta;
                fit.beta[j] = nb;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        fit.n_iter = sweep + 1;
        fit.objective_path.push_back(enet_objective(prob, fit.beta, fit.intercept));
        if (max_change < tol) {
            fit.converged = true;
            break;
        }
    }
    fit.objective = fit.objective_path.empty()
                        ? enet_objective(prob, fit.beta, fit.intercept)
                        : fit.objective_path.back();
    return fit;
}

double enet_kkt_excess(const ElasticNetProblem& prob, const ElasticNetFit& fit) {
    const std::size_t n = prob.x.rows(), p = prob.x.cols();
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept;
        const double* row = prob.x.row(i);
        for (std::size_t j = 0; j < p; ++j) pred += row[j] * fit.beta[j];
        resid[i] = prob.y[i] - pred;
    }
    const double l1 = prob.lambda * prob.alpha;
    const double l2 = 2.0 * prob.lambda * (1.0 - prob.alpha);
    double worst = -l1;
    for (std::size_t j = 0; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prob.x.at(i, j) * resid[i];
        const double grad = dot / static_cast<double>(n);
        const double excess = fit.beta[j] != 0.0
                                  ? std::abs(grad - l2 * fit.beta[j]) - l1
                                  : std::abs(grad) - l1;
        worst = std::max(worst, excess);
    }
    return worst;
}

std::vector<ElasticNetFit> enet_path(const Matrix& x, const std::vector<double>& y,
                                     double alpha, const std::vector<double>& lambdas,
                                     double tol, std::size_t max_iter) {
    if (lambdas.empty()) throw ConfigError("elastic net path: empty lambda list");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > 0.0))
            throw ConfigError("elastic net path: lambdas must be positive");
        if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
            throw ConfigError("elastic net path: lambdas must be strictly descending");
    }
    ElasticNetProblem prob(x, y, alpha, lambdas.front());
    std::vector<ElasticNetFit> fits;
    fits.reserve(lambdas.size());
    for (double l : lambdas) {
        prob.lambda = l;
        const std::vector<double>* warm = fits.empty() ? nullptr : &fits.back().beta;
        fits.push_back(enet_fit(prob, tol, max_iter, warm));
    }
    return fits;
}

double enet_lambda_max(const Matrix& x, const std::vector<double>& y, double alpha) {
    if (!(alpha > 0.0))
        throw ConfigError("elastic net: lambda_max needs alpha > 0");
    if (x.rows() == 0 || x.rows() != y.size())
        throw DataError("elastic net: lambda_max shape mismatch");
    double best = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) dot += x.at(i, j) * y[i];
        best = std::max(best, std::abs(dot));
    }
    return best / (static_cast<double>(x.rows()) * alpha);
}

std::vector<double> enet_lambda_grid(double lambda_max, std::size_t n_points, double decades) {
    if (!(lambda_max > 0.0))
        throw DataError("elastic net: lambda_max must be positive to build a grid");
    if (n_points < 2) throw ConfigError("elastic net: grid needs at least 2 points");
    std::vector<double> grid(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        grid[i] = lambda_max *
                  std::pow(10.0, -decades * static_cast<double>(i) /
                                     static_cast<double>(n_points - 1));
    return grid;
}

CvResult cv_select_lambda(const Matrix& x, const std::vector<double>& y, double alpha,
                          const std::vector<double>& lambdas, std::size_t n_folds,
                          double tol, std::size_t max_iter, const std::string& rule,
                          SeededRng rng) {
    const std::size_t n = x.rows();
    if (n_folds < 2 || n_folds > n)
        throw ConfigError("cv_select_lambda: need 2 <= folds <= samples");
    if (rule != "min" && rule != "1se")
        throw ConfigError("cv_select_lambda: rule must be \"min\" or \"1se\", got " + rule);
    if (y.size() != n) throw DataError("cv_select_lambda: y length mismatch");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % n_folds;

    Matrix errs(n_folds, lambdas.size());
    for (std::size_t f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? va : tr).push_back(i);

        // restandardize with training-fold statistics
        const double nt = static_cast<double>(tr.size());
        std::vector<double> mu(x.cols(), 0.0), sd(x.cols(), 0.0);
        for (std::size_t i : tr)
            for (std::size_t j = 0; j < x.cols(); ++j) mu[j] += x.at(i, j);
        for (double& v : mu) v /= nt;
        for (std::size_t i : tr)
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const double d = x.at(i, j) - mu[j];
                sd[j] += d * d;
            }
        for (double& v : sd) v = std::sqrt(v / nt);

        Matrix xtr(tr.size(), x.cols());
        std::vector<double> ytr(tr.size());
        for (std::size_t r = 0; r < tr.size(); ++r) {
            ytr[r] = y[tr[r]];
            for (std::size_t j = 0; j < x.cols(); ++j)
                xtr.at(r, j) = sd[j] > 0.0 ? (x.at(tr[r], j) - mu[j]) / sd[j] : 0.0;
        }

        const auto fits = enet_path(xtr, ytr, alpha, lambdas, tol, max_iter);
        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            double sse = 0.0;
            for (std::size_t i : va) {
                double pred = fits[k].intercept;
                for (std::size_t j = 0; j < x.cols(); ++j) {
                    const double xi = sd[j] > 0.0 ? (x.at(i, j) - mu[j]) / sd[j] : 0.0;
                    pred += xi * fits[k].beta[j];
                }
                const double r = y[i] - pred;
                sse += r * r;
            }
            errs.at(f, k) = sse / static_cast<double>(va.size());
        }
    }

    CvResult cv;
    cv.lambdas = lambdas;
    cv.rule = rule;
    cv.mean_error.resize(lambdas.size());
    cv.se_error.resize(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        double m = 0.0;
        for (std::size_t f = 0; f < n_folds; ++f) m += errs.at(f, k);
        m /= static_cast<double>(n_folds);
        double ss = 0.0;
        for (std::size_t f = 0; f < n_folds; ++f) {
            const double d = errs.at(f, k) - m;
            ss += d * d;
        }
        cv.mean_error[k] = m;
        cv.se_error[k] = std::sqrt(ss / static_cast<double>(n_folds - 1)) /
                         std::sqrt(static_cast<double>(n_folds));
    }

    // descending lambdas: the first minimum favors the stronger penalty on ties
    std::size_t min_idx = 0;
    for (std::size_t k = 1; k < lambdas.size(); ++k)
        if (cv.mean_error[k] < cv.mean_error[min_idx]) min_idx = k;
    cv.lambda_min = lambdas[min_idx];

    const double cutoff = cv.mean_error[min_idx] + cv.se_error[min_idx];
    std::size_t idx_1se = min_idx;
    for (std::size_t k = 0; k <= min_idx; ++k)
        if (cv.mean_error[k] <= cutoff) {
            idx_1se = k;
            break;
        }
    cv.lambda_1se = lambdas[idx_1se];
    cv.chosen = rule == "min" ? cv.lambda_min : cv.lambda_1se;
    return cv;
}

} // namespace biomark
