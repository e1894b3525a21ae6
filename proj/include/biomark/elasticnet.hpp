#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

/// Squared-error elastic net with the un-halved ridge term:
///   (1/(2n))·||y - b - X beta||^2 + lambda·(alpha·||beta||_1 + (1-alpha)·||beta||_2^2)
/// Note the coordinate-update denominator is 1 + 2·lambda·(1-alpha), not the
/// 1 + lambda·(1-alpha) most solvers use; the ridge term here is not halved.
struct ElasticNetProblem {
    Matrix x;              // n x p, standardized columns
    std::vector<double> y; // length n
    double alpha = 0.5;    // 1 = lasso, 0 = ridge
    double lambda = 0.0;

    /// Validates shapes, finiteness, alpha in [0,1], lambda >= 0, and that
    /// every column has mean 0 and mean square 1 within 1e-6. Columns that
    /// are exactly all-zero are allowed (they arise when a cross-validation
    /// fold standardizes away a constant column) and keep coefficient zero.
    ElasticNetProblem(Matrix x, std::vector<double> y, double alpha, double lambda);
};

struct ElasticNetFit {
    std::vector<double> beta;
    double intercept = 0.0;
    std::size_t n_iter = 0; // full sweeps performed
    bool converged = false;
    double objective = 0.0;
    std::vector<double> objective_path; // objective after each sweep
};

double enet_objective(const ElasticNetProblem& prob, const std::vector<double>& beta,
                      double intercept);

/// Cyclic coordinate descent. The intercept is fixed at mean(y) (optimal for
/// centered columns and never penalized). Convergence: max coefficient change
/// within a sweep < tol. Hitting max_iter returns converged = false.
ElasticNetFit enet_fit(const ElasticNetProblem& prob, double tol, std::size_t max_iter,
                       const std::vector<double>* warm_start = nullptr);

/// Worst Karush-Kuhn-Tucker excess over coordinates at (beta, intercept):
///   nonzero beta_j:  |(1/n)·x_j'r - 2·lambda·(1-alpha)·beta_j| - lambda·alpha
///   zero beta_j:     |(1/n)·x_j'r| - lambda·alpha
/// At an exact optimum this is <= 0 everywhere.
double enet_kkt_excess(const ElasticNetProblem& prob, const ElasticNetFit& fit);

/// Warm-started fits along a strictly descending positive lambda list.
std::vector<ElasticNetFit> enet_path(const Matrix& x, const std::vector<double>& y,
                                     double alpha, const std::vector<double>& lambdas,
                                     double tol, std::size_t max_iter);

/// Smallest lambda at which every coefficient is zero: max_j |x_j'y| / (n·alpha).
double enet_lambda_max(const Matrix& x, const std::vector<double>& y, double alpha);

/// Log-spaced descending grid from lambda_max down the given number of decades.
std::vector<double> enet_lambda_grid(double lambda_max, std::size_t n_points = 50,
                                     double decades = 4.0);

struct CvResult {
    std::vector<double> lambdas; // descending, as supplied
    std::vector<double> mean_error;
    std::vector<double> se_error;
    double lambda_min = 0.0; // smallest mean validation error
    double lambda_1se = 0.0; // largest lambda within one SE of the minimum
    double chosen = 0.0;
    std::string rule;
};

/// K-fold cross-validated squared error over the lambda grid. Folds are
/// assigned by a seeded shuffle; each training fold is restandardized so the
/// per-fold problems satisfy the column invariants, and the held-out fold is
/// scaled with the training fold's statistics. rule is "min" or "1se".
CvResult cv_select_lambda(const Matrix& x, const std::vector<double>& y, double alpha,
                          const std::vector<double>& lambdas, std::size_t n_folds,
                          double tol, std::size_t max_iter, const std::string& rule,
                          SeededRng rng);

} // namespace biomark
