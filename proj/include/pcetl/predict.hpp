#pragma once

#include "pcetl/gaussian.hpp"

namespace pcetl {

/// Marginal variances below this are clamped before taking logs.
inline constexpr double kVarianceFloor = 1e-300;

/// Pushed-forward posterior: the Gaussian over surrogate predictions at a set
/// of points, mean A mu and covariance A Sigma A^T (+ optional noise).
struct PfpPrediction {
    PointSet points;
    Vector mean;
    Matrix cov;
};

/// `noise_var` is added to the diagonal; 0 gives the bare pushforward.
PfpPrediction pushforward(const GaussianDist& posterior, const BasisSpec& basis, const PointSet& points,
                          double noise_var = 0.0);

/// Per-point mean and variance of the PFP without the off-diagonal block.
/// Bit-identical to the mean and diagonal of pushforward().
struct PfpMarginals {
    Vector mean;
    Vector var;
};
PfpMarginals pfp_marginals(const GaussianDist& posterior, const BasisSpec& basis, const PointSet& points,
                           double noise_var = 0.0);

struct LpfpScore {
    double value;
    /// True when at least one marginal variance hit kVarianceFloor.
    bool floored;
};

/// Sum over points of log N(y_i; mean_i, cov_ii).
LpfpScore lpfp_score(const PfpPrediction& pred, Eigen::Ref<const Vector> y_obs);
LpfpScore lpfp_score(const PfpMarginals& pred, Eigen::Ref<const Vector> y_obs);
double lpfp(const PfpPrediction& pred, Eigen::Ref<const Vector> y_obs);

/// Root mean squared error of the mean-coefficient surrogate.
double rmse(Eigen::Ref<const Vector> posterior_mean, const BasisSpec& basis, const PointSet& points,
            Eigen::Ref<const Vector> y_true);

/// R = D^-1 Sigma D^-1, D = sqrt(diag Sigma).
Matrix correlation_matrix(const GaussianDist& dist);

/// Mean absolute off-diagonal entry of a correlation matrix (0 for 1x1).
double mean_abs_off_diagonal(const Matrix& correlation);

}  // namespace pcetl
