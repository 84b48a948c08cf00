#pragma once

#include <optional>

#include "pcetl/basis.hpp"

namespace pcetl {

/// Multivariate normal over PCE coefficients. Immutable; the Cholesky factor
/// of the covariance is computed once at construction, which is also where
/// symmetry and positive definiteness are enforced.
class GaussianDist {
public:
    GaussianDist(Vector mean, Matrix cov);

    Eigen::Index dimension() const { return mean_.size(); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }
    /// Lower-triangular L with cov = L L^T.
    const Matrix& cholesky_lower() const { return chol_; }

    Matrix precision() const;
    double log_det_cov() const;

private:
    Vector mean_;
    Matrix cov_;
    Matrix chol_;
};

/// Regression data set for one calibration: y_k = P_d(x_k, theta) + eps_k.
/// An empty noise_var means "estimate from the least-squares residual".
class CalibrationTask {
public:
    CalibrationTask(BasisSpec basis, PointSet X, Vector Y, std::optional<double> noise_var = {});

    const BasisSpec& basis() const { return basis_; }
    const PointSet& X() const { return X_; }
    const Vector& Y() const { return Y_; }
    const std::optional<double>& noise_var() const { return noise_var_; }

private:
    BasisSpec basis_;
    PointSet X_;
    Vector Y_;
    std::optional<double> noise_var_;
};

struct LikelihoodOptions {
    /// Largest accepted condition number of A^T A.
    double condition_ceiling = 1e12;
    /// Ridge added to A^T A. Off unless asked for.
    double jitter = 0.0;
    /// Lower bound for an estimated noise variance.
    double noise_floor = 1e-12;
};

struct LikelihoodFit {
    GaussianDist dist;
    double condition_number;  // of A^T A (after jitter, if any)
    double residual_rmse;     // sqrt(RSS / N) of the mean fit
    double noise_var;         // gamma^2 actually used
    bool noise_estimated;
};

/// Gaussian likelihood of the coefficients, mean (A^T A)^-1 A^T Y and
/// covariance gamma^2 (A^T A)^-1, assembled from a QR factorization of A.
LikelihoodFit fit_likelihood(const CalibrationTask& task, const LikelihoodOptions& options = {});
GaussianDist likelihood(const CalibrationTask& task, const LikelihoodOptions& options = {});

/// Conjugate update: precisions add, means combine precision-weighted.
GaussianDist fuse(const GaussianDist& prior, const GaussianDist& lik);
/// The zero-prior-precision limit of fuse(): returns the likelihood.
GaussianDist fuse_with_flat_prior(const GaussianDist& lik);

double log_pdf(const GaussianDist& dist, Eigen::Ref<const Vector> theta);

/// Re-symmetrize in place: 0.5 (M + M^T).
void symmetrize(Matrix& m);

}  // namespace pcetl
