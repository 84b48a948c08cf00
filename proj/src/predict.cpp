#include "pcetl/predict.hpp"

#include <cmath>
#include <numbers>

#include "pcetl/errors.hpp"

namespace pcetl {

namespace {

struct PushedFactor {
    Vector mean;
    Matrix AL;  // A L, with Sigma = L L^T
};

PushedFactor push(const GaussianDist& posterior, const BasisSpec& basis, const PointSet& points, double noise_var) {
    if (static_cast<std::size_t>(posterior.dimension()) != basis.size())
        throw DomainError("pushforward: posterior dimension does not match the basis size");
    if (!(noise_var >= 0.0)) throw DomainError("pushforward: noise variance must be non-negative");
    const Matrix A = vandermonde(basis, points);
    return {A * posterior.mean(), A * posterior.cholesky_lower()};
}

Vector marginal_variances(const Matrix& AL, double noise_var) {
    return (AL.rowwise().squaredNorm().array() + noise_var).matrix();
}

LpfpScore score(const Vector& mean, const Vector& var, Eigen::Ref<const Vector> y_obs) {
    if (y_obs.size() != mean.size()) throw DomainError("lpfp: observation count differs from prediction");
    double total = 0.0;
    bool floored = false;
    for (Eigen::Index i = 0; i < y_obs.size(); ++i) {
        double v = var[i];
        if (!(v > 0.0)) throw NumericError("lpfp: non-positive marginal variance");
        if (v < kVarianceFloor) {
            v = kVarianceFloor;
            floored = true;
        }
        const double r = y_obs[i] - mean[i];
        total += -0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
    }
    return {total, floored};
}

}  // namespace

PfpPrediction pushforward(const GaussianDist& posterior, const BasisSpec& basis, const PointSet& points,
                          double noise_var) {
    PushedFactor f = push(posterior, basis, points, noise_var);
    Matrix cov = f.AL * f.AL.transpose();
    symmetrize(cov);
    cov.diagonal() = marginal_variances(f.AL, noise_var);
    return {points, std::move(f.mean), std::move(cov)};
}

PfpMarginals pfp_marginals(const GaussianDist& posterior, const BasisSpec& basis, const PointSet& points,
                           double noise_var) {
    PushedFactor f = push(posterior, basis, points, noise_var);
    return {std::move(f.mean), marginal_variances(f.AL, noise_var)};
}

LpfpScore lpfp_score(const PfpPrediction& pred, Eigen::Ref<const Vector> y_obs) {
    return score(pred.mean, pred.cov.diagonal(), y_obs);
}

LpfpScore lpfp_score(const PfpMarginals& pred, Eigen::Ref<const Vector> y_obs) {
    return score(pred.mean, pred.var, y_obs);
}

double lpfp(const PfpPrediction& pred, Eigen::Ref<const Vector> y_obs) { return lpfp_score(pred, y_obs).value; }

double rmse(Eigen::Ref<const Vector> posterior_mean, const BasisSpec& basis, const PointSet& points,
            Eigen::Ref<const Vector> y_true) {
    if (points.rows() == 0) throw DomainError("rmse: empty point list");
    if (points.rows() != y_true.size()) throw DomainError("rmse: point count differs from y_true");
    if (static_cast<std::size_t>(posterior_mean.size()) != basis.size())
        throw DomainError("rmse: coefficient count does not match the basis");
    const Vector residual = vandermonde(basis, points) * posterior_mean - y_true;
    return std::sqrt(residual.squaredNorm() / static_cast<double>(points.rows()));
}

Matrix correlation_matrix(const GaussianDist& dist) {
    const Vector inv_sd = dist.cov().diagonal().cwiseSqrt().cwiseInverse();
    Matrix R = inv_sd.asDiagonal() * dist.cov() * inv_sd.asDiagonal();
    symmetrize(R);
    R.diagonal().setOnes();
    return R.cwiseMax(-1.0).cwiseMin(1.0);
}

double mean_abs_off_diagonal(const Matrix& correlation) {
    const Eigen::Index p = correlation.rows();
    if (p < 2) return 0.0;
    const double total = correlation.cwiseAbs().sum() - correlation.diagonal().cwiseAbs().sum();
    return total / static_cast<double>(p * (p - 1));
}

}  // namespace pcetl
