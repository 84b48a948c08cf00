#include "pcetl/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "pcetl/errors.hpp"

namespace pcetl {

void symmetrize(Matrix& m) {
    const Matrix t = m.transpose();
    m = 0.5 * (m + t);
}

GaussianDist::GaussianDist(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != cov_.cols()) throw DomainError("GaussianDist: covariance is not square");
    if (cov_.rows() != mean_.size()) throw DomainError("GaussianDist: mean/covariance size mismatch");
    if (mean_.size() == 0) throw DomainError("GaussianDist: empty distribution");
    if (!mean_.allFinite() || !cov_.allFinite()) throw NumericError("GaussianDist: non-finite entries");
    const double scale = cov_.cwiseAbs().maxCoeff();
    const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        std::ostringstream msg;
        msg << "GaussianDist: covariance asymmetry " << asym << " exceeds 1e-12 relative";
        throw NumericError(msg.str());
    }
    symmetrize(cov_);
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) throw NumericError("GaussianDist: covariance is not positive definite");
    chol_ = llt.matrixL();
    if (!(chol_.diagonal().array() > 0.0).all() || !chol_.allFinite())
        throw NumericError("GaussianDist: covariance is not positive definite");
}

Matrix GaussianDist::precision() const {
    const Eigen::Index p = dimension();
    Matrix linv = chol_.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
    Matrix prec = linv.transpose() * linv;
    symmetrize(prec);
    return prec;
}

double GaussianDist::log_det_cov() const { return 2.0 * chol_.diagonal().array().log().sum(); }

CalibrationTask::CalibrationTask(BasisSpec basis, PointSet X, Vector Y, std::optional<double> noise_var)
    : basis_(std::move(basis)), X_(std::move(X)), Y_(std::move(Y)), noise_var_(noise_var) {
    if (X_.rows() != Y_.size()) throw DomainError("CalibrationTask: |X| differs from |Y|");
    if (static_cast<std::size_t>(X_.cols()) != basis_.dimension())
        throw DomainError("CalibrationTask: point dimension does not match the basis");
    if (static_cast<std::size_t>(X_.rows()) < basis_.size()) {
        std::ostringstream msg;
        msg << "CalibrationTask: under-determined, " << X_.rows() << " points for " << basis_.size()
            << " coefficients";
        throw CalibrationError(msg.str());
    }
    if (noise_var_ && !(*noise_var_ > 0.0 && std::isfinite(*noise_var_)))
        throw DomainError("CalibrationTask: noise variance must be positive");
    if (!Y_.allFinite()) throw DomainError("CalibrationTask: non-finite outputs");
}

namespace {

[[noreturn]] void throw_conditioning(double cond, double ceiling) {
    std::ostringstream msg;
    msg << "likelihood: design matrix is ill-conditioned, cond(A^T A) = " << cond << " exceeds ceiling "
        << ceiling;
    throw CalibrationError(msg.str());
}

double condition_from_singular_values(const Vector& s) {
    const double smax = s.maxCoeff();
    const double smin = s.minCoeff();
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    const double ratio = smax / smin;
    return ratio * ratio;
}

}  // namespace

LikelihoodFit fit_likelihood(const CalibrationTask& task, const LikelihoodOptions& options) {
    const Matrix A = vandermonde(task.basis(), task.X());
    const Eigen::Index n = A.rows();
    const Eigen::Index p = A.cols();

    Vector mean;
    Matrix unit_cov;  // (A^T A)^-1
    double cond = 0.0;
    if (options.jitter > 0.0) {
        Matrix gram = A.transpose() * A;
        gram.diagonal().array() += options.jitter;
        symmetrize(gram);
        cond = condition_from_singular_values(Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                                                  .eigenvalues()
                                                  .cwiseAbs()
                                                  .cwiseSqrt());
        if (!(cond <= options.condition_ceiling)) throw_conditioning(cond, options.condition_ceiling);
        Eigen::LLT<Matrix> llt(gram);
        if (llt.info() != Eigen::Success) throw CalibrationError("likelihood: jittered normal equations are not SPD");
        mean = llt.solve(A.transpose() * task.Y());
        unit_cov = llt.solve(Matrix::Identity(p, p));
    } else {
        Eigen::HouseholderQR<Matrix> qr(A);
        const Matrix R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
        // Singular values of R are those of A.
        cond = condition_from_singular_values(Eigen::JacobiSVD<Matrix>(R).singularValues());
        if (!(cond <= options.condition_ceiling)) throw_conditioning(cond, options.condition_ceiling);
        mean = qr.solve(task.Y());
        const Matrix rinv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
        unit_cov = rinv * rinv.transpose();
    }
    symmetrize(unit_cov);

    const Vector residual = task.Y() - A * mean;
    const double rss = residual.squaredNorm();
    const double residual_rmse = std::sqrt(rss / static_cast<double>(n));

    double noise_var = 0.0;
    bool estimated = false;
    if (task.noise_var()) {
        noise_var = *task.noise_var();
    } else {
        estimated = true;
        const double dof = static_cast<double>(n - p);
        noise_var = dof > 0.0 ? rss / dof : 0.0;
        noise_var = std::max(noise_var, options.noise_floor);
    }

    return LikelihoodFit{GaussianDist(std::move(mean), noise_var * unit_cov), cond, residual_rmse, noise_var,
                         estimated};
}

GaussianDist likelihood(const CalibrationTask& task, const LikelihoodOptions& options) {
    return fit_likelihood(task, options).dist;
}

GaussianDist fuse(const GaussianDist& prior, const GaussianDist& lik) {
    if (prior.dimension() != lik.dimension()) throw DomainError("fuse: dimension mismatch");
    const Matrix prior_prec = prior.precision();
    const Matrix lik_prec = lik.precision();
    Matrix prec = prior_prec + lik_prec;
    Eigen::LLT<Matrix> llt(prec);
    if (llt.info() != Eigen::Success) throw NumericError("fuse: summed precision is not positive definite");
    const Vector info = prior_prec * prior.mean() + lik_prec * lik.mean();
    Vector mean = llt.solve(info);
    Matrix cov = llt.solve(Matrix::Identity(prec.rows(), prec.cols()));
    symmetrize(cov);
    return {std::move(mean), std::move(cov)};
}

GaussianDist fuse_with_flat_prior(const GaussianDist& lik) { return lik; }

double log_pdf(const GaussianDist& dist, Eigen::Ref<const Vector> theta) {
    if (theta.size() != dist.dimension()) throw DomainError("log_pdf: dimension mismatch");
    const Vector z = dist.cholesky_lower().triangularView<Eigen::Lower>().solve(theta - dist.mean());
    const double k = static_cast<double>(dist.dimension());
    return -0.5 * (k * std::log(2.0 * std::numbers::pi) + dist.log_det_cov() + z.squaredNorm());
}

}  // namespace pcetl
