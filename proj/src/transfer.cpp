#include "pcetl/transfer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pcetl/errors.hpp"

namespace pcetl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

void check_beta(const TransferProblem& problem, double beta, const char* where) {
    if (!(beta >= problem.beta_min() && beta <= 1.0)) {
        std::ostringstream msg;
        msg << where << ": beta = " << beta << " outside [" << problem.beta_min() << ", 1] for "
            << to_string(problem.objective());
        throw DomainError(msg.str());
    }
}

// log(2 exp(a) / (exp(b) + exp(c))) without overflow.
double dice_from_logs(double log_cross, double log_self_s, double log_self_t) {
    const double m = std::max(log_self_s, log_self_t);
    const double log_den = m + std::log(std::exp(log_self_s - m) + std::exp(log_self_t - m));
    return std::exp(std::log(2.0) + log_cross - log_den);
}

}  // namespace

Objective parse_objective(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "EDF") return Objective::EDF;
    if (upper == "KLD") return Objective::KLD;
    if (upper == "ME") return Objective::ME;
    if (upper == "DS") return Objective::DS;
    throw DomainError("unknown objective '" + std::string(name) + "' (expected EDF, KLD, ME or DS)");
}

std::string_view to_string(Objective objective) {
    switch (objective) {
        case Objective::EDF: return "EDF";
        case Objective::KLD: return "KLD";
        case Objective::ME: return "ME";
        case Objective::DS: return "DS";
    }
    return "?";
}

TransferProblem::TransferProblem(GaussianDist source, GaussianDist target, Objective objective, double beta_floor)
    : source_(std::move(source)), target_(std::move(target)), objective_(objective), beta_floor_(beta_floor) {
    if (source_.dimension() != target_.dimension())
        throw DomainError("TransferProblem: source and target dimensions differ");
    if (!(beta_floor_ > 0.0 && beta_floor_ < 1.0)) throw DomainError("TransferProblem: beta_floor must lie in (0, 1)");
}

GaussianDist temper(const GaussianDist& source, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        std::ostringstream msg;
        msg << "temper: beta = " << beta << " outside (0, 1]";
        throw DomainError(msg.str());
    }
    if (beta == 1.0) return source;
    return {source.mean(), source.cov() / beta};
}

GaussianDist tempered_posterior(const TransferProblem& problem, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        std::ostringstream msg;
        msg << "tempered_posterior: beta = " << beta << " outside [0, 1]";
        throw DomainError(msg.str());
    }
    if (beta == 0.0) return fuse_with_flat_prior(problem.target());
    return fuse(temper(problem.source(), beta), problem.target());
}

double kl_divergence(const GaussianDist& p, const GaussianDist& q) {
    if (p.dimension() != q.dimension()) throw DomainError("kl_divergence: dimension mismatch");
    const auto lq = q.cholesky_lower().triangularView<Eigen::Lower>();
    const double trace = lq.solve(p.cholesky_lower()).squaredNorm();
    const double quad = lq.solve(q.mean() - p.mean()).squaredNorm();
    const double k = static_cast<double>(p.dimension());
    return 0.5 * (trace + quad - k + q.log_det_cov() - p.log_det_cov());
}

double log_overlap(const GaussianDist& p, const GaussianDist& q) {
    if (p.dimension() != q.dimension()) throw DomainError("log_overlap: dimension mismatch");
    Matrix sum = p.cov() + q.cov();
    symmetrize(sum);
    return log_pdf(GaussianDist(q.mean(), std::move(sum)), p.mean());
}

double objective_value(const TransferProblem& problem, double beta) {
    check_beta(problem, beta, "objective_value");
    const GaussianDist& target = problem.target();
    switch (problem.objective()) {
        case Objective::EDF: {
            const GaussianDist post = tempered_posterior(problem, beta);
            const auto lt = target.cholesky_lower().triangularView<Eigen::Lower>();
            const double quad = lt.solve(post.mean() - target.mean()).squaredNorm();
            const double trace = lt.solve(post.cholesky_lower()).squaredNorm();
            const double k = static_cast<double>(target.dimension());
            return -0.5 * (quad + trace + k * kLog2Pi + target.log_det_cov());
        }
        case Objective::KLD: {
            const GaussianDist post = tempered_posterior(problem, beta);
            return -kl_divergence(post, temper(problem.source(), beta));
        }
        case Objective::ME: return log_overlap(target, temper(problem.source(), beta));
        case Objective::DS: {
            const GaussianDist tempered = temper(problem.source(), beta);
            return dice_from_logs(log_overlap(tempered, target), log_overlap(tempered, tempered),
                                  log_overlap(target, target));
        }
    }
    throw DomainError("objective_value: unknown objective");
}

SpectralObjective::SpectralObjective(const TransferProblem& problem)
    : objective_(problem.objective()), beta_min_(problem.beta_min()) {
    // Whiten the target precision P_T = L L^T, then diagonalize the whitened
    // source precision L^-1 P_S L^-T = U diag(lambda) U^T. In the coordinates
    // eta = U^T L^T theta the target has identity precision and the source
    // has precision diag(lambda).
    const Matrix target_prec = problem.target().precision();
    const Matrix source_prec = problem.source().precision();
    Eigen::LLT<Matrix> llt(target_prec);
    if (llt.info() != Eigen::Success) throw NumericError("SpectralObjective: target precision is not SPD");
    const Matrix L = llt.matrixL();
    const auto Lt = L.triangularView<Eigen::Lower>();
    Matrix whitened = Lt.solve(Lt.solve(source_prec).transpose());
    symmetrize(whitened);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(whitened);
    if (eig.info() != Eigen::Success) throw NumericError("SpectralObjective: eigen decomposition failed");
    lambda_ = eig.eigenvalues();
    if (!(lambda_.array() > 0.0).all())
        throw NumericError("SpectralObjective: source precision is not positive definite after whitening");
    const Matrix& U = eig.eigenvectors();
    eta_target_ = U.transpose() * (L.transpose() * problem.target().mean());
    eta_source_ = U.transpose() * (L.transpose() * problem.source().mean());
    log_det_target_cov_ = -2.0 * L.diagonal().array().log().sum();
    log_det_source_cov_ = log_det_target_cov_ - lambda_.array().log().sum();
}

double SpectralObjective::operator()(double beta) const {
    if (!(beta >= beta_min_ && beta <= 1.0)) {
        std::ostringstream msg;
        msg << "SpectralObjective: beta = " << beta << " outside [" << beta_min_ << ", 1]";
        throw DomainError(msg.str());
    }
    const double k = static_cast<double>(lambda_.size());
    const auto bl = (beta * lambda_).array();
    const auto gap = (eta_source_ - eta_target_).array();
    switch (objective_) {
        case Objective::EDF: {
            const double quad = (bl * gap / (1.0 + bl)).square().sum();
            const double trace = (1.0 + bl).inverse().sum();
            return -0.5 * (quad + trace + k * kLog2Pi + log_det_target_cov_);
        }
        case Objective::KLD: {
            const double trace = (bl / (1.0 + bl)).sum();
            const double quad = (bl * (gap / (1.0 + bl)).square()).sum();
            const double log_ratio = ((1.0 + bl) / bl).log().sum();
            return -0.5 * (trace + quad - k + log_ratio);
        }
        case Objective::ME:
        case Objective::DS: {
            const auto inflate = 1.0 + 1.0 / bl;
            const double log_cross =
                -0.5 * (k * kLog2Pi + log_det_target_cov_ + inflate.log().sum() + (gap.square() / inflate).sum());
            if (objective_ == Objective::ME) return log_cross;
            const double log_self_s =
                -0.5 * (k * std::log(4.0 * std::numbers::pi / beta) + log_det_source_cov_);
            const double log_self_t = -0.5 * (k * std::log(4.0 * std::numbers::pi) + log_det_target_cov_);
            return dice_from_logs(log_cross, log_self_s, log_self_t);
        }
    }
    throw DomainError("SpectralObjective: unknown objective");
}

BetaResult optimize_beta(const TransferProblem& problem, const ScanOptions& options) {
    if (options.scan_points < 2) throw DomainError("optimize_beta: need at least 2 scan points");
    const SpectralObjective f(problem);
    const double lo = problem.beta_min();
    const std::size_t n = options.scan_points;

    std::vector<double> betas(n), values(n);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = i + 1 == n ? 1.0 : lo + (1.0 - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double v = f(beta);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "optimize_beta: " << to_string(problem.objective()) << " is not finite at beta = " << beta;
            throw NumericError(msg.str());
        }
        betas[i] = beta;
        values[i] = v;
        if (v >= values[best]) best = i;
    }

    // Golden-section refinement inside the neighbours of the best scan point.
    double a = betas[best == 0 ? 0 : best - 1];
    double b = betas[best + 1 == n ? n - 1 : best + 1];
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > options.tolerance) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double beta_star = betas[best];
    double value_star = values[best];
    const double refined = fc > fd ? c : d;
    const double refined_value = std::max(fc, fd);
    if (std::isfinite(refined_value) &&
        (refined_value > value_star || (refined_value == value_star && refined > beta_star))) {
        beta_star = refined;
        value_star = refined_value;
    }

    return BetaResult{beta_star, value_star, std::move(betas), std::move(values),
                      tempered_posterior(problem, beta_star)};
}

}  // namespace pcetl
