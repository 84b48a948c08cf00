#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcetl/gaussian.hpp"

namespace pcetl {

/// Criteria for choosing the tempering exponent. Every objective is
/// expressed so that larger is better.
enum class Objective {
    EDF,  ///< expected data fit, E_{pi_p}[log pi_T]
    KLD,  ///< -KL(pi_p(.|beta) || pi_S(.|beta))
    ME,   ///< log model evidence, log int pi_T pi_S(.|beta)
    DS,   ///< Dice similarity between pi_S(.|beta) and pi_T
};

/// Case-insensitive. Throws DomainError for unknown names.
Objective parse_objective(std::string_view name);
std::string_view to_string(Objective objective);

inline constexpr double kDefaultBetaFloor = 1e-6;

class TransferProblem {
public:
    TransferProblem(GaussianDist source, GaussianDist target, Objective objective,
                    double beta_floor = kDefaultBetaFloor);

    const GaussianDist& source() const { return source_; }
    const GaussianDist& target() const { return target_; }
    Objective objective() const { return objective_; }
    double beta_floor() const { return beta_floor_; }
    /// Left end of the admissible beta range: 0 for EDF, beta_floor otherwise.
    double beta_min() const { return objective_ == Objective::EDF ? 0.0 : beta_floor_; }

private:
    GaussianDist source_;
    GaussianDist target_;
    Objective objective_;
    double beta_floor_;
};

/// pi_S^beta for a Gaussian: same mean, covariance / beta. beta in (0, 1].
GaussianDist temper(const GaussianDist& source, double beta);

/// Target likelihood fused with the tempered source; the target itself at
/// beta = 0.
GaussianDist tempered_posterior(const TransferProblem& problem, double beta);

/// KL(p || q) between Gaussians of equal dimension.
double kl_divergence(const GaussianDist& p, const GaussianDist& q);
/// log of int p q = log N(mu_p; mu_q, Sigma_p + Sigma_q).
double log_overlap(const GaussianDist& p, const GaussianDist& q);

/// Objective at one beta, evaluated from its definition with Cholesky
/// solves. This is the reference path; optimize_beta() uses
/// SpectralObjective for the scan.
double objective_value(const TransferProblem& problem, double beta);

/// The same objective after a one-off simultaneous diagonalization of the
/// target and source precisions. Each evaluation is then O(p).
class SpectralObjective {
public:
    explicit SpectralObjective(const TransferProblem& problem);

    double operator()(double beta) const;
    Objective objective() const { return objective_; }

private:
    Objective objective_;
    double beta_min_;
    Vector lambda_;     // generalized eigenvalues of (P_S, P_T)
    Vector eta_target_; // target mean in whitened coordinates
    Vector eta_source_;
    double log_det_target_cov_;
    double log_det_source_cov_;
};

struct ScanOptions {
    std::size_t scan_points = 1001;
    double tolerance = 1e-6;
};

struct BetaResult {
    double beta_star;
    double objective_at_star;
    std::vector<double> curve_beta;
    std::vector<double> curve_value;
    GaussianDist tempered_posterior;
};

/// Dense scan of the admissible beta range followed by golden-section
/// refinement around the best scan point. Ties go to the larger beta.
BetaResult optimize_beta(const TransferProblem& problem, const ScanOptions& options = {});

}  // namespace pcetl
