// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Indented lines carry the numbers behind each verdict.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pcetl/experiment.hpp"
#include "pcetl/io.hpp"
#include "pcetl/predict.hpp"
#include "pcetl/transfer.hpp"

using namespace pcetl;

namespace {

struct Check {
    bool ok = true;
    void require(bool condition, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Check::require(bool condition, const char* fmt, ...) {
    std::printf("    [%s] ", condition ? "ok" : "FAILED");
    va_list args;
    va_start(args, fmt);
    std::vprintf(fmt, args);
    va_end(args);
    std::printf("\n");
    ok = ok && condition;
}

int g_failures = 0;

void criterion(int number, const char* title, double limit_seconds, const std::function<void(Check&)>& body) {
    std::printf("criterion %d: %s\n", number, title);
    std::fflush(stdout);
    Check check;
    const auto start = std::chrono::steady_clock::now();
    body(check);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.require(seconds < limit_seconds, "runtime %.1f s < %.0f s", seconds, limit_seconds);
    std::printf("%s criterion %d: %s\n", check.ok ? "PASS" : "FAIL", number, title);
    std::fflush(stdout);
    if (!check.ok) ++g_failures;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::vector<double> beta_means(const SweepResult& s) {
    std::vector<double> out;
    for (const ShiftAggregate& a : s.rows) out.push_back(a.beta.mean);
    return out;
}

std::string sweep_csv(const ExperimentConfig& config, const SweepResult& s) {
    const Json j = config_to_json(resolve_frame(config));
    std::ostringstream out;
    std::vector<TrialRecord> all;
    for (const auto& shift : s.trials) all.insert(all.end(), shift.begin(), shift.end());
    write_trials_csv(out, j, all);
    write_aggregate_csv(out, j, s.rows);
    return out.str();
}

void print_rows(const SweepResult& s) {
    for (const ShiftAggregate& a : s.rows)
        std::printf("      shift %-5g ok %3zu  beta* %.3f  lpfp(0,*,1) %9.3f %9.3f %9.3f  rmse(0,*,1) %.4f %.4f %.4f\n",
                    a.shift, a.n_ok, a.beta.mean, a.lpfp[0].mean, a.lpfp[1].mean, a.lpfp[2].mean, a.rmse[0].mean,
                    a.rmse[1].mean, a.rmse[2].mean);
}

// Sweeps shared between criteria 3-7.
struct Runs {
    std::vector<std::pair<ExperimentConfig, SweepResult>> sweeps;
};

}  // namespace

int main() {
    Runs runs;

    criterion(1, "conjugacy and tempering exactness", 10.0, [](Check& c) {
        std::mt19937_64 rng(101);
        double worst_prec = 0.0, worst_corr = 0.0;
        bool mean_exact = true, full_exact = true;
        for (const Eigen::Index p : {2, 10, 56}) {
            for (int rep = 0; rep < 10; ++rep) {
                const GaussianDist source = oracle::random_gaussian(p, rng);
                const GaussianDist target = oracle::random_gaussian(p, rng);
                const TransferProblem problem(source, target, Objective::EDF);
                const Matrix ps = Eigen::FullPivLU<Matrix>(source.cov()).inverse();
                const Matrix pt = Eigen::FullPivLU<Matrix>(target.cov()).inverse();
                for (const double beta : {0.0, 0.25, 0.5, 1.0}) {
                    const Matrix post = Eigen::FullPivLU<Matrix>(tempered_posterior(problem, beta).cov()).inverse();
                    const Matrix expected = pt + beta * ps;
                    worst_prec = std::max(worst_prec, (post - expected).cwiseAbs().maxCoeff() /
                                                          expected.cwiseAbs().maxCoeff());
                }
                for (const double beta : {0.1, 0.5, 0.9}) {
                    const GaussianDist t = temper(source, beta);
                    mean_exact = mean_exact && t.mean() == source.mean();
                    worst_corr = std::max(
                        worst_corr, (correlation_matrix(t) - correlation_matrix(source)).cwiseAbs().maxCoeff());
                }
                const GaussianDist full = tempered_posterior(problem, 1.0);
                const GaussianDist bayes = fuse(source, target);
                full_exact = full_exact && full.mean() == bayes.mean() && full.cov() == bayes.cov();
            }
        }
        c.require(worst_prec < 1e-10, "precision additivity, worst relative error %.2e < 1e-10", worst_prec);
        c.require(mean_exact, "temper preserves the mean exactly");
        c.require(worst_corr <= 1e-14, "temper preserves correlations, worst %.2e <= 1e-14", worst_corr);
        c.require(full_exact, "beta = 1 equals fuse(source, target) exactly");
    });

    criterion(2, "objective closed forms match numerical oracles", 120.0, [](Check& c) {
        std::mt19937_64 rng(202);
        double worst[4] = {0, 0, 0, 0};
        for (const Eigen::Index dim : {1, 2}) {
            for (int rep = 0; rep < 20; ++rep) {
                const GaussianDist source = oracle::random_gaussian(dim, rng, 0.7);
                const GaussianDist target = oracle::random_gaussian(dim, rng, 0.7);
                const double beta = 0.1 + 0.9 * std::uniform_real_distribution<double>()(rng);
                const GaussianDist tempered = temper(source, beta);
                const GaussianDist post = tempered_posterior(TransferProblem(source, target, Objective::EDF), beta);
                const auto value = [&](Objective o) {
                    return objective_value(TransferProblem(source, target, o), beta);
                };
                const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(10 * dim + rep);
                const double cross = oracle::quad_product(tempered, target);
                const double dice =
                    2.0 * cross / (oracle::quad_product(tempered, tempered) + oracle::quad_product(target, target));
                const double errs[4] = {
                    rel_err(value(Objective::EDF), oracle::mc_expected_log(post, target, 1'000'000, seed)),
                    rel_err(-value(Objective::KLD), oracle::mc_kl(post, tempered, 1'000'000, seed + 1)),
                    rel_err(std::exp(value(Objective::ME)), cross),
                    rel_err(value(Objective::DS), dice),
                };
                for (int k = 0; k < 4; ++k) worst[k] = std::max(worst[k], errs[k]);
            }
        }
        c.require(worst[0] < 0.01, "EDF vs Monte Carlo (1e6 draws), worst relative error %.2e < 1e-2", worst[0]);
        c.require(worst[1] < 0.01, "KLD vs Monte Carlo (1e6 draws), worst relative error %.2e < 1e-2", worst[1]);
        c.require(worst[2] < 0.005, "ME vs adaptive quadrature, worst relative error %.2e < 5e-3", worst[2]);
        c.require(worst[3] < 0.005, "DS vs adaptive quadrature, worst relative error %.2e < 5e-3", worst[3]);
    });

    criterion(3, "cubic domain adaptation trends (100 trials)", 180.0, [&runs](Check& c) {
        const ExperimentConfig config = cubic_scenario();
        std::vector<SweepResult> by_degree;
        for (const std::size_t d : config.degrees) {
            by_degree.push_back(sweep(config, d));
            std::printf("    degree %zu\n", d);
            print_rows(by_degree.back());
            runs.sweeps.emplace_back(config, by_degree.back());
        }
        const SweepResult& linear = by_degree[0];
        const SweepResult& cubic = by_degree[2];
        double min_cubic = 1.0;
        for (const ShiftAggregate& a : cubic.rows) min_cubic = std::min(min_cubic, a.beta.mean);
        c.require(min_cubic >= 0.9, "(a) cubic surrogate: min over shifts of mean beta* = %.3f >= 0.9", min_cubic);
        const std::vector<double> lb = beta_means(linear);
        const double rho = spearman(config.shifts, lb);
        c.require(lb.front() >= 0.8, "(b) linear surrogate: mean beta* at coincident target = %.3f >= 0.8",
                  lb.front());
        c.require(lb.back() <= 0.5, "(b) linear surrogate: mean beta* at farthest target = %.3f <= 0.5", lb.back());
        c.require(rho <= -0.7, "(b) linear surrogate: Spearman rho(shift, mean beta*) = %.3f <= -0.7", rho);
        double worst0 = INFINITY, worst1 = INFINITY;
        for (const SweepResult& s : by_degree) {
            for (const ShiftAggregate& a : s.rows) {
                worst0 = std::min(worst0, a.lpfp[kBetaStar].mean - a.lpfp[kBetaZero].mean);
                worst1 = std::min(worst1, a.lpfp[kBetaStar].mean - a.lpfp[kBetaOne].mean);
            }
        }
        c.require(worst0 >= -0.05, "(c) min over degrees and shifts of mean LPFP(beta*) - mean LPFP(0) = %.4f >= -0.05",
                  worst0);
        c.require(worst1 >= -0.05, "(c) min over degrees and shifts of mean LPFP(beta*) - mean LPFP(1) = %.4f >= -0.05",
                  worst1);
    });

    criterion(4, "Ishigami task adaptation trends (100 trials)", 300.0, [&runs](Check& c) {
        const ExperimentConfig config = ishigami_scenario();
        const SweepResult s = sweep(config, 3);
        print_rows(s);
        runs.sweeps.emplace_back(config, s);
        const ShiftAggregate& first = s.rows.front();
        const ShiftAggregate& last = s.rows.back();
        c.require(n_pce(2, 3) == 10, "10 coefficients");
        c.require(first.rmse[kBetaZero].mean > first.rmse[kBetaStar].mean,
                  "(a) p = 0: mean RMSE(0) = %.4f > mean RMSE(beta*) = %.4f", first.rmse[kBetaZero].mean,
                  first.rmse[kBetaStar].mean);
        const double gap = std::abs(first.rmse[kBetaStar].mean - first.rmse[kBetaOne].mean);
        c.require(gap <= 0.1 * first.rmse[kBetaOne].mean, "(a) p = 0: |RMSE(beta*) - RMSE(1)| = %.2e <= %.2e", gap,
                  0.1 * first.rmse[kBetaOne].mean);
        const double rho = spearman(config.shifts, beta_means(s));
        c.require(rho <= -0.8, "(b) Spearman rho(p, mean beta*) = %.3f <= -0.8", rho);
        c.require(last.rmse[kBetaStar].mean <= last.rmse[kBetaOne].mean,
                  "(c) p = %g: mean RMSE(beta*) = %.4f <= mean RMSE(1) = %.4f", last.shift,
                  last.rmse[kBetaStar].mean, last.rmse[kBetaOne].mean);
    });

    criterion(5, "subsurface-shaped synthetic sweeps (50 trials)", 600.0, [&runs](Check& c) {
        c.require(n_pce(5, 3) == 56, "56 coefficients");
        for (const SubsurfaceAxis axis : {kZ2, kR3}) {
            const ExperimentConfig config = subsurface_scenario(axis);
            const SweepResult s = sweep(config, 3);
            std::printf("    %s (N_S = %zu, N_T = %zu)\n", config.name.c_str(), config.n_source, config.n_target);
            print_rows(s);
            runs.sweeps.emplace_back(config, s);
            std::size_t failed = 0;
            for (const ShiftAggregate& a : s.rows) failed += a.n_failed;
            c.require(failed == 0, "%s: every trial completed (%zu failed)", config.name.c_str(), failed);
            c.require(s.rows.front().beta.mean >= 0.9, "%s: mean beta* at zero shift = %.3f >= 0.9",
                      config.name.c_str(), s.rows.front().beta.mean);
            c.require(s.rows.back().beta.mean <= 0.5, "%s: mean beta* at maximum shift = %.3f <= 0.5",
                      config.name.c_str(), s.rows.back().beta.mean);
            double worst = -INFINITY;
            for (const ShiftAggregate& a : s.rows) {
                const double best = std::min(a.rmse[kBetaZero].mean, a.rmse[kBetaOne].mean);
                worst = std::max(worst, a.rmse[kBetaStar].mean / best);
            }
            c.require(worst <= 1.1, "%s: max over shifts of RMSE(beta*) / min(RMSE(0), RMSE(1)) = %.3f <= 1.1",
                      config.name.c_str(), worst);
        }
    });

    criterion(6, "source likelihood correlations are small", 120.0, [](Check& c) {
        const ExperimentConfig config = resolve_frame(subsurface_scenario(kZ2));
        double worst = 0.0, sum = 0.0;
        for (std::size_t t = 0; t < config.n_trials; ++t) {
            const TrialDetail d = run_trial_detailed(config, 3, 0.0, t);
            const double m = mean_abs_off_diagonal(correlation_matrix(d.source_likelihood));
            worst = std::max(worst, m);
            sum += m;
        }
        const double mean = sum / static_cast<double>(config.n_trials);
        std::printf("    mean |off-diagonal correlation| over %zu source likelihoods: mean %.4f, max %.4f\n",
                    config.n_trials, mean, worst);
        c.require(worst < 0.2, "largest mean |off-diagonal correlation| = %.4f < 0.2", worst);
    });

    criterion(7, "repeated sweeps give byte-identical CSVs", 900.0, [&runs](Check& c) {
        for (const auto& [config, first] : runs.sweeps) {
            const SweepResult again = sweep(config, first.degree, 1);
            const bool same = sweep_csv(config, first) == sweep_csv(config, again);
            c.require(same, "%s degree %zu: rerun on one worker is byte-identical", config.name.c_str(), first.degree);
        }
        c.require(runs.sweeps.size() == 6, "covered %zu sweeps from criteria 3-5", runs.sweeps.size());
    });

    std::printf("acceptance: %d of 7 criteria passed\n", 7 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
