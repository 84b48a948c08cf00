#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "pcetl/errors.hpp"
#include "pcetl/experiment.hpp"
#include "pcetl/predict.hpp"

using namespace pcetl;

namespace {

ExperimentConfig small_cubic(std::size_t trials = 5) {
    ExperimentConfig c = cubic_scenario();
    c.n_trials = trials;
    c.shifts = {0.0, 1.0, 2.7};
    return c;
}

}  // namespace

TEST_CASE("cubic truth values") {
    CHECK(cubic_truth(0.0) == 0.0);
    CHECK(std::abs(cubic_truth(std::sqrt(6.75))) < 1e-14);
    CHECK(cubic_truth(3.0) == doctest::Approx(0.675).epsilon(1e-14));
}

TEST_CASE("ishigami values") {
    const double half_pi = std::numbers::pi / 2.0;
    CHECK(ishigami(0.0, 0.0, 0.0) == 0.0);
    CHECK(ishigami(half_pi, 1.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ishigami(half_pi, 1.0, half_pi) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("synthetic subsurface response") {
    Vector x(5);
    x << 2.0, 5.0, 8.0, -1.5, 1.5;
    const double y = synthetic_subsurface(x);
    CHECK(std::isfinite(y));
    CHECK(y == synthetic_subsurface(x));
    CHECK(y > 2.0);
    CHECK(y < 8.0);
    for (int j = 0; j < 5; ++j) {
        Vector z = x;
        z[j] += 1e-8;
        CHECK(std::abs(synthetic_subsurface(z) - y) < 1e-4);
    }
    Vector far = x;
    far[kZ1] = -9.0;
    far[kZ2] = 9.0;
    CHECK(synthetic_subsurface(far) == doctest::Approx(5.0).epsilon(1e-3));
    Vector outside = x;
    outside[kR1] = -1.0;
    CHECK_THROWS_AS(synthetic_subsurface(outside), DomainError);
    outside = x;
    outside[kZ2] = -0.5;
    CHECK_THROWS_AS(synthetic_subsurface(outside), DomainError);
}

TEST_CASE("latin hypercube places one point per stratum") {
    const DomainBox box({-0.2, 10.0, 0.0}, {0.3, 20.0, 1.0});
    const std::size_t n = 37;
    const PointSet X = sample(box, n, Sampler::LatinHypercube, 5);
    for (std::size_t j = 0; j < 3; ++j) {
        std::set<long> strata;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double u = (X(i, static_cast<Eigen::Index>(j)) - box.lower()[j]) / box.width(j);
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
            strata.insert(std::min(static_cast<long>(n) - 1, static_cast<long>(std::floor(u * n))));
        }
        CHECK(strata.size() == n);
    }
}

TEST_CASE("sampling is reproducible and centred") {
    const DomainBox box({-1.0, 4.0}, {1.0, 6.0});
    CHECK(sample(box, 50, Sampler::Uniform, 9) == sample(box, 50, Sampler::Uniform, 9));
    CHECK(sample(box, 50, Sampler::LatinHypercube, 9) == sample(box, 50, Sampler::LatinHypercube, 9));
    CHECK_FALSE(sample(box, 50, Sampler::Uniform, 9) == sample(box, 50, Sampler::Uniform, 10));
    const PointSet X = sample(box, 100'000, Sampler::Uniform, 1);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double mid = box.center(static_cast<std::size_t>(j));
        CHECK(std::abs(X.col(j).mean() - mid) <= 0.01 * std::max(1.0, std::abs(mid)));
        CHECK(X.col(j).minCoeff() >= box.lower()[static_cast<std::size_t>(j)]);
        CHECK(X.col(j).maxCoeff() <= box.upper()[static_cast<std::size_t>(j)]);
    }
    CHECK_THROWS_AS(sample(box, 0, Sampler::Uniform, 1), DomainError);
}

TEST_CASE("derived seeds separate trials and roles") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t t = 0; t < 50; ++t)
        for (const StreamRole r : {StreamRole::SourceInputs, StreamRole::TargetInputs, StreamRole::ValidationInputs,
                                   StreamRole::SourceNoise, StreamRole::TargetNoise, StreamRole::ValidationNoise})
            seen.insert(derive_seed(42, t, r));
    CHECK(seen.size() == 300);
    CHECK(derive_seed(42, 3, StreamRole::TargetNoise) == derive_seed(42, 3, StreamRole::TargetNoise));
    CHECK(derive_seed(42, 3, StreamRole::TargetNoise) != derive_seed(43, 3, StreamRole::TargetNoise));
}

TEST_CASE("validation points do not perturb training samples") {
    ExperimentConfig a = small_cubic(1);
    ExperimentConfig b = a;
    b.n_val = 500;
    const TrialDetail da = run_trial_detailed(a, 3, 1.0, 0);
    const TrialDetail db = run_trial_detailed(b, 3, 1.0, 0);
    CHECK(da.source_likelihood.mean() == db.source_likelihood.mean());
    CHECK(da.target_likelihood.mean() == db.target_likelihood.mean());
    CHECK(da.record.beta_star == db.record.beta_star);
}

TEST_CASE("coincident cubic target transfers fully") {
    ExperimentConfig c = cubic_scenario();
    c.n_trials = 20;
    c.target_box = c.source_box;
    double sum = 0.0;
    for (const TrialRecord& r : run_trials(c, 3, 0.0)) {
        REQUIRE(r.ok());
        sum += r.beta_star;
    }
    CHECK(sum / 20.0 >= 0.9);
}

TEST_CASE("noise-free in-span target: beta* is no worse than no transfer") {
    ExperimentConfig c = cubic_scenario();
    c.noise_sd = 0.0;
    c.n_trials = 10;
    for (const TrialRecord& r : run_trials(c, 3, 0.5)) {
        REQUIRE(r.ok());
        CHECK(r.rmse_at[kBetaStar] <= r.rmse_at[kBetaZero] + 1e-10);
    }
}

TEST_CASE("trials are deterministic and independent") {
    const ExperimentConfig c = small_cubic(8);
    const auto first = run_trials(c, 1, 1.0);
    const auto second = run_trials(c, 1, 1.0);
    CHECK(first == second);
    for (std::size_t t : {0u, 3u, 7u}) CHECK(run_trial(c, 1, 1.0, t) == first[t]);
    ExperimentConfig fewer = c;
    fewer.n_trials = 3;
    const auto prefix = run_trials(fewer, 1, 1.0);
    for (std::size_t t = 0; t < 3; ++t) CHECK(prefix[t] == first[t]);
}

TEST_CASE("parallel trials equal the serial reference") {
    const ExperimentConfig c = small_cubic(12);
    for (const int workers : {0, 1, 3}) CHECK(run_trials(c, 2, 2.7, workers) == run_trials_serial(c, 2, 2.7));
}

TEST_CASE("harness LPFP equals predict-eval LPFP on the same posterior") {
    const ExperimentConfig c = small_cubic(1);
    const TrialDetail d = run_trial_detailed(c, 2, 1.0, 0);
    for (std::size_t k = 0; k < 3; ++k) {
        const PfpPrediction pfp = pushforward(d.posteriors[k], d.basis, d.validation_points, c.pfp_noise_var);
        CHECK(d.record.lpfp_at[k] == lpfp(pfp, d.validation_observed));
        CHECK(d.record.rmse_at[k] == rmse(d.posteriors[k].mean(), d.basis, d.validation_points, d.validation_truth));
    }
    CHECK(d.posteriors[kBetaStar].mean() == d.transfer.tempered_posterior.mean());
    CHECK(d.record.beta_star == d.transfer.beta_star);
}

TEST_CASE("encompassing frame is the per-trial hull") {
    const ExperimentConfig c = small_cubic(1);
    const TrialDetail d = run_trial_detailed(c, 1, 2.0, 0);
    CHECK(d.basis.box() == DomainBox({-0.2}, {2.25}));
    CHECK(d.target_box == DomainBox({1.85}, {2.25}));
}

TEST_CASE("frame choice leaves predictions unchanged") {
    ExperimentConfig enc = small_cubic(3);
    ExperimentConfig fixed = enc;
    fixed.frame = FrameMode::Fixed;
    fixed = resolve_frame(fixed);
    REQUIRE(fixed.frame_box);
    CHECK(*fixed.frame_box == DomainBox({-0.2}, {2.95}));
    for (std::size_t t = 0; t < 3; ++t) {
        const TrialRecord a = run_trial(enc, 2, 1.0, t);
        const TrialRecord b = run_trial(fixed, 2, 1.0, t);
        CHECK(a.beta_star == doctest::Approx(b.beta_star).epsilon(1e-6));
        CHECK(a.rmse_at[kBetaStar] == doctest::Approx(b.rmse_at[kBetaStar]).epsilon(1e-6));
    }
}

TEST_CASE("fixed frame must contain the boxes") {
    ExperimentConfig c = small_cubic(1);
    c.frame = FrameMode::Fixed;
    c.frame_box = DomainBox({-0.2}, {0.3});
    CHECK_THROWS_AS(run_trial_detailed(c, 1, 1.0, 0), DomainError);
    const TrialRecord r = run_trial(c, 1, 1.0, 0);
    CHECK(r.status == TrialStatus::DomainError);
    CHECK(std::isnan(r.beta_star));
}

TEST_CASE("calibration failures become failed rows") {
    ExperimentConfig c = small_cubic(4);
    c.condition_ceiling = 2.0;
    const auto records = run_trials(c, 3, 2.7);
    for (const TrialRecord& r : records) {
        CHECK(r.status == TrialStatus::CalibrationError);
        CHECK(r.message.find("cond") != std::string::npos);
    }
    const ShiftAggregate a = aggregate(2.7, records);
    CHECK(a.n_ok == 0);
    CHECK(a.n_failed == 4);
    CHECK(std::isnan(a.beta.mean));
}

TEST_CASE("aggregate of a single trial is the trial") {
    ExperimentConfig c = small_cubic(1);
    c.shifts = {0.0};
    const SweepResult s = sweep(c, 1);
    REQUIRE(s.rows.size() == 1);
    const TrialRecord& r = s.trials[0][0];
    const ShiftAggregate& a = s.rows[0];
    CHECK(a.n_ok == 1);
    CHECK(a.beta.mean == r.beta_star);
    CHECK(a.beta.sd == 0.0);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.lpfp[k].mean == r.lpfp_at[k]);
        CHECK(a.rmse[k].mean == r.rmse_at[k]);
    }
}

TEST_CASE("sweep rejects an empty shift list") {
    ExperimentConfig c = small_cubic(1);
    c.shifts.clear();
    CHECK_THROWS_AS(sweep(c, 1), DomainError);
}

TEST_CASE("config validation") {
    ExperimentConfig c = small_cubic(1);
    c.n_target = 3;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = small_cubic(1);
    c.shift_axis = 2;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = ishigami_scenario();
    c.shift_parameter = "phi";
    CHECK_THROWS_AS(c.validate(), DomainError);
    CHECK_NOTHROW(subsurface_scenario(kZ2).validate());
    CHECK_THROWS_AS(subsurface_scenario(kR1), DomainError);
}

TEST_CASE("band export is finite at every abscissa") {
    ExperimentConfig c = cubic_scenario();
    c.n_trials = 10;
    for (const std::size_t degree : {1u, 3u}) {
        for (const auto& [label, shift] : c.band_scenarios) {
            const auto rows = export_bands(c, degree, shift);
            CHECK(rows.size() == 3 * c.band_points);
            std::set<std::string> modes;
            for (const BandRow& r : rows) {
                modes.insert(r.beta_mode);
                CHECK(std::isfinite(r.x));
                CHECK(std::isfinite(r.mean));
                CHECK(std::isfinite(r.lo));
                CHECK(std::isfinite(r.hi));
                CHECK(r.lo <= r.mean);
                CHECK(r.mean <= r.hi);
            }
            CHECK(modes == std::set<std::string>{"b0", "bstar", "b1"});
        }
    }
    CHECK_THROWS_AS(export_bands(ishigami_scenario(), 3, 0.0), DomainError);
}

TEST_CASE("ishigami parameter shift changes only the target") {
    const ExperimentConfig c = ishigami_scenario();
    const GenerativeModel shifted = shifted_target_model(c, 0.75);
    CHECK(shifted.parameters.at("theta") == 0.75);
    CHECK(c.model.parameters.at("theta") == 0.0);
    CHECK(shifted_target_box(c, 0.75) == c.target_box);
    Vector x(2);
    x << 0.3, -0.4;
    CHECK(shifted(x) == ishigami(0.3, -0.4, 0.75));
}

TEST_CASE("subsurface sweep runs end to end") {
    ExperimentConfig c = subsurface_scenario(kZ2);
    CHECK(n_pce(5, 3) == 56);
    c.n_trials = 2;
    c.shifts = {0.0, 3.0};
    const SweepResult s = sweep(c, 3);
    REQUIRE(s.rows.size() == 2);
    for (const ShiftAggregate& a : s.rows) {
        CHECK(a.n_ok == 2);
        CHECK(std::isfinite(a.rmse[kBetaStar].mean));
    }
    CHECK(resolve_frame(c).frame_box == DomainBox({1.0, 4.0, 7.0, -2.0, 1.0}, {3.0, 6.0, 9.0, -1.0, 5.0}));
}

TEST_CASE("model lookup") {
    CHECK(model_by_name("cubic").dimension == 1);
    CHECK(model_by_name("ishigami").dimension == 2);
    CHECK(model_by_name("subsurface").dimension == 5);
    CHECK_THROWS_AS(model_by_name("nope"), DomainError);
    CHECK(parse_sampler("lhs") == Sampler::LatinHypercube);
    CHECK(parse_trial_status(to_string(TrialStatus::NumericError)) == TrialStatus::NumericError);
}
