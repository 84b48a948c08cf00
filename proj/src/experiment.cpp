#include "pcetl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "pcetl/errors.hpp"
#include "pcetl/predict.hpp"

namespace pcetl {

double cubic_truth(double x) { return 0.3 * (x * x * x / 3.0 - 2.25 * x); }

double ishigami(double x, double y, double theta) {
    const double y2 = y * y;
    return std::sin(x - theta) + y2 * y2 * std::sin(x);
}

const DomainBox& subsurface_envelope() {
    static const DomainBox envelope({0.5, 0.5, 0.5, -10.0, 0.1}, {50.0, 50.0, 50.0, -0.1, 10.0});
    return envelope;
}

double synthetic_subsurface(Eigen::Ref<const Vector> x) {
    if (x.size() != 5 || !subsurface_envelope().contains(x))
        throw DomainError("synthetic_subsurface: point outside the model envelope");
    constexpr double reach = 1.5;  // ft
    constexpr double blur = 0.5;   // ft
    const auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
    const double w1 = sigmoid((x[kZ1] + reach) / blur);
    const double w3 = sigmoid((reach - x[kZ2]) / blur);
    const double l1 = std::log(x[kR1]);
    const double l2 = std::log(x[kR2]);
    const double l3 = std::log(x[kR3]);
    return std::exp(l2 + w1 * (l1 - l2) + w3 * (l3 - l2) + 0.1 * w1 * w3 * (l1 - l3));
}

GenerativeModel GenerativeModel::with_parameter(const std::string& key, double value) const {
    GenerativeModel out = *this;
    out.parameters[key] = value;
    return out;
}

GenerativeModel cubic_model() {
    return {"cubic", 1, [](Eigen::Ref<const Vector> x, const ParameterMap&) { return cubic_truth(x[0]); }, {}};
}

GenerativeModel ishigami_model(double theta) {
    return {"ishigami", 2,
            [](Eigen::Ref<const Vector> x, const ParameterMap& p) { return ishigami(x[0], x[1], p.at("theta")); },
            {{"theta", theta}}};
}

GenerativeModel subsurface_model() {
    return {"subsurface", 5,
            [](Eigen::Ref<const Vector> x, const ParameterMap&) { return synthetic_subsurface(x); }, {}};
}

GenerativeModel model_by_name(const std::string& name) {
    if (name == "cubic") return cubic_model();
    if (name == "ishigami") return ishigami_model();
    if (name == "subsurface") return subsurface_model();
    throw DomainError("unknown model '" + name + "' (expected cubic, ishigami or subsurface)");
}

Sampler parse_sampler(const std::string& name) {
    if (name == "uniform") return Sampler::Uniform;
    if (name == "latin-hypercube" || name == "lhs") return Sampler::LatinHypercube;
    throw DomainError("unknown sampler '" + name + "' (expected uniform or latin-hypercube)");
}

std::string to_string(Sampler sampler) {
    return sampler == Sampler::Uniform ? "uniform" : "latin-hypercube";
}

PointSet sample(const DomainBox& box, std::size_t n, Sampler sampler, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample: need at least one point");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto rows = static_cast<Eigen::Index>(n);
    const auto dims = static_cast<Eigen::Index>(box.dimension());
    PointSet X(rows, dims);
    if (sampler == Sampler::Uniform) {
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index j = 0; j < dims; ++j) X(r, j) = unit(rng);
    } else {
        // One point per stratum in every coordinate, strata paired across
        // coordinates by independent permutations.
        std::vector<std::size_t> strata(n);
        for (Eigen::Index j = 0; j < dims; ++j) {
            std::iota(strata.begin(), strata.end(), 0);
            std::shuffle(strata.begin(), strata.end(), rng);
            for (Eigen::Index r = 0; r < rows; ++r)
                X(r, j) = (static_cast<double>(strata[static_cast<std::size_t>(r)]) + unit(rng)) /
                          static_cast<double>(n);
        }
    }
    for (Eigen::Index j = 0; j < dims; ++j) {
        const auto k = static_cast<std::size_t>(j);
        X.col(j) = (box.lower()[k] + X.col(j).array() * box.width(k)).matrix();
        X.col(j) = X.col(j).cwiseMin(box.upper()[k]);
    }
    return X;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, StreamRole role) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ trial);
    return splitmix64(h ^ (static_cast<std::uint64_t>(role) << 56));
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& what) { throw DomainError("ExperimentConfig: " + what); };
    if (!model.eval) fail("model is not set");
    if (model.dimension != source_box.dimension()) fail("source box dimension differs from the model");
    if (target_box.dimension() != source_box.dimension()) fail("target box dimension differs from source box");
    if (degrees.empty()) fail("degrees is empty");
    if (shifts.empty()) fail("shift list is empty");
    if (n_source == 0 || n_target == 0 || n_val == 0 || n_trials == 0) fail("counts must be positive");
    for (const std::size_t d : degrees) {
        const std::size_t p = n_pce(source_box.dimension(), d);
        if (n_target < p || n_source < p) {
            std::ostringstream msg;
            msg << "degree " << d << " needs at least " << p << " source and target points";
            fail(msg.str());
        }
    }
    if (!(noise_sd >= 0.0)) fail("noise_sd must be non-negative");
    if (likelihood_noise_sd && !(*likelihood_noise_sd > 0.0)) fail("likelihood_noise_sd must be positive");
    if (!(pfp_noise_var >= 0.0)) fail("pfp_noise_var must be non-negative");
    if (shift_mode == ShiftMode::TranslateTarget && shift_axis >= source_box.dimension())
        fail("shift_axis out of range");
    if (shift_mode == ShiftMode::TaskParameter && !model.parameters.contains(shift_parameter))
        fail("model has no parameter '" + shift_parameter + "'");
    if (frame_box && frame_box->dimension() != source_box.dimension()) fail("frame box dimension mismatch");
    if (!(beta_floor > 0.0 && beta_floor < 1.0)) fail("beta_floor must lie in (0, 1)");
    if (scan_points < 2) fail("scan_points must be at least 2");
    if (!(condition_ceiling > 1.0)) fail("condition_ceiling must exceed 1");
}

std::string to_string(TrialStatus status) {
    switch (status) {
        case TrialStatus::Ok: return "ok";
        case TrialStatus::CalibrationError: return "calibration_error";
        case TrialStatus::NumericError: return "numeric_error";
        case TrialStatus::DomainError: return "domain_error";
    }
    return "?";
}

TrialStatus parse_trial_status(const std::string& text) {
    if (text == "ok") return TrialStatus::Ok;
    if (text == "calibration_error") return TrialStatus::CalibrationError;
    if (text == "numeric_error") return TrialStatus::NumericError;
    if (text == "domain_error") return TrialStatus::DomainError;
    throw SchemaError("unknown trial status '" + text + "'");
}

DomainBox shifted_target_box(const ExperimentConfig& config, double shift) {
    if (config.shift_mode == ShiftMode::TranslateTarget) return config.target_box.translated(config.shift_axis, shift);
    return config.target_box;
}

GenerativeModel shifted_target_model(const ExperimentConfig& config, double shift) {
    if (config.shift_mode == ShiftMode::TaskParameter) {
        const double base = config.model.parameters.at(config.shift_parameter);
        return config.model.with_parameter(config.shift_parameter, base + shift);
    }
    return config.model;
}

DomainBox sweep_frame(const ExperimentConfig& config) {
    DomainBox frame = config.source_box;
    for (const double s : config.shifts) frame = DomainBox::hull(frame, shifted_target_box(config, s));
    return frame;
}

ExperimentConfig resolve_frame(const ExperimentConfig& config) {
    ExperimentConfig out = config;
    if (out.frame == FrameMode::Fixed && !out.frame_box) out.frame_box = sweep_frame(out);
    return out;
}

namespace {

Vector evaluate(const GenerativeModel& model, const PointSet& X) {
    Vector y(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) y[r] = model(X.row(r).transpose());
    return y;
}

void add_noise(Vector& y, double sd, std::uint64_t seed) {
    if (sd == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += normal(rng);
}

DomainBox trial_frame(const ExperimentConfig& config, const DomainBox& target) {
    if (config.frame == FrameMode::Encompassing) return DomainBox::hull(config.source_box, target);
    if (!config.frame_box) throw DomainError("run_trial: fixed frame requested without a frame box");
    const DomainBox& frame = *config.frame_box;
    if (!(DomainBox::hull(frame, DomainBox::hull(config.source_box, target)) == frame))
        throw DomainError("run_trial: fixed frame does not contain the source and target boxes");
    return frame;
}

}  // namespace

TrialDetail run_trial_detailed(const ExperimentConfig& config, std::size_t degree, double shift,
                               std::size_t trial) {
    const DomainBox target_box = shifted_target_box(config, shift);
    const GenerativeModel target_model = shifted_target_model(config, shift);
    BasisSpec basis(trial_frame(config, target_box), degree);
    const auto seed = [&](StreamRole role) { return derive_seed(config.seed, trial, role); };

    const PointSet xs = sample(config.source_box, config.n_source, config.sampler, seed(StreamRole::SourceInputs));
    const PointSet xt = sample(target_box, config.n_target, config.sampler, seed(StreamRole::TargetInputs));
    PointSet xv = sample(target_box, config.n_val, Sampler::Uniform, seed(StreamRole::ValidationInputs));

    Vector ys = evaluate(config.model, xs);
    Vector yt = evaluate(target_model, xt);
    Vector yv_true = evaluate(target_model, xv);
    add_noise(ys, config.noise_sd, seed(StreamRole::SourceNoise));
    add_noise(yt, config.noise_sd, seed(StreamRole::TargetNoise));
    Vector yv_obs = yv_true;
    add_noise(yv_obs, config.noise_sd, seed(StreamRole::ValidationNoise));

    std::optional<double> noise_var;
    if (config.likelihood_noise_sd) noise_var = *config.likelihood_noise_sd * *config.likelihood_noise_sd;
    LikelihoodOptions options;
    options.condition_ceiling = config.condition_ceiling;
    GaussianDist source_lik = likelihood(CalibrationTask(basis, xs, std::move(ys), noise_var), options);
    GaussianDist target_lik = likelihood(CalibrationTask(basis, xt, std::move(yt), noise_var), options);

    const TransferProblem problem(source_lik, target_lik, config.objective, config.beta_floor);
    ScanOptions scan;
    scan.scan_points = config.scan_points;
    BetaResult result = optimize_beta(problem, scan);

    std::array<GaussianDist, 3> posteriors{tempered_posterior(problem, 0.0), result.tempered_posterior,
                                           tempered_posterior(problem, 1.0)};
    TrialRecord record;
    record.trial = trial;
    record.shift = shift;
    record.beta_star = result.beta_star;
    for (std::size_t k = 0; k < 3; ++k) {
        const PfpMarginals pfp = pfp_marginals(posteriors[k], basis, xv, config.pfp_noise_var);
        record.lpfp_at[k] = lpfp_score(pfp, yv_obs).value;
        record.rmse_at[k] = rmse(posteriors[k].mean(), basis, xv, yv_true);
    }
    return TrialDetail{std::move(record),     std::move(basis),      target_box,
                       std::move(xv),         std::move(yv_true),    std::move(yv_obs),
                       std::move(source_lik), std::move(target_lik), std::move(result),
                       std::move(posteriors)};
}

TrialRecord run_trial(const ExperimentConfig& config, std::size_t degree, double shift, std::size_t trial) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    TrialRecord failed;
    failed.trial = trial;
    failed.shift = shift;
    failed.beta_star = nan;
    failed.lpfp_at.fill(nan);
    failed.rmse_at.fill(nan);
    try {
        return run_trial_detailed(config, degree, shift, trial).record;
    } catch (const CalibrationError& e) {
        failed.status = TrialStatus::CalibrationError;
        failed.message = e.what();
    } catch (const NumericError& e) {
        failed.status = TrialStatus::NumericError;
        failed.message = e.what();
    } catch (const DomainError& e) {
        failed.status = TrialStatus::DomainError;
        failed.message = e.what();
    }
    return failed;
}

std::vector<TrialRecord> run_trials_serial(const ExperimentConfig& config, std::size_t degree, double shift) {
    config.validate();
    std::vector<TrialRecord> out;
    out.reserve(config.n_trials);
    for (std::size_t t = 0; t < config.n_trials; ++t) out.push_back(run_trial(config, degree, shift, t));
    return out;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& config, std::size_t degree, double shift, int workers) {
    config.validate();
    std::vector<TrialRecord> out(config.n_trials);
    const auto n = static_cast<std::int64_t>(config.n_trials);
    const int threads = workers > 0 ? workers : 0;
    // Each trial writes only its own slot; anything thrown is caught inside
    // run_trial apart from allocation failure, which terminates.
    if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::int64_t t = 0; t < n; ++t)
            out[static_cast<std::size_t>(t)] = run_trial(config, degree, shift, static_cast<std::size_t>(t));
    } else {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t t = 0; t < n; ++t)
            out[static_cast<std::size_t>(t)] = run_trial(config, degree, shift, static_cast<std::size_t>(t));
    }
    return out;
}

ShiftAggregate aggregate(double shift, std::span<const TrialRecord> records) {
    std::vector<double> beta;
    std::array<std::vector<double>, 3> lp, rm;
    std::vector<double> gain0, gain1;
    ShiftAggregate row;
    row.shift = shift;
    for (const TrialRecord& r : records) {
        if (!r.ok()) {
            ++row.n_failed;
            continue;
        }
        ++row.n_ok;
        beta.push_back(r.beta_star);
        for (std::size_t k = 0; k < 3; ++k) {
            lp[k].push_back(r.lpfp_at[k]);
            rm[k].push_back(r.rmse_at[k]);
        }
        gain0.push_back(r.lpfp_at[kBetaStar] - r.lpfp_at[kBetaZero]);
        gain1.push_back(r.lpfp_at[kBetaStar] - r.lpfp_at[kBetaOne]);
    }
    row.beta = summarize(beta);
    for (std::size_t k = 0; k < 3; ++k) {
        row.lpfp[k] = summarize(lp[k]);
        row.rmse[k] = summarize(rm[k]);
    }
    row.gain_vs_none = summarize(gain0);
    row.gain_vs_full = summarize(gain1);
    return row;
}

SweepResult sweep(const ExperimentConfig& config, std::size_t degree, int workers) {
    if (config.shifts.empty()) throw DomainError("sweep: empty shift list");
    const ExperimentConfig resolved = resolve_frame(config);
    resolved.validate();
    SweepResult out;
    out.name = config.name;
    out.degree = degree;
    for (const double s : resolved.shifts) {
        out.trials.push_back(run_trials(resolved, degree, s, workers));
        out.rows.push_back(aggregate(s, out.trials.back()));
    }
    return out;
}

std::vector<BandRow> export_bands(const ExperimentConfig& config, std::size_t degree, double shift) {
    const ExperimentConfig resolved = resolve_frame(config);
    resolved.validate();
    if (resolved.source_box.dimension() != 1) throw DomainError("export_bands: only one-dimensional inputs");
    if (resolved.band_points < 2) throw DomainError("export_bands: need at least two abscissae");
    const DomainBox frame = resolved.frame == FrameMode::Fixed
                                ? *resolved.frame_box
                                : DomainBox::hull(resolved.source_box, shifted_target_box(resolved, shift));
    const auto m = static_cast<Eigen::Index>(resolved.band_points);
    PointSet grid(m, 1);
    for (Eigen::Index i = 0; i < m; ++i)
        grid(i, 0) = i + 1 == m ? frame.upper()[0]
                                : frame.lower()[0] + frame.width(0) * static_cast<double>(i) / static_cast<double>(m - 1);

    // Pool trials as an equal-weight mixture: mean of means, and mean of
    // variances plus variance of means.
    std::array<Vector, 3> sum_mean, sum_sq_mean, sum_var;
    for (auto* acc : {&sum_mean, &sum_sq_mean, &sum_var})
        for (auto& v : *acc) v = Vector::Zero(m);
    std::size_t used = 0;
    for (std::size_t t = 0; t < resolved.n_trials; ++t) {
        std::optional<TrialDetail> detail;
        try {
            detail.emplace(run_trial_detailed(resolved, degree, shift, t));
        } catch (const CalibrationError&) {
            continue;
        } catch (const NumericError&) {
            continue;
        }
        ++used;
        for (std::size_t k = 0; k < 3; ++k) {
            const PfpMarginals pfp = pfp_marginals(detail->posteriors[k], detail->basis, grid, resolved.pfp_noise_var);
            sum_mean[k] += pfp.mean;
            sum_sq_mean[k] += pfp.mean.cwiseAbs2();
            sum_var[k] += pfp.var;
        }
    }
    if (used == 0) throw CalibrationError("export_bands: every trial failed");
    static constexpr std::array<const char*, 3> kModes{"b0", "bstar", "b1"};
    std::vector<BandRow> rows;
    rows.reserve(3 * static_cast<std::size_t>(m));
    const double n = static_cast<double>(used);
    for (std::size_t k = 0; k < 3; ++k) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double mean = sum_mean[k][i] / n;
            const double between = std::max(0.0, sum_sq_mean[k][i] / n - mean * mean);
            const double sd = std::sqrt(sum_var[k][i] / n + between);
            rows.push_back({grid(i, 0), mean, mean - 2.0 * sd, mean + 2.0 * sd, kModes[k]});
        }
    }
    return rows;
}

ExperimentConfig cubic_scenario() {
    ExperimentConfig c;
    c.name = "cubic";
    c.model = cubic_model();
    c.source_box = DomainBox({-0.2}, {0.3});
    c.target_box = DomainBox({-0.15}, {0.25});  // width 0.4, centred on the source
    c.degrees = {1, 2, 3};
    c.shifts = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.7};
    c.n_source = 16;
    c.n_target = 4;
    c.n_val = 20;
    c.n_trials = 100;
    c.noise_sd = 0.01;
    c.likelihood_noise_sd = 0.1;
    c.pfp_noise_var = 0.01;
    c.sampler = Sampler::LatinHypercube;
    c.objective = Objective::EDF;
    c.seed = 20231;
    c.shift_mode = ShiftMode::TranslateTarget;
    c.shift_axis = 0;
    c.frame = FrameMode::Encompassing;
    // A far, B close, C partial overlap, D coincident.
    c.band_scenarios = {{"A", 2.55}, {"B", 0.7}, {"C", 0.3}, {"D", 0.0}};
    c.band_points = 101;
    return c;
}

ExperimentConfig ishigami_scenario() {
    ExperimentConfig c;
    c.name = "ishigami";
    c.model = ishigami_model(0.0);
    c.source_box = DomainBox::cube(2, -1.0, 1.0);
    c.target_box = c.source_box;
    c.degrees = {3};
    c.shifts = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    c.n_source = 40;
    c.n_target = 11;
    c.n_val = 1000;
    c.n_trials = 100;
    c.noise_sd = 0.0;
    c.likelihood_noise_sd = 0.1;
    c.pfp_noise_var = 0.0;
    c.sampler = Sampler::Uniform;
    c.objective = Objective::EDF;
    c.seed = 20232;
    c.shift_mode = ShiftMode::TaskParameter;
    c.shift_parameter = "theta";
    c.frame = FrameMode::Fixed;
    c.frame_box = c.source_box;
    return c;
}

ExperimentConfig subsurface_scenario(SubsurfaceAxis axis) {
    if (axis != kZ2 && axis != kR3) throw DomainError("subsurface_scenario: sweeps move z2 or R3");
    ExperimentConfig c;
    c.name = axis == kZ2 ? "subsurface_z2" : "subsurface_r3";
    c.model = subsurface_model();
    c.source_box = DomainBox({1.0, 4.0, 7.0, -2.0, 1.0}, {3.0, 6.0, 9.0, -1.0, 2.0});
    c.target_box = c.source_box;
    c.degrees = {3};
    c.shifts = axis == kZ2 ? std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}
                           : std::vector<double>{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    c.n_source = 200;
    c.n_target = 57;
    c.n_val = 1000;
    c.n_trials = 50;
    c.noise_sd = 0.0;
    c.likelihood_noise_sd = 0.01;
    c.pfp_noise_var = 0.0;
    c.sampler = Sampler::Uniform;
    c.objective = Objective::EDF;
    c.seed = 20233;
    c.shift_mode = ShiftMode::TranslateTarget;
    c.shift_axis = axis;
    c.frame = FrameMode::Fixed;  // frame_box resolved to the sweep hull
    return c;
}

}  // namespace pcetl
