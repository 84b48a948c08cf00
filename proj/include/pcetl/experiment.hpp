#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcetl/basis.hpp"
#include "pcetl/gaussian.hpp"
#include "pcetl/stats.hpp"
#include "pcetl/transfer.hpp"

namespace pcetl {

// ---------------------------------------------------------------------------
// Generative models

/// 0.3 ((1/3) x^3 - 2.25 x)
double cubic_truth(double x);

/// sin(x - theta) + y^4 sin(x)
double ishigami(double x, double y, double theta);

/// Axis roles of the synthetic subsurface model.
enum SubsurfaceAxis : std::size_t { kR1 = 0, kR2 = 1, kR3 = 2, kZ1 = 3, kZ2 = 4 };

/// Envelope inside which synthetic_subsurface() is defined: positive
/// resistivities and a sensor at z = 0 between the two boundaries.
const DomainBox& subsurface_envelope();

/// Smooth stand-in for a three-layer resistivity tool response, in ohm-m.
/// Input (R1, R2, R3, z1, z2); resistivities in ohm-m, depths in ft with
/// z1 < 0 < z2. Each outer layer contributes to the log apparent resistivity
/// with a sigmoid weight that decays as its boundary moves away from the
/// sensor:
///   w1 = s((z1 + h) / w),  w3 = s((h - z2) / w),  h = 1.5, w = 0.5
///   log rho = ln R2 + w1 (ln R1 - ln R2) + w3 (ln R3 - ln R2)
///             + 0.1 w1 w3 (ln R1 - ln R3)
/// and the response is rho = exp(log rho).
double synthetic_subsurface(Eigen::Ref<const Vector> x);

using ParameterMap = std::map<std::string, double>;

/// Deterministic truth y = M(x; parameters).
struct GenerativeModel {
    std::string name;
    std::size_t dimension = 0;
    std::function<double(Eigen::Ref<const Vector>, const ParameterMap&)> eval;
    ParameterMap parameters;

    double operator()(Eigen::Ref<const Vector> x) const { return eval(x, parameters); }
    GenerativeModel with_parameter(const std::string& key, double value) const;
};

GenerativeModel cubic_model();
GenerativeModel ishigami_model(double theta = 0.0);
GenerativeModel subsurface_model();
/// "cubic", "ishigami" or "subsurface", with default parameters.
GenerativeModel model_by_name(const std::string& name);

// ---------------------------------------------------------------------------
// Sampling

enum class Sampler { Uniform, LatinHypercube };

Sampler parse_sampler(const std::string& name);
std::string to_string(Sampler sampler);

/// N points in the box; reproducible from the seed.
PointSet sample(const DomainBox& box, std::size_t n, Sampler sampler, std::uint64_t seed);

/// Independent random streams inside one trial.
enum class StreamRole : std::uint64_t {
    SourceInputs = 1,
    TargetInputs = 2,
    ValidationInputs = 3,
    SourceNoise = 4,
    TargetNoise = 5,
    ValidationNoise = 6,
};

/// Stable 64-bit mix of (master seed, trial index, role).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, StreamRole role);

// ---------------------------------------------------------------------------
// Experiments

enum class ShiftMode {
    TranslateTarget,  ///< shift moves the target box along shift_axis
    TaskParameter,    ///< shift offsets a model parameter of the target task
};

enum class FrameMode {
    Encompassing,  ///< per trial, the hull of source and target boxes
    Fixed,         ///< one frame_box shared by every shift
};

struct ExperimentConfig {
    std::string name = "experiment";
    GenerativeModel model;
    DomainBox source_box = DomainBox::cube(1, -1.0, 1.0);
    /// Target box at zero shift.
    DomainBox target_box = DomainBox::cube(1, -1.0, 1.0);
    std::vector<std::size_t> degrees{3};
    std::vector<double> shifts{0.0};
    std::size_t n_source = 16;
    std::size_t n_target = 4;
    std::size_t n_val = 20;
    std::size_t n_trials = 100;
    /// Standard deviation of the noise added to every observation.
    double noise_sd = 0.0;
    /// Assumed gamma in the likelihood; empty means estimate per calibration.
    std::optional<double> likelihood_noise_sd;
    /// Variance added to the PFP diagonal before LPFP scoring.
    double pfp_noise_var = 0.0;
    Sampler sampler = Sampler::LatinHypercube;
    Objective objective = Objective::EDF;
    std::uint64_t seed = 1;
    ShiftMode shift_mode = ShiftMode::TranslateTarget;
    std::size_t shift_axis = 0;
    std::string shift_parameter = "theta";
    FrameMode frame = FrameMode::Encompassing;
    std::optional<DomainBox> frame_box;
    double beta_floor = kDefaultBetaFloor;
    std::size_t scan_points = 1001;
    double condition_ceiling = 1e12;
    /// Named target placements for PFP band export, label -> shift.
    std::map<std::string, double> band_scenarios;
    std::size_t band_points = 101;

    /// Throws DomainError when a field breaks its invariant.
    void validate() const;
};

enum class TrialStatus { Ok, CalibrationError, NumericError, DomainError };
std::string to_string(TrialStatus status);
TrialStatus parse_trial_status(const std::string& text);

/// Index into the per-beta score arrays: no transfer, optimal, full transfer.
enum BetaSlot : std::size_t { kBetaZero = 0, kBetaStar = 1, kBetaOne = 2 };

struct TrialRecord {
    std::size_t trial = 0;
    double shift = 0.0;
    double beta_star = 0.0;
    std::array<double, 3> lpfp_at{};
    std::array<double, 3> rmse_at{};
    TrialStatus status = TrialStatus::Ok;
    std::string message;

    bool ok() const { return status == TrialStatus::Ok; }
    bool operator==(const TrialRecord&) const = default;
};

/// Everything a single trial computed, for diagnostics and band export.
struct TrialDetail {
    TrialRecord record;
    BasisSpec basis;
    DomainBox target_box;
    PointSet validation_points;
    Vector validation_truth;
    Vector validation_observed;
    GaussianDist source_likelihood;
    GaussianDist target_likelihood;
    BetaResult transfer;
    std::array<GaussianDist, 3> posteriors;  // beta = 0, beta*, 1
};

/// Target box for a shift under the config's shift mode.
DomainBox shifted_target_box(const ExperimentConfig& config, double shift);
/// Model generating target data at a shift.
GenerativeModel shifted_target_model(const ExperimentConfig& config, double shift);
/// Hull of the source box and every shifted target box in config.shifts.
DomainBox sweep_frame(const ExperimentConfig& config);

/// Runs one trial and throws on calibration or numeric failure.
TrialDetail run_trial_detailed(const ExperimentConfig& config, std::size_t degree, double shift,
                               std::size_t trial);
/// Runs one trial; failures are reported in the record's status.
TrialRecord run_trial(const ExperimentConfig& config, std::size_t degree, double shift, std::size_t trial);

/// All config.n_trials trials at one (degree, shift), in trial order.
/// Trials are distributed over OpenMP threads; workers <= 0 keeps the
/// runtime default.
std::vector<TrialRecord> run_trials(const ExperimentConfig& config, std::size_t degree, double shift,
                                    int workers = 0);
/// Single-threaded reference for run_trials().
std::vector<TrialRecord> run_trials_serial(const ExperimentConfig& config, std::size_t degree, double shift);

struct ShiftAggregate {
    double shift = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    Summary beta{};
    std::array<Summary, 3> lpfp{};
    std::array<Summary, 3> rmse{};
    Summary gain_vs_none{};  // LPFP(beta*) - LPFP(0)
    Summary gain_vs_full{};  // LPFP(beta*) - LPFP(1)
};

/// Mean and sd over the successful trials; failures are counted only.
ShiftAggregate aggregate(double shift, std::span<const TrialRecord> records);

struct SweepResult {
    std::string name;
    std::size_t degree = 0;
    std::vector<std::vector<TrialRecord>> trials;  // per shift
    std::vector<ShiftAggregate> rows;              // per shift
};

/// Runs every shift in config.shifts at one degree. For FrameMode::Fixed
/// without an explicit frame_box the sweep frame is used.
SweepResult sweep(const ExperimentConfig& config, std::size_t degree, int workers = 0);

/// Config with the frame resolved for a sweep (frame_box filled for Fixed).
ExperimentConfig resolve_frame(const ExperimentConfig& config);

/// Mean +- 2 sd band of the trial-mixture PFP at one beta mode.
struct BandRow {
    double x;
    double mean;
    double lo;
    double hi;
    std::string beta_mode;  // "b0", "bstar", "b1"
};

/// Plot-ready PFP bands over the frame of a one-dimensional experiment at
/// the given shift, pooled over the config's trials.
std::vector<BandRow> export_bands(const ExperimentConfig& config, std::size_t degree, double shift);

// ---------------------------------------------------------------------------
// Shipped scenarios

/// 1-D cubic truth, source [-0.2, 0.3], target width 0.4 moved right.
ExperimentConfig cubic_scenario();
/// Shifted Ishigami task on [-1, 1]^2.
ExperimentConfig ishigami_scenario();
/// Synthetic subsurface sweep moving either z2 ([1,2] -> [4,5]) or R3
/// ([7,9] -> [17,19]).
ExperimentConfig subsurface_scenario(SubsurfaceAxis axis);

}  // namespace pcetl
