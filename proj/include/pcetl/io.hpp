#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcetl/experiment.hpp"

namespace pcetl {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON conversions. Parsers throw SchemaError on missing, mistyped or
// unknown keys.

Json box_to_json(const DomainBox& box);
DomainBox box_from_json(const Json& j);

/// {"dimension", "mean", "cov"} with cov stored row-major.
Json dist_to_json(const GaussianDist& dist);
GaussianDist dist_from_json(const Json& j);

Json basis_to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const Json& j);

Json beta_result_to_json(const BetaResult& result, Objective objective);

Json config_to_json(const ExperimentConfig& config);
/// Fields absent from `j` keep their value in `base`. The model is rebuilt
/// from "model" and "model_parameters".
ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base = {});

/// Shipped scenario by name: cubic, ishigami, subsurface_z2, subsurface_r3.
ExperimentConfig scenario_by_name(const std::string& name);

/// Applies "a.b.c=value" to a JSON object. The value is read as JSON when it
/// parses, otherwise as a string.
void apply_override(Json& j, const std::string& assignment);

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that reads back to the same double.
std::string format_double(double value);

/// "# config: {...}" line written at the top of every CSV.
std::string config_comment(const Json& config);

void write_trials_csv(std::ostream& os, const Json& config, std::span<const TrialRecord> records);
/// Reads back what write_trials_csv wrote, skipping '#' lines.
std::vector<TrialRecord> read_trials_csv(std::istream& is);
void write_aggregate_csv(std::ostream& os, const Json& config, std::span<const ShiftAggregate> rows);
void write_bands_csv(std::ostream& os, const Json& config, std::span<const BandRow> rows);

struct Dataset {
    PointSet X;
    Vector Y;
};

/// Numeric CSV with `n_inputs` input columns and one output column. An
/// optional first header row and '#' comment lines are skipped.
Dataset read_dataset_csv(std::istream& is, std::size_t n_inputs);
void write_dataset_csv(std::ostream& os, const Dataset& data);

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it
/// into place, so a reader never sees a half-written file.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace pcetl
