#include "pcetl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pcetl/errors.hpp"
#include "pcetl/io.hpp"
#include "pcetl/predict.hpp"

namespace pcetl {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string command;
    std::optional<std::string> config_path;
    std::string out_dir = "pcetl-out";
    std::vector<std::string> sets;
    int workers = 0;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

void log(const std::string& message) { std::cerr << "pcetl: " << message << '\n'; }

Json load_settings(const Options& opt) {
    Json j = Json::object();
    if (opt.config_path) {
        j = Json::parse(read_text_file(*opt.config_path), nullptr, false);
        if (j.is_discarded()) throw SchemaError("config '" + *opt.config_path + "' is not valid JSON");
        if (!j.is_object()) throw SchemaError("config '" + *opt.config_path + "' must be a JSON object");
    }
    for (const std::string& s : opt.sets) apply_override(j, s);
    return j;
}

void check_keys(const Json& j, std::initializer_list<const char*> known, const std::string& command) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known) found = found || item.key() == k;
        if (!found) throw SchemaError(command + ": unknown config key '" + item.key() + "'");
    }
}

double number_or(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw SchemaError(std::string(key) + ": expected a number");
    return j.at(key).get<double>();
}

std::size_t count_or(const Json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_unsigned()) throw SchemaError(std::string(key) + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string string_at(const Json& j, const char* key, const std::string& command) {
    if (!j.contains(key)) throw SchemaError(command + ": missing config key '" + key + "'");
    if (!j.at(key).is_string()) throw SchemaError(std::string(key) + ": expected a string");
    return j.at(key).get<std::string>();
}

std::size_t first_row_width(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    }
    throw SchemaError("dataset: no data rows");
}

DomainBox bounding_box(const PointSet& X) {
    std::vector<double> lo(static_cast<std::size_t>(X.cols())), hi(lo.size());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        lo[static_cast<std::size_t>(c)] = X.col(c).minCoeff();
        hi[static_cast<std::size_t>(c)] = X.col(c).maxCoeff();
    }
    try {
        return DomainBox(lo, hi);
    } catch (const DomainError& e) {
        throw SchemaError(std::string("dataset: cannot infer a basis box (") + e.what() + "); set \"box\"");
    }
}

int cmd_fit(const Options& opt) {
    if (opt.seed) throw SchemaError("fit: --seed does not apply");
    const Json j = load_settings(opt);
    check_keys(j, {"dataset", "degree", "box", "noise_var", "condition_ceiling", "jitter", "noise_floor"}, "fit");
    const std::string dataset_path = string_at(j, "dataset", "fit");
    if (!j.contains("degree")) throw SchemaError("fit: missing config key 'degree'");
    const std::size_t degree = count_or(j, "degree", 0);
    std::optional<DomainBox> box;
    if (j.contains("box")) box = box_from_json(j.at("box"));
    std::optional<double> noise_var;
    if (j.contains("noise_var") && !j.at("noise_var").is_null()) noise_var = number_or(j, "noise_var", 0.0);
    LikelihoodOptions options;
    options.condition_ceiling = number_or(j, "condition_ceiling", options.condition_ceiling);
    options.jitter = number_or(j, "jitter", options.jitter);
    options.noise_floor = number_or(j, "noise_floor", options.noise_floor);

    const std::string text = read_text_file(dataset_path);
    std::istringstream in(text);
    const std::size_t n_inputs = box ? box->dimension() : first_row_width(text) - 1;
    if (n_inputs == 0) throw SchemaError("dataset: need at least one input column");
    Dataset data = read_dataset_csv(in, n_inputs);
    if (!box) box = bounding_box(data.X);

    BasisSpec basis(*box, degree);
    const LikelihoodFit fit = fit_likelihood(CalibrationTask(basis, data.X, data.Y, noise_var), options);
    const GaussianDist posterior = fuse_with_flat_prior(fit.dist);

    Json config{{"dataset", dataset_path},
                {"degree", degree},
                {"box", box_to_json(*box)},
                {"noise_var", noise_var ? Json(*noise_var) : Json(nullptr)},
                {"condition_ceiling", options.condition_ceiling},
                {"jitter", options.jitter},
                {"noise_floor", options.noise_floor}};
    Json artifact{{"config", config},
                  {"basis", basis_to_json(basis)},
                  {"posterior", dist_to_json(posterior)},
                  {"report",
                   {{"n_points", data.X.rows()},
                    {"condition_number", fit.condition_number},
                    {"residual_rmse", fit.residual_rmse},
                    {"noise_var", fit.noise_var},
                    {"noise_estimated", fit.noise_estimated}}}};
    fs::create_directories(opt.out_dir);
    write_text_file_atomic(fs::path(opt.out_dir) / "fit.json", artifact.dump(2) + "\n");
    log("fit: " + std::to_string(basis.size()) + " coefficients, cond(A^T A) = " +
        format_double(fit.condition_number) + ", wrote " + (fs::path(opt.out_dir) / "fit.json").string());
    return kExitOk;
}

struct Artifact {
    GaussianDist dist;
    std::optional<BasisSpec> basis;
};

Artifact load_artifact(const std::string& path) {
    const Json j = Json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError("'" + path + "' is not a JSON object");
    try {
        if (j.contains("posterior")) {
            Artifact a{dist_from_json(j.at("posterior")), std::nullopt};
            if (j.contains("basis")) a.basis = basis_from_json(j.at("basis"));
            return a;
        }
        return {dist_from_json(j), std::nullopt};
    } catch (const SchemaError& e) {
        throw SchemaError("'" + path + "': " + e.what());
    }
}

int cmd_transfer(const Options& opt) {
    if (opt.seed) throw SchemaError("transfer: --seed does not apply");
    const Json j = load_settings(opt);
    check_keys(j, {"source", "target", "objective", "scan_points", "tolerance", "beta_floor"}, "transfer");
    const std::string source_path = string_at(j, "source", "transfer");
    const std::string target_path = string_at(j, "target", "transfer");
    const Objective objective = parse_objective(j.contains("objective") ? string_at(j, "objective", "transfer") : "EDF");
    ScanOptions scan;
    scan.scan_points = count_or(j, "scan_points", scan.scan_points);
    scan.tolerance = number_or(j, "tolerance", scan.tolerance);
    const double beta_floor = number_or(j, "beta_floor", kDefaultBetaFloor);

    const Artifact source = load_artifact(source_path);
    const Artifact target = load_artifact(target_path);
    if (source.dist.dimension() != target.dist.dimension())
        throw SchemaError("transfer: source has " + std::to_string(source.dist.dimension()) +
                          " coefficients, target has " + std::to_string(target.dist.dimension()));
    if (source.basis && target.basis &&
        (!(source.basis->box() == target.basis->box()) || source.basis->degree() != target.basis->degree()))
        throw SchemaError("transfer: source and target artifacts use different bases");

    const TransferProblem problem(source.dist, target.dist, objective, beta_floor);
    const BetaResult result = optimize_beta(problem, scan);

    Json config{{"source", source_path},       {"target", target_path},     {"objective", std::string(to_string(objective))},
                {"scan_points", scan.scan_points}, {"tolerance", scan.tolerance}, {"beta_floor", beta_floor}};
    Json artifact{{"config", config}};
    const auto& basis = source.basis ? source.basis : target.basis;
    if (basis) artifact["basis"] = basis_to_json(*basis);
    artifact["result"] = beta_result_to_json(result, objective);
    fs::create_directories(opt.out_dir);
    write_text_file_atomic(fs::path(opt.out_dir) / "transfer.json", artifact.dump(2) + "\n");
    log("transfer: beta* = " + format_double(result.beta_star) + " (" + std::string(to_string(objective)) + ")");
    return kExitOk;
}

std::string stem(const ExperimentConfig& c, std::size_t degree) {
    return c.name + "_d" + std::to_string(degree);
}

std::vector<TrialRecord> shift_trials(const ExperimentConfig& config, const Json& config_json, std::size_t degree,
                                      std::size_t shift_index, const Options& opt) {
    const double shift = config.shifts[shift_index];
    const fs::path partial = fs::path(opt.out_dir) / "partial" /
                             (stem(config, degree) + "_s" + std::to_string(shift_index) + ".csv");
    const std::string tag = "# partial: " + Json{{"degree", degree}, {"shift", shift}}.dump() + "\n";
    const std::string prefix = config_comment(config_json) + tag;
    if (!opt.force && fs::exists(partial)) {
        const std::string text = read_text_file(partial);
        if (text.compare(0, prefix.size(), prefix) == 0) {
            std::istringstream in(text);
            std::vector<TrialRecord> records = read_trials_csv(in);
            if (records.size() == config.n_trials) {
                log(stem(config, degree) + ": shift " + format_double(shift) + " reused from " + partial.string());
                return records;
            }
        }
    }
    std::vector<TrialRecord> records = run_trials(config, degree, shift, opt.workers);
    std::size_t failed = 0;
    for (const TrialRecord& r : records) {
        if (r.ok()) continue;
        ++failed;
        log(stem(config, degree) + ": shift " + format_double(shift) + " trial " + std::to_string(r.trial) +
            " " + to_string(r.status) + ": " + r.message);
    }
    std::ostringstream body;
    write_trials_csv(body, config_json, records);
    std::string content = body.str();
    content.insert(config_comment(config_json).size(), tag);
    fs::create_directories(partial.parent_path());
    write_text_file_atomic(partial, content);
    log(stem(config, degree) + ": shift " + format_double(shift) + " done, " +
        std::to_string(records.size() - failed) + "/" + std::to_string(records.size()) + " trials ok");
    return records;
}

Json aggregate_to_json(const ShiftAggregate& a) {
    static constexpr std::array<const char*, 3> kModes{"b0", "bstar", "b1"};
    const auto summary = [](const Summary& s) {
        return Json{{"mean", std::isfinite(s.mean) ? Json(s.mean) : Json(nullptr)},
                    {"sd", std::isfinite(s.sd) ? Json(s.sd) : Json(nullptr)}};
    };
    Json lp = Json::object(), rm = Json::object();
    for (std::size_t k = 0; k < 3; ++k) {
        lp[kModes[k]] = summary(a.lpfp[k]);
        rm[kModes[k]] = summary(a.rmse[k]);
    }
    return Json{{"shift", a.shift},       {"n_ok", a.n_ok}, {"n_failed", a.n_failed},
                {"beta_star", summary(a.beta)}, {"lpfp", lp},     {"rmse", rm}};
}

Json run_config(const ExperimentConfig& raw, const Options& opt) {
    const ExperimentConfig config = resolve_frame(raw);
    const Json config_json = config_to_json(config);
    const fs::path out(opt.out_dir);
    Json results = Json::array();
    for (const std::size_t degree : config.degrees) {
        std::vector<TrialRecord> all;
        std::vector<ShiftAggregate> rows;
        std::vector<double> shifts, betas;
        for (std::size_t i = 0; i < config.shifts.size(); ++i) {
            std::vector<TrialRecord> records = shift_trials(config, config_json, degree, i, opt);
            rows.push_back(aggregate(config.shifts[i], records));
            shifts.push_back(config.shifts[i]);
            betas.push_back(rows.back().beta.mean);
            all.insert(all.end(), records.begin(), records.end());
        }
        std::ostringstream trials_csv, aggregate_csv;
        write_trials_csv(trials_csv, config_json, all);
        write_aggregate_csv(aggregate_csv, config_json, rows);
        write_text_file_atomic(out / (stem(config, degree) + "_trials.csv"), trials_csv.str());
        write_text_file_atomic(out / (stem(config, degree) + "_aggregate.csv"), aggregate_csv.str());

        Json bands = Json::object();
        if (config.source_box.dimension() == 1) {
            for (const auto& [label, shift] : config.band_scenarios) {
                std::ostringstream bands_csv;
                write_bands_csv(bands_csv, config_json, export_bands(config, degree, shift));
                const std::string file = stem(config, degree) + "_bands_" + label + ".csv";
                write_text_file_atomic(out / file, bands_csv.str());
                bands[label] = Json{{"shift", shift}, {"file", file}};
            }
        }
        Json per_shift = Json::array();
        for (const ShiftAggregate& a : rows) per_shift.push_back(aggregate_to_json(a));
        const double rho = spearman(shifts, betas);
        results.push_back(Json{{"degree", degree},
                               {"spearman_beta_vs_shift", std::isfinite(rho) ? Json(rho) : Json(nullptr)},
                               {"shifts", per_shift},
                               {"bands", bands}});
        log(stem(config, degree) + ": wrote trials, aggregate" + (bands.empty() ? "" : " and band") + " CSVs");
    }
    return Json{{"name", config.name}, {"config", config_json}, {"results", results}};
}

int cmd_sweep(const Options& opt, const std::vector<std::string>& scenarios) {
    Json j = load_settings(opt);
    if (opt.seed) j["seed"] = *opt.seed;
    std::vector<ExperimentConfig> configs;
    if (scenarios.empty()) {
        ExperimentConfig base;
        if (j.contains("scenario")) {
            if (!j.at("scenario").is_string()) throw SchemaError("scenario: expected a string");
            base = scenario_by_name(j.at("scenario").get<std::string>());
        } else if (!j.contains("model")) {
            throw SchemaError("sweep: config needs \"scenario\" or \"model\"");
        }
        configs.push_back(config_from_json(j, base));
    } else {
        if (j.contains("scenario")) throw SchemaError(opt.command + ": \"scenario\" is fixed by the command");
        for (const std::string& name : scenarios) configs.push_back(config_from_json(j, scenario_by_name(name)));
        if (configs.size() > 1 && j.contains("name"))
            throw SchemaError(opt.command + ": \"name\" cannot be overridden for a multi-sweep command");
    }
    fs::create_directories(opt.out_dir);
    Json summary{{"command", opt.command}, {"scenarios", Json::array()}};
    for (const ExperimentConfig& c : configs) summary["scenarios"].push_back(run_config(c, opt));
    write_text_file_atomic(fs::path(opt.out_dir) / "summary.json", summary.dump(2) + "\n");
    log("wrote " + (fs::path(opt.out_dir) / "summary.json").string());
    return kExitOk;
}

int dispatch(const Options& opt) {
    if (opt.command == "fit") return cmd_fit(opt);
    if (opt.command == "transfer") return cmd_transfer(opt);
    if (opt.command == "sweep") return cmd_sweep(opt, {});
    if (opt.command == "repro-cubic") return cmd_sweep(opt, {"cubic"});
    if (opt.command == "repro-ishigami") return cmd_sweep(opt, {"ishigami"});
    if (opt.command == "repro-subsurface-synthetic") return cmd_sweep(opt, {"subsurface_z2", "subsurface_r3"});
    throw SchemaError("unknown command '" + opt.command + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Tempered Bayesian transfer learning for polynomial chaos surrogates", "pcetl"};
    Options opt;
    std::uint64_t seed = 0;
    std::string config_path;
    app.add_option("command", opt.command, "fit | transfer | sweep | repro-cubic | repro-ishigami | "
                                           "repro-subsurface-synthetic")
        ->required()
        ->check(CLI::IsMember({"fit", "transfer", "sweep", "repro-cubic", "repro-ishigami",
                               "repro-subsurface-synthetic"}));
    auto* config_opt = app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    app.add_option("--set", opt.sets, "Override a config key, key=value (repeatable)")->allow_extra_args(false);
    app.add_option("--workers", opt.workers, "Threads for trial execution (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Master seed");
    app.add_flag("--force", opt.force, "Recompute shifts that have partial results");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    if (*config_opt) opt.config_path = config_path;
    if (*seed_opt) opt.seed = seed;

    try {
        return dispatch(opt);
    } catch (const SchemaError& e) {
        log(std::string("schema error: ") + e.what());
        return kExitUsage;
    } catch (const DomainError& e) {
        log(std::string("domain error: ") + e.what());
        return kExitUsage;
    } catch (const CalibrationError& e) {
        log(std::string("calibration error: ") + e.what());
        return kExitNumeric;
    } catch (const NumericError& e) {
        log(std::string("numeric error: ") + e.what());
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        log(std::string("file error: ") + e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return kExitNumeric;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"pcetl"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pcetl
