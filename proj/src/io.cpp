#include "pcetl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "pcetl/errors.hpp"

namespace pcetl {

namespace {

[[noreturn]] void schema_fail(const std::string& what) { throw SchemaError(what); }

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) schema_fail(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!known.contains(item.key())) schema_fail(where + ": unknown key '" + item.key() + "'");
}

const Json& require(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) schema_fail(where + ": missing key '" + key + "'");
    return j.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        schema_fail(what + ": wrong type (" + j.dump() + ")");
    }
}

double get_number(const Json& j, const std::string& what) {
    if (!j.is_number()) schema_fail(what + ": expected a number, got " + j.dump());
    return j.get<double>();
}

std::size_t get_count(const Json& j, const std::string& what) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        schema_fail(what + ": expected a non-negative integer, got " + j.dump());
    return j.get<std::size_t>();
}

std::vector<double> get_numbers(const Json& j, const std::string& what) {
    if (!j.is_array()) schema_fail(what + ": expected an array of numbers");
    std::vector<double> out;
    for (const Json& v : j) out.push_back(get_number(v, what));
    return out;
}

std::string shift_mode_name(ShiftMode m) {
    return m == ShiftMode::TranslateTarget ? "translate-target" : "task-parameter";
}

std::string frame_name(FrameMode m) { return m == FrameMode::Encompassing ? "encompassing" : "fixed"; }

Json json_double(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

Json box_to_json(const DomainBox& box) { return Json{{"lower", box.lower()}, {"upper", box.upper()}}; }

DomainBox box_from_json(const Json& j) {
    reject_unknown(j, {"lower", "upper"}, "box");
    try {
        return DomainBox(get_numbers(require(j, "lower", "box"), "box.lower"),
                         get_numbers(require(j, "upper", "box"), "box.upper"));
    } catch (const DomainError& e) {
        schema_fail(std::string("box: ") + e.what());
    }
}

namespace {

DomainBox box_over(const Json& j, const std::optional<DomainBox>& base) {
    if (!base || !j.is_object()) return box_from_json(j);
    Json full = box_to_json(*base);
    for (const auto& item : j.items()) full[item.key()] = item.value();
    return box_from_json(full);
}

}  // namespace

Json dist_to_json(const GaussianDist& dist) {
    const Eigen::Index p = dist.dimension();
    std::vector<double> mean(dist.mean().data(), dist.mean().data() + p);
    std::vector<double> cov;
    cov.reserve(static_cast<std::size_t>(p * p));
    for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index c = 0; c < p; ++c) cov.push_back(dist.cov()(r, c));
    return Json{{"dimension", p}, {"mean", mean}, {"cov", cov}};
}

GaussianDist dist_from_json(const Json& j) {
    reject_unknown(j, {"dimension", "mean", "cov"}, "gaussian");
    const std::size_t p = get_count(require(j, "dimension", "gaussian"), "gaussian.dimension");
    const std::vector<double> mean = get_numbers(require(j, "mean", "gaussian"), "gaussian.mean");
    const std::vector<double> cov = get_numbers(require(j, "cov", "gaussian"), "gaussian.cov");
    if (p == 0 || mean.size() != p || cov.size() != p * p)
        schema_fail("gaussian: mean/cov sizes do not match dimension " + std::to_string(p));
    const auto n = static_cast<Eigen::Index>(p);
    Vector mu = Eigen::Map<const Vector>(mean.data(), n);
    Matrix sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), n, n);
    try {
        return GaussianDist(std::move(mu), std::move(sigma));
    } catch (const DomainError& e) {
        schema_fail(std::string("gaussian: ") + e.what());
    }
}

Json basis_to_json(const BasisSpec& basis) {
    return Json{{"family", "legendre-total-order"},
                {"box", box_to_json(basis.box())},
                {"degree", basis.degree()},
                {"size", basis.size()}};
}

BasisSpec basis_from_json(const Json& j) {
    reject_unknown(j, {"family", "box", "degree", "size"}, "basis");
    if (j.contains("family") && j.at("family") != "legendre-total-order")
        schema_fail("basis: unsupported family " + j.at("family").dump());
    BasisSpec basis(box_from_json(require(j, "box", "basis")),
                    get_count(require(j, "degree", "basis"), "basis.degree"));
    if (j.contains("size") && get_count(j.at("size"), "basis.size") != basis.size())
        schema_fail("basis: size does not match box dimension and degree");
    return basis;
}

Json beta_result_to_json(const BetaResult& result, Objective objective) {
    Json curve_value = Json::array();
    for (const double v : result.curve_value) curve_value.push_back(json_double(v));
    return Json{{"objective", std::string(to_string(objective))},
                {"beta_star", result.beta_star},
                {"objective_at_star", json_double(result.objective_at_star)},
                {"curve", Json{{"beta", result.curve_beta}, {"value", curve_value}}},
                {"posterior", dist_to_json(result.tempered_posterior)}};
}

Json config_to_json(const ExperimentConfig& c) {
    Json bands = Json::object();
    for (const auto& [label, shift] : c.band_scenarios) bands[label] = shift;
    Json params = Json::object();
    for (const auto& [key, value] : c.model.parameters) params[key] = value;
    return Json{
        {"name", c.name},
        {"model", c.model.name},
        {"model_parameters", params},
        {"source_box", box_to_json(c.source_box)},
        {"target_box", box_to_json(c.target_box)},
        {"degrees", c.degrees},
        {"shifts", c.shifts},
        {"n_source", c.n_source},
        {"n_target", c.n_target},
        {"n_val", c.n_val},
        {"n_trials", c.n_trials},
        {"noise_sd", c.noise_sd},
        {"likelihood_noise_sd", c.likelihood_noise_sd ? Json(*c.likelihood_noise_sd) : Json(nullptr)},
        {"pfp_noise_var", c.pfp_noise_var},
        {"sampler", to_string(c.sampler)},
        {"objective", std::string(to_string(c.objective))},
        {"seed", c.seed},
        {"shift_mode", shift_mode_name(c.shift_mode)},
        {"shift_axis", c.shift_axis},
        {"shift_parameter", c.shift_parameter},
        {"frame", frame_name(c.frame)},
        {"frame_box", c.frame_box ? box_to_json(*c.frame_box) : Json(nullptr)},
        {"beta_floor", c.beta_floor},
        {"scan_points", c.scan_points},
        {"condition_ceiling", c.condition_ceiling},
        {"band_scenarios", bands},
        {"band_points", c.band_points},
    };
}

ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base) {
    static const std::set<std::string> known{
        "name",       "model",         "model_parameters", "source_box",     "target_box",   "degrees",
        "shifts",     "n_source",      "n_target",         "n_val",          "n_trials",     "noise_sd",
        "likelihood_noise_sd",         "pfp_noise_var",    "sampler",        "objective",    "seed",
        "shift_mode", "shift_axis",    "shift_parameter",  "frame",          "frame_box",    "beta_floor",
        "scan_points", "condition_ceiling", "band_scenarios", "band_points", "scenario"};
    reject_unknown(j, known, "config");
    ExperimentConfig c = base;
    try {
        if (j.contains("name")) c.name = get_as<std::string>(j.at("name"), "name");
        if (j.contains("model")) c.model = model_by_name(get_as<std::string>(j.at("model"), "model"));
        if (j.contains("model_parameters")) {
            const Json& params = j.at("model_parameters");
            if (!params.is_object()) schema_fail("model_parameters: expected an object");
            for (const auto& item : params.items()) {
                if (!c.model.parameters.contains(item.key()))
                    schema_fail("model_parameters: model '" + c.model.name + "' has no parameter '" + item.key() +
                                "'");
                c.model.parameters[item.key()] = get_number(item.value(), "model_parameters." + item.key());
            }
        }
        if (j.contains("source_box")) c.source_box = box_over(j.at("source_box"), c.source_box);
        if (j.contains("target_box")) c.target_box = box_over(j.at("target_box"), c.target_box);
        if (j.contains("degrees")) {
            if (!j.at("degrees").is_array()) schema_fail("degrees: expected an array");
            c.degrees.clear();
            for (const Json& d : j.at("degrees")) c.degrees.push_back(get_count(d, "degrees"));
        }
        if (j.contains("shifts")) c.shifts = get_numbers(j.at("shifts"), "shifts");
        if (j.contains("n_source")) c.n_source = get_count(j.at("n_source"), "n_source");
        if (j.contains("n_target")) c.n_target = get_count(j.at("n_target"), "n_target");
        if (j.contains("n_val")) c.n_val = get_count(j.at("n_val"), "n_val");
        if (j.contains("n_trials")) c.n_trials = get_count(j.at("n_trials"), "n_trials");
        if (j.contains("noise_sd")) c.noise_sd = get_number(j.at("noise_sd"), "noise_sd");
        if (j.contains("likelihood_noise_sd")) {
            const Json& v = j.at("likelihood_noise_sd");
            c.likelihood_noise_sd =
                v.is_null() ? std::nullopt : std::optional<double>(get_number(v, "likelihood_noise_sd"));
        }
        if (j.contains("pfp_noise_var")) c.pfp_noise_var = get_number(j.at("pfp_noise_var"), "pfp_noise_var");
        if (j.contains("sampler")) c.sampler = parse_sampler(get_as<std::string>(j.at("sampler"), "sampler"));
        if (j.contains("objective"))
            c.objective = parse_objective(get_as<std::string>(j.at("objective"), "objective"));
        if (j.contains("seed")) c.seed = get_count(j.at("seed"), "seed");
        if (j.contains("shift_mode")) {
            const auto m = get_as<std::string>(j.at("shift_mode"), "shift_mode");
            if (m == "translate-target") c.shift_mode = ShiftMode::TranslateTarget;
            else if (m == "task-parameter") c.shift_mode = ShiftMode::TaskParameter;
            else schema_fail("shift_mode: expected translate-target or task-parameter, got '" + m + "'");
        }
        if (j.contains("shift_axis")) c.shift_axis = get_count(j.at("shift_axis"), "shift_axis");
        if (j.contains("shift_parameter"))
            c.shift_parameter = get_as<std::string>(j.at("shift_parameter"), "shift_parameter");
        if (j.contains("frame")) {
            const auto m = get_as<std::string>(j.at("frame"), "frame");
            if (m == "encompassing") c.frame = FrameMode::Encompassing;
            else if (m == "fixed") c.frame = FrameMode::Fixed;
            else schema_fail("frame: expected encompassing or fixed, got '" + m + "'");
        }
        if (j.contains("frame_box")) {
            const Json& v = j.at("frame_box");
            c.frame_box = v.is_null() ? std::nullopt : std::optional<DomainBox>(box_over(v, c.frame_box));
        }
        if (j.contains("beta_floor")) c.beta_floor = get_number(j.at("beta_floor"), "beta_floor");
        if (j.contains("scan_points")) c.scan_points = get_count(j.at("scan_points"), "scan_points");
        if (j.contains("condition_ceiling"))
            c.condition_ceiling = get_number(j.at("condition_ceiling"), "condition_ceiling");
        if (j.contains("band_scenarios")) {
            const Json& b = j.at("band_scenarios");
            if (!b.is_object()) schema_fail("band_scenarios: expected an object of label -> shift");
            c.band_scenarios.clear();
            for (const auto& item : b.items())
                c.band_scenarios[item.key()] = get_number(item.value(), "band_scenarios." + item.key());
        }
        if (j.contains("band_points")) c.band_points = get_count(j.at("band_points"), "band_points");
        c.validate();
    } catch (const DomainError& e) {
        schema_fail(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig scenario_by_name(const std::string& name) {
    if (name == "cubic") return cubic_scenario();
    if (name == "ishigami") return ishigami_scenario();
    if (name == "subsurface_z2") return subsurface_scenario(kZ2);
    if (name == "subsurface_r3") return subsurface_scenario(kR3);
    schema_fail("unknown scenario '" + name + "' (expected cubic, ishigami, subsurface_z2 or subsurface_r3)");
}

void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) schema_fail("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    Json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) schema_fail("--set: empty path component in '" + key + "'");
        if (!node->is_object()) {
            if (!node->is_null()) schema_fail("--set: '" + key + "' descends into a non-object");
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string config_comment(const Json& config) { return "# config: " + config.dump() + "\n"; }

namespace {

double parse_double(const std::string& field, const std::string& where) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last)
        schema_fail(where + ": not a number: '" + field + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (comma == std::string::npos) return out;
        start = comma + 1;
    }
}

bool skippable(const std::string& line) {
    const auto b = line.find_first_not_of(" \t\r");
    return b == std::string::npos || line[b] == '#';
}

constexpr const char* kTrialHeader =
    "trial,shift,beta_star,lpfp_b0,lpfp_bstar,lpfp_b1,rmse_b0,rmse_bstar,rmse_b1,status";

}  // namespace

void write_trials_csv(std::ostream& os, const Json& config, std::span<const TrialRecord> records) {
    os << config_comment(config) << kTrialHeader << '\n';
    for (const TrialRecord& r : records) {
        os << r.trial << ',' << format_double(r.shift) << ',' << format_double(r.beta_star);
        for (const double v : r.lpfp_at) os << ',' << format_double(v);
        for (const double v : r.rmse_at) os << ',' << format_double(v);
        os << ',' << to_string(r.status) << '\n';
    }
}

std::vector<TrialRecord> read_trials_csv(std::istream& is) {
    std::vector<TrialRecord> out;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (skippable(line)) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header) {
            if (line != kTrialHeader) schema_fail("trials csv: unexpected header '" + line + "'");
            header = true;
            continue;
        }
        const auto f = split_csv_line(line);
        const std::string where = "trials csv line " + std::to_string(lineno);
        if (f.size() != 10) schema_fail(where + ": expected 10 fields");
        TrialRecord r;
        std::size_t trial = 0;
        const auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), trial);
        if (res.ec != std::errc() || res.ptr != f[0].data() + f[0].size())
            schema_fail(where + ": bad trial index '" + f[0] + "'");
        r.trial = trial;
        r.shift = parse_double(f[1], where);
        r.beta_star = parse_double(f[2], where);
        for (std::size_t k = 0; k < 3; ++k) {
            r.lpfp_at[k] = parse_double(f[3 + k], where);
            r.rmse_at[k] = parse_double(f[6 + k], where);
        }
        r.status = parse_trial_status(f[9]);
        out.push_back(std::move(r));
    }
    if (!header) schema_fail("trials csv: missing header");
    return out;
}

void write_aggregate_csv(std::ostream& os, const Json& config, std::span<const ShiftAggregate> rows) {
    static constexpr std::array<const char*, 3> kModes{"b0", "bstar", "b1"};
    os << config_comment(config) << "shift,n_ok,n_failed,beta_star_mean,beta_star_sd";
    for (const char* m : kModes) os << ",lpfp_" << m << "_mean,lpfp_" << m << "_sd";
    for (const char* m : kModes) os << ",rmse_" << m << "_mean,rmse_" << m << "_sd";
    os << ",gain_vs_b0_mean,gain_vs_b0_sd,gain_vs_b1_mean,gain_vs_b1_sd\n";
    const auto put = [&os](const Summary& s) { os << ',' << format_double(s.mean) << ',' << format_double(s.sd); };
    for (const ShiftAggregate& a : rows) {
        os << format_double(a.shift) << ',' << a.n_ok << ',' << a.n_failed;
        put(a.beta);
        for (const Summary& s : a.lpfp) put(s);
        for (const Summary& s : a.rmse) put(s);
        put(a.gain_vs_none);
        put(a.gain_vs_full);
        os << '\n';
    }
}

void write_bands_csv(std::ostream& os, const Json& config, std::span<const BandRow> rows) {
    os << config_comment(config) << "x,mean,lo,hi,beta_mode\n";
    for (const BandRow& r : rows)
        os << format_double(r.x) << ',' << format_double(r.mean) << ',' << format_double(r.lo) << ','
           << format_double(r.hi) << ',' << r.beta_mode << '\n';
}

Dataset read_dataset_csv(std::istream& is, std::size_t n_inputs) {
    const std::size_t cols = n_inputs + 1;
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    bool first_row = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (skippable(line)) continue;
        const auto f = split_csv_line(line);
        const std::string where = "dataset line " + std::to_string(lineno);
        if (f.size() != cols)
            schema_fail(where + ": expected " + std::to_string(cols) + " columns, found " + std::to_string(f.size()));
        if (first_row) {
            first_row = false;
            bool numeric = true;
            for (const std::string& s : f) {
                double v = 0.0;
                const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
                numeric = numeric && res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
            }
            if (!numeric) continue;  // header row
        }
        for (const std::string& s : f) {
            const double v = parse_double(s, where);
            if (!std::isfinite(v)) schema_fail(where + ": non-finite value");
            values.push_back(v);
        }
    }
    const std::size_t rows = values.size() / cols;
    if (rows == 0) schema_fail("dataset: no data rows");
    Dataset data{PointSet(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_inputs)),
                 Vector(static_cast<Eigen::Index>(rows))};
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n_inputs; ++c)
            data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
        data.Y[static_cast<Eigen::Index>(r)] = values[r * cols + n_inputs];
    }
    return data;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) os << 'x' << c + 1 << ',';
    os << "y\n";
    for (Eigen::Index r = 0; r < data.X.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.X.cols(); ++c) os << format_double(data.X(r, c)) << ',';
        os << format_double(data.Y[r]) << '\n';
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) schema_fail("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace pcetl
