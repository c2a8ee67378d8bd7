#include "macsic/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>

#include "macsic/poweropt.hpp"
#include "macsic/simulator.hpp"
#include "macsic/version.hpp"

namespace macsic {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double x) { return 10.0 * std::log10(x); }

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw config_error("config field '" + field + "': " + why);
}

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw config_error(ctx + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!ok.count(item.key()))
            throw config_error("unknown field '" + item.key() + "' in " + ctx);
}

const json& require(const json& obj, const std::string& field) {
    auto it = obj.find(field);
    if (it == obj.end()) bad_field(field, "missing");
    return *it;
}

double get_number(const json& obj, const std::string& field) {
    const json& v = require(obj, field);
    if (!v.is_number()) bad_field(field, "must be a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& field, double dflt) {
    if (!obj.contains(field)) return dflt;
    return get_number(obj, field);
}

int get_int(const json& obj, const std::string& field) {
    const json& v = require(obj, field);
    if (!v.is_number_integer()) bad_field(field, "must be an integer");
    return v.get<int>();
}

int get_int_or(const json& obj, const std::string& field, int dflt) {
    if (!obj.contains(field)) return dflt;
    return get_int(obj, field);
}

bool get_bool_or(const json& obj, const std::string& field, bool dflt) {
    if (!obj.contains(field)) return dflt;
    const json& v = obj.at(field);
    if (!v.is_boolean()) bad_field(field, "must be a boolean");
    return v.get<bool>();
}

// either an array of numbers or {"from": a, "to": b, "count": n}
std::vector<double> get_grid(const json& obj, const std::string& field) {
    const json& v = require(obj, field);
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) bad_field(field, "array entries must be numbers");
            out.push_back(x.get<double>());
        }
        if (out.empty()) bad_field(field, "must not be empty");
        return out;
    }
    check_keys(v, "'" + field + "'", {"from", "to", "count"});
    const double from = get_number(v, "from");
    const double to = get_number(v, "to");
    const int count = get_int(v, "count");
    if (count < 1) bad_field(field + ".count", "must be >= 1");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = count == 1 ? from : from + (to - from) * i / (count - 1);
    return out;
}

std::vector<int> get_int_list(const json& obj, const std::string& field) {
    const json& v = require(obj, field);
    if (!v.is_array() || v.empty()) bad_field(field, "must be a non-empty array");
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) bad_field(field, "entries must be integers");
        out.push_back(x.get<int>());
    }
    return out;
}

BoundKind get_bound(const json& obj, const std::string& field,
                    BoundKind dflt) {
    if (!obj.contains(field)) return dflt;
    const json& v = obj.at(field);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "upper") return BoundKind::UpperResidual;
        if (s == "lower") return BoundKind::LowerResidual;
    }
    bad_field(field, "must be \"upper\" or \"lower\"");
}

PowerProfile get_profile(const json& obj, const std::string& field) {
    const json& v = require(obj, field);
    if (!v.is_array() || v.empty())
        bad_field(field, "must be a non-empty array of groups");
    std::vector<PowerGroup> groups;
    for (const auto& g : v) {
        check_keys(g, "'" + field + "' entry", {"fraction", "power"});
        groups.push_back({get_number(g, "fraction"), get_number(g, "power")});
    }
    try {
        return PowerProfile(std::move(groups));
    } catch (const std::invalid_argument& e) {
        bad_field(field, e.what());
    }
}

std::optional<FadingModel> get_fading(const json& obj) {
    if (!obj.contains("fading") || obj.at("fading").is_null())
        return std::nullopt;
    const json& v = obj.at("fading");
    check_keys(v, "'fading'", {"levels", "weights", "probabilities"});
    try {
        if (v.contains("levels")) {
            if (v.contains("weights") || v.contains("probabilities"))
                bad_field("fading", "give either levels or explicit weights");
            return FadingModel::inverse_square(get_int(v, "levels"));
        }
        std::vector<double> w, pr;
        for (const auto& x : require(v, "weights")) w.push_back(x.get<double>());
        for (const auto& x : require(v, "probabilities"))
            pr.push_back(x.get<double>());
        return FadingModel(std::move(w), std::move(pr));
    } catch (const std::invalid_argument& e) {
        bad_field("fading", e.what());
    }
}

CodeSpec get_code(const json& obj) {
    try {
        return CodeSpec(get_int(obj, "K"), get_number(obj, "N"));
    } catch (const std::invalid_argument& e) {
        bad_field("K/N", e.what());
    }
}

QuadratureRule get_rule(const json& obj) {
    const int n = get_int_or(obj, "quadrature_n", 300);
    try {
        return gauss_hermite(n);
    } catch (const std::invalid_argument& e) {
        bad_field("quadrature_n", e.what());
    }
}

/// CSV artifact: '#'-prefixed metadata lines, a header row, data rows.
/// Written to a temp file and renamed on success; the temp file is
/// removed if the run dies first.
class CsvFile {
public:
    CsvFile(const std::filesystem::path& out_dir, const std::string& name,
            const ExperimentConfig& config) {
        std::filesystem::create_directories(out_dir);
        final_path_ = out_dir / (name + ".csv");
        tmp_path_ = out_dir / (name + ".csv.tmp");
        stream_.open(tmp_path_, std::ios::trunc);
        if (!stream_)
            throw config_error("cannot write to output directory " +
                               out_dir.string());
        meta("command", config.command);
        meta("seed", std::to_string(config.seed));
        meta("version", std::string("macsic ") + kVersion);
    }

    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    ~CsvFile() {
        if (!committed_) {
            stream_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_path_, ec);
        }
    }

    void meta(const std::string& key, const std::string& value) {
        stream_ << "# " << key << ' ' << value << '\n';
    }

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            stream_ << (i ? "," : "") << columns[i];
        stream_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            stream_ << (i ? "," : "") << cells[i];
        stream_ << '\n';
    }

    std::filesystem::path commit() {
        stream_.flush();
        if (!stream_) throw config_error("failed writing " + tmp_path_.string());
        stream_.close();
        std::filesystem::rename(tmp_path_, final_path_);
        committed_ = true;
        return final_path_;
    }

private:
    std::filesystem::path final_path_, tmp_path_;
    std::ofstream stream_;
    bool committed_ = false;
};

ExperimentOutput run_pe_curve(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "pe-curve parameters", {"K", "ebno_db", "quadrature_n"});
    std::vector<int> bits;
    if (p.at("K").is_array())
        bits = get_int_list(p, "K");
    else
        bits.push_back(get_int(p, "K"));
    const auto ebno_db = get_grid(p, "ebno_db");
    const auto rule = get_rule(p);

    CsvFile csv(config.out_dir, "pe-curve", config);
    csv.header({"K", "ebno_db", "pe", "pe_lower_bound"});
    std::size_t rows = 0;
    try {
        for (int K : bits) {
            for (double db : ebno_db) {
                const double ebno = db_to_linear(db);
                csv.row({std::to_string(K), fmt17(db),
                         fmt17(single_user_pe(K, ebno, rule)),
                         fmt17(pe_lower_bound(K, ebno))});
                ++rows;
            }
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("pe-curve: ") + e.what());
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    out.summary_lines.push_back("pe-curve: " + std::to_string(rows) + " rows");
    return out;
}

ExperimentOutput run_evolve(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "evolve parameters",
               {"K", "N", "profile", "bound", "max_iter", "tol", "quadrature_n"});
    const CodeSpec code = get_code(p);
    const PowerProfile profile = get_profile(p, "profile");
    EvolveOptions opts;
    opts.bound = get_bound(p, "bound", BoundKind::UpperResidual);
    opts.max_iter = get_int_or(p, "max_iter", 10000);
    opts.tol = get_number_or(p, "tol", 1e-9);
    const auto rule = get_rule(p);

    std::vector<EvolutionState> traj;
    try {
        traj = evolve(code, profile, rule, opts);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("evolve: ") + e.what());
    }

    CsvFile csv(config.out_dir, "evolve", config);
    std::vector<std::string> cols{"iteration", "eta"};
    for (std::size_t j = 1; j <= profile.size(); ++j)
        cols.push_back("v_" + std::to_string(j));
    csv.meta("eta_final", fmt17(traj.back().eta));
    csv.header(cols);
    for (const auto& state : traj) {
        std::vector<std::string> cells{std::to_string(state.iteration),
                                       fmt17(state.eta)};
        for (double v : state.residual_fractions) cells.push_back(fmt17(v));
        csv.row(cells);
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    out.summary_lines.push_back("evolve: eta_final " + fmt17(traj.back().eta) +
                                " after " +
                                std::to_string(traj.back().iteration) +
                                " iterations");
    return out;
}

ExperimentOutput run_optimize(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "optimize parameters",
               {"K", "N", "target_pe", "bound", "margin", "powers",
                "power_grid", "eta_points", "nest_steps", "single_group_refine",
                "fading", "quadrature_n"});
    const CodeSpec code = get_code(p);
    const double target = get_number(p, "target_pe");
    const BoundKind bound = get_bound(p, "bound", BoundKind::UpperResidual);
    const auto fading = get_fading(p);
    const auto rule = get_rule(p);

    OptimizeOptions opts;
    opts.margin = get_number_or(p, "margin", 1e-3);
    opts.eta_points = get_int_or(p, "eta_points", 256);
    opts.nest_steps = get_int_or(p, "nest_steps", 30);
    opts.single_group_refine = get_bool_or(p, "single_group_refine", true);

    std::vector<double> grid;
    try {
        if (p.contains("powers")) {
            if (p.contains("power_grid"))
                bad_field("powers", "give either powers or power_grid");
            grid = get_grid(p, "powers");
        } else {
            int count = 128;
            double span_db = fading ? 50.0 : 30.0;
            if (p.contains("power_grid")) {
                const json& g = p.at("power_grid");
                check_keys(g, "'power_grid'", {"count", "span_db"});
                count = get_int_or(g, "count", count);
                span_db = get_number_or(g, "span_db", span_db);
            }
            grid = default_power_grid(code, target, rule, count, span_db);
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("optimize: ") + e.what());
    }

    OptimizeResult res;
    try {
        res = optimize_profile(code, target, grid, bound, rule,
                               fading ? &*fading : nullptr, opts);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("optimize: ") + e.what());
    }

    CsvFile csv(config.out_dir, "optimize", config);
    csv.meta("feasible", res.feasible ? "1" : "0");
    if (res.feasible) {
        csv.meta("total_power", fmt17(res.total_power));
        csv.meta("achieved_pe", fmt17(res.achieved_pe));
        csv.meta("eta_hi", fmt17(res.eta_hi));
        csv.meta("ebno_db", fmt17(linear_to_db(res.total_power /
                                               (2.0 * code.rate()))));
    } else {
        csv.meta("binding_eta", fmt17(res.binding_eta));
    }
    csv.header({"group", "fade_level", "alpha", "power", "transmit_power"});
    int idx = 1;
    for (const auto& e : res.entries) {
        csv.row({std::to_string(idx++), std::to_string(e.fade_level),
                 fmt17(e.fraction), fmt17(e.power), fmt17(e.transmit_power)});
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    if (res.feasible) {
        out.summary_lines.push_back(
            "optimize: total_power " + fmt17(res.total_power) + " achieved_pe " +
            fmt17(res.achieved_pe) + " groups " +
            std::to_string(res.entries.size()));
    } else {
        out.summary_lines.push_back("optimize: infeasible, binding_eta " +
                                    fmt17(res.binding_eta));
    }
    return out;
}

ExperimentOutput run_tradeoff(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "tradeoff parameters",
               {"K", "target_pe", "ebno_db", "rate_lo", "rate_hi",
                "rate_bisect_steps", "power_grid", "margin", "eta_points",
                "nest_steps", "fading", "quadrature_n"});
    const int bits = get_int(p, "K");
    const double target = get_number(p, "target_pe");
    const auto ebno_db = get_grid(p, "ebno_db");
    const auto fading = get_fading(p);
    const auto rule = get_rule(p);

    TradeoffOptions opts;
    opts.rate_lo = get_number_or(p, "rate_lo", 1e-2);
    opts.rate_hi = get_number_or(p, "rate_hi", 32.0);
    opts.rate_bisect_steps = get_int_or(p, "rate_bisect_steps", 12);
    opts.threads = config.threads;
    opts.optimize.margin = get_number_or(p, "margin", 1e-3);
    opts.optimize.eta_points = get_int_or(p, "eta_points", 256);
    opts.optimize.nest_steps = get_int_or(p, "nest_steps", 18);
    if (p.contains("power_grid")) {
        const json& g = p.at("power_grid");
        check_keys(g, "'power_grid'", {"count", "span_db"});
        opts.power_grid_size = get_int_or(g, "count", opts.power_grid_size);
        opts.power_span_db = get_number_or(g, "span_db", opts.power_span_db);
    }

    std::vector<TradeoffPoint> points;
    try {
        points = tradeoff_sweep(bits, ebno_db, target, rule,
                                fading ? &*fading : nullptr, opts);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("tradeoff: ") + e.what());
    }

    CsvFile csv(config.out_dir, "tradeoff", config);
    std::vector<std::string> cols{"K", "R", "ebno_db_inner", "ebno_db_outer"};
    if (fading) cols.push_back("ebno_db_fading_bound");
    csv.header(cols);
    std::size_t attained = 0;
    for (const auto& pt : points) {
        if (!pt.attained) continue;
        ++attained;
        std::vector<std::string> cells{std::to_string(bits), fmt17(pt.rate),
                                       fmt17(pt.ebno_db_inner),
                                       fmt17(pt.ebno_db_outer)};
        if (fading) cells.push_back(fmt17(pt.ebno_db_fading_bound));
        csv.row(cells);
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    out.summary_lines.push_back("tradeoff: " + std::to_string(attained) + "/" +
                                std::to_string(points.size()) +
                                " grid points attained");
    return out;
}

ExperimentOutput run_simulate(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "simulate parameters",
               {"M", "K", "N", "profile", "trials", "max_iterations", "eta_tol",
                "memory_budget_mb", "orthogonal_codebooks", "seed"});
    SimConfig sim;
    sim.users = get_int(p, "M");
    sim.code = get_code(p);
    sim.profile = get_profile(p, "profile");
    sim.trials = get_int(p, "trials");
    sim.max_iterations = get_int_or(p, "max_iterations", 30);
    sim.eta_tol = get_number_or(p, "eta_tol", 1e-4);
    sim.memory_budget_bytes =
        static_cast<std::uint64_t>(get_number_or(p, "memory_budget_mb", 256.0) *
                                   (1 << 20));
    sim.orthogonal_codebooks = get_bool_or(p, "orthogonal_codebooks", false);
    sim.seed = config.seed_overridden
                   ? config.seed
                   : static_cast<std::uint64_t>(get_number_or(
                         p, "seed", static_cast<double>(config.seed)));
    sim.threads = config.threads;
    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("simulate: ") + e.what());
    }

    const SimReport report = run_simulation(sim);

    ExperimentConfig effective = config;
    effective.seed = sim.seed;
    CsvFile csv(config.out_dir, "simulate", effective);
    csv.meta("error_rate", fmt17(report.error_rate));
    csv.meta("errors", std::to_string(report.errors));
    csv.meta("decisions", std::to_string(report.decisions));
    csv.meta("iterations_used", std::to_string(report.iterations_used));
    std::vector<std::string> cols{"iteration", "eta"};
    for (std::size_t j = 1; j <= sim.profile.size(); ++j)
        cols.push_back("v_" + std::to_string(j));
    csv.header(cols);
    for (std::size_t i = 0; i < report.eta_trajectory.size(); ++i) {
        std::vector<std::string> cells{std::to_string(i),
                                       fmt17(report.eta_trajectory[i])};
        for (double v : report.residual_trajectory[i]) cells.push_back(fmt17(v));
        csv.row(cells);
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    out.summary_lines.push_back("simulate: error_rate " +
                                fmt17(report.error_rate) + " (" +
                                std::to_string(report.errors) + "/" +
                                std::to_string(report.decisions) + ")");
    return out;
}

ExperimentOutput run_validate_marcum(const ExperimentConfig& config) {
    const json& p = config.params;
    check_keys(p, "validate-marcum parameters", {"M", "epsilon", "coefficient"});
    const auto orders = get_grid(p, "M");
    const double eps = get_number_or(p, "epsilon", 0.5);
    const double a = get_number_or(p, "coefficient", 1.0);

    CsvFile csv(config.out_dir, "validate-marcum", config);
    csv.header({"M", "abs_error"});
    std::vector<std::string> summary;
    for (double m : orders) {
        const double q = marcum_q(a * m, m - eps, m);
        const double limit = gaussian_q(eps - a);
        const double err = std::fabs(q - limit);
        csv.row({fmt17(m), fmt17(err)});
        summary.push_back(fmt17(err));
    }
    ExperimentOutput out;
    out.csv_path = csv.commit();
    std::string line = "validate-marcum: abs_error";
    for (const auto& s : summary) line += " " + s;
    out.summary_lines.push_back(line);
    return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
    if (!doc.is_object()) throw config_error("config must be a JSON object");
    if (!doc.contains("command") || !doc.at("command").is_string())
        throw config_error("config field 'command': missing or not a string");
    ExperimentConfig config;
    config.command = doc.at("command").get<std::string>();
    config.params = doc;
    config.params.erase("command");
    static const std::set<std::string> known{
        "pe-curve", "evolve",   "optimize",
        "tradeoff", "simulate", "validate-marcum"};
    if (!known.count(config.command))
        throw config_error("config field 'command': unknown command '" +
                           config.command + "'");
    return config;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    try {
        if (config.command == "pe-curve") return run_pe_curve(config);
        if (config.command == "evolve") return run_evolve(config);
        if (config.command == "optimize") return run_optimize(config);
        if (config.command == "tradeoff") return run_tradeoff(config);
        if (config.command == "simulate") return run_simulate(config);
        if (config.command == "validate-marcum")
            return run_validate_marcum(config);
    } catch (const json::exception& e) {
        throw config_error(config.command + ": malformed value (" + e.what() +
                           ")");
    }
    throw config_error("unknown command '" + config.command + "'");
}

}  // namespace macsic
