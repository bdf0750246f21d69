#include "shaperate/runner.hpp"

#include "shaperate/experiments.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace shaperate {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown config key '" + path + key + "'");
    }
}

const json& need(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing config key '" + path + key + "'");
    return *it;
}

double need_number(const json& obj, const std::string& path, const char* key) {
    const json& v = need(obj, path, key);
    if (!v.is_number()) throw ConfigError("config key '" + path + key + "' must be a number");
    return v.get<double>();
}

double opt_number(const json& obj, const std::string& path, const char* key, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) throw ConfigError("config key '" + path + key + "' must be a number");
    return it->get<double>();
}

std::string need_string(const json& obj, const std::string& path, const char* key) {
    const json& v = need(obj, path, key);
    if (!v.is_string()) throw ConfigError("config key '" + path + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> need_array(const json& obj, const std::string& path, const char* key) {
    const json& v = need(obj, path, key);
    if (!v.is_array() || v.empty())
        throw ConfigError("config key '" + path + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number())
            throw ConfigError("config key '" + path + key + "' must contain numbers only");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> need_int_array(const json& obj, const std::string& path, const char* key) {
    std::vector<double> raw = need_array(obj, path, key);
    std::vector<int> out;
    for (double v : raw) {
        int i = static_cast<int>(v);
        if (v != i) throw ConfigError("config key '" + path + key + "' must contain integers");
        out.push_back(i);
    }
    return out;
}

SignalSpec parse_signal(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config key '" + path + "' must be an object");
    std::string kind = need_string(j, path + ".", "kind");
    if (kind == "constant") {
        check_keys(j, path + ".", {"kind", "value"});
        return SignalSpec::constant(need_number(j, path + ".", "value"));
    }
    if (kind == "linear") {
        check_keys(j, path + ".", {"kind", "intercept", "slope"});
        return SignalSpec::linear(need_number(j, path + ".", "intercept"),
                                  need_number(j, path + ".", "slope"));
    }
    if (kind == "step_train") {
        check_keys(j, path + ".", {"kind", "breakpoints", "values"});
        return SignalSpec::step_train(need_array(j, path + ".", "breakpoints"),
                                      need_array(j, path + ".", "values"));
    }
    if (kind == "convex_poly") {
        check_keys(j, path + ".", {"kind", "c0", "c1", "c2"});
        return SignalSpec::convex_poly(need_number(j, path + ".", "c0"),
                                       need_number(j, path + ".", "c1"),
                                       need_number(j, path + ".", "c2"));
    }
    if (kind == "custom_grid") {
        check_keys(j, path + ".", {"kind", "values"});
        return SignalSpec::custom_grid(need_array(j, path + ".", "values"));
    }
    throw ConfigError("config key '" + path + ".kind' has unknown signal kind '" + kind + "'");
}

ErrorLaw parse_law(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config key '" + path + "' must be an object");
    std::string kind = need_string(j, path + ".", "kind");
    if (kind == "gaussian") {
        check_keys(j, path + ".", {"kind", "sigma"});
        return ErrorLaw::gaussian(opt_number(j, path + ".", "sigma", 1.0));
    }
    if (kind == "student_t") {
        check_keys(j, path + ".", {"kind", "nu", "scale"});
        return ErrorLaw::student_t(need_number(j, path + ".", "nu"),
                                   opt_number(j, path + ".", "scale", 1.0));
    }
    if (kind == "sym_stable") {
        check_keys(j, path + ".", {"kind", "alpha", "scale"});
        return ErrorLaw::sym_stable(need_number(j, path + ".", "alpha"),
                                    opt_number(j, path + ".", "scale", 1.0));
    }
    if (kind == "pareto_eta") {
        check_keys(j, path + ".", {"kind", "scale"});
        return ErrorLaw::pareto_eta(opt_number(j, path + ".", "scale", 1.0));
    }
    throw ConfigError("config key '" + path + ".kind' has unknown error law '" + kind + "'");
}

HClass parse_hclass(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config key '" + path + "' must be an object");
    std::string kind = need_string(j, path + ".", "kind");
    if (kind == "affine_bounded") {
        check_keys(j, path + ".", {"kind"});
        return HClass::affine_bounded();
    }
    if (kind == "binned_sieve") {
        check_keys(j, path + ".", {"kind", "bins", "bound"});
        return HClass::binned_sieve(static_cast<int>(need_number(j, path + ".", "bins")),
                                    need_number(j, path + ".", "bound"));
    }
    if (kind == "centered_interval_indicators") {
        check_keys(j, path + ".", {"kind", "grid"});
        return HClass::centered_interval_indicators(
            static_cast<int>(need_number(j, path + ".", "grid")));
    }
    if (kind == "zero") {
        check_keys(j, path + ".", {"kind"});
        return HClass::zero();
    }
    throw ConfigError("config key '" + path + ".kind' has unknown h class '" + kind + "'");
}

ExperimentPlan parse_plan(const json& cfg, std::uint64_t seed, int threads) {
    ExperimentPlan plan;
    plan.base_seed = seed;
    plan.threads = threads;

    std::string est = need_string(cfg, "", "estimator");
    if (est == "isotonic")
        plan.estimator = EstimatorKind::Isotonic;
    else if (est == "convex")
        plan.estimator = EstimatorKind::Convex;
    else if (est == "additive")
        plan.estimator = EstimatorKind::Additive;
    else
        throw ConfigError("config key 'estimator' has unknown value '" + est + "'");

    plan.signal = parse_signal(need(cfg, "", "signal"), "signal");
    plan.law = parse_law(need(cfg, "", "law"), "law");
    plan.n_grid = need_int_array(cfg, "", "n_grid");
    plan.replications = static_cast<int>(need_number(cfg, "", "replications"));

    if (auto it = cfg.find("loss_summary"); it != cfg.end()) {
        const json& ls = *it;
        if (ls.is_string()) {
            std::string s = ls.get<std::string>();
            if (s == "median")
                plan.loss_summary = LossSummary::Median;
            else if (s == "mean")
                plan.loss_summary = LossSummary::Mean;
            else
                throw ConfigError("config key 'loss_summary' has unknown value '" + s + "'");
        } else if (ls.is_object()) {
            std::string s = need_string(ls, "loss_summary.", "kind");
            if (s == "trimmed_mean") {
                check_keys(ls, "loss_summary.", {"kind", "fraction"});
                plan.loss_summary = LossSummary::TrimmedMean;
                plan.summary_param = need_number(ls, "loss_summary.", "fraction");
            } else if (s == "quantile") {
                check_keys(ls, "loss_summary.", {"kind", "q"});
                plan.loss_summary = LossSummary::Quantile;
                plan.summary_param = need_number(ls, "loss_summary.", "q");
            } else {
                throw ConfigError("config key 'loss_summary.kind' has unknown value '" + s + "'");
            }
        } else {
            throw ConfigError("config key 'loss_summary' must be a string or object");
        }
    }

    if (auto it = cfg.find("project_target"); it != cfg.end()) {
        if (!it->is_boolean()) throw ConfigError("config key 'project_target' must be a boolean");
        plan.project_target = it->get<bool>();
    }
    plan.projection_grid =
        static_cast<int>(opt_number(cfg, "", "projection_grid", plan.projection_grid));

    if (plan.estimator == EstimatorKind::Additive) {
        plan.h0_beta = opt_number(cfg, "", "h0_beta", 0.0);
        std::string shape = need_string(cfg, "", "shape");
        if (shape == "isotonic")
            plan.additive_shape = ShapeConstraint::Isotonic;
        else if (shape == "convex")
            plan.additive_shape = ShapeConstraint::Convex;
        else
            throw ConfigError("config key 'shape' has unknown value '" + shape + "'");
        plan.additive_hclass = parse_hclass(need(cfg, "", "hclass"), "hclass");
        plan.additive_restarts = static_cast<int>(opt_number(cfg, "", "restarts", 1));
    }
    return plan;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open output file " + p.string());
    out << body;
}

json curve_to_json(const RiskCurve& c) {
    json pts = json::array();
    for (const RiskPoint& p : c.points)
        pts.push_back({{"n", p.n},
                       {"summary", p.summary},
                       {"iqr_lo", p.iqr_lo},
                       {"iqr_hi", p.iqr_hi},
                       {"supnorm_median", p.supnorm_median}});
    return {{"points", pts}, {"slope", c.slope}, {"slope_stderr", c.slope_stderr}};
}

std::string curve_to_csv(const RiskCurve& c) {
    std::string csv = "n,summary,iqr_lo,iqr_hi\n";
    for (const RiskPoint& p : c.points)
        csv += std::to_string(p.n) + "," + fmt(p.summary) + "," + fmt(p.iqr_lo) + "," +
               fmt(p.iqr_hi) + "\n";
    return csv;
}

struct CommandOutput {
    json results;
    std::string csv_name;
    std::string csv_body;
    std::string stdout_text;
};

CommandOutput run_fit(const json& cfg, std::uint64_t seed) {
    (void)seed;
    check_keys(cfg, "", {"command", "seed", "estimator", "xs", "ys"});
    std::string est = need_string(cfg, "", "estimator");
    SortedSample s = make_sorted_sample(need_array(cfg, "", "xs"), need_array(cfg, "", "ys"));

    CommandOutput out;
    std::ostringstream text;
    if (est == "isotonic") {
        IsotonicFit fit = fit_isotonic(s);
        double gap = 0.0;
        for (std::size_t j = 0; j < s.n(); ++j)
            gap = std::max(gap, std::abs(fit.fitted[j] - minmax_value(s, j)));
        out.results = {{"fitted", fit.fitted}, {"minmax_gap", gap}};
        text << "fitted:";
        for (double v : fit.fitted) text << " " << fmt(v);
        text << "\nminmax_gap: " << fmt(gap) << "\n";
    } else if (est == "convex") {
        ConvexFit fit = fit_convex(s);
        ConvexAudit audit = characterization_audit(s, fit);
        out.results = {{"fitted", fit.fitted},
                       {"kinks", fit.kinks},
                       {"max_violation", audit.max_violation},
                       {"max_kink_gap", audit.max_kink_gap}};
        text << "fitted:";
        for (double v : fit.fitted) text << " " << fmt(v);
        text << "\nmax_violation: " << fmt(audit.max_violation)
             << "\nmax_kink_gap: " << fmt(audit.max_kink_gap) << "\n";
    } else {
        throw ConfigError("config key 'estimator' must be 'isotonic' or 'convex' for fit");
    }
    out.stdout_text = text.str();
    return out;
}

CommandOutput run_simulate(const json& cfg, std::uint64_t seed, int threads) {
    check_keys(cfg, "", {"command", "seed", "estimator", "signal", "law", "n_grid",
                         "replications", "loss_summary", "project_target",
                         "projection_grid", "h0_beta", "shape", "hclass", "restarts"});
    ExperimentPlan plan = parse_plan(cfg, seed, threads);
    RiskCurve curve = run_risk_curve(plan);
    CommandOutput out;
    out.results = curve_to_json(curve);
    out.csv_name = "simulate.csv";
    out.csv_body = curve_to_csv(curve);
    out.stdout_text = "slope: " + fmt(curve.slope) + "\n";
    return out;
}

CommandOutput run_oracle(const json& cfg, std::uint64_t seed, int threads) {
    check_keys(cfg, "", {"command", "seed", "estimator", "signal", "law", "n_grid",
                         "replications", "loss_summary", "project_target",
                         "projection_grid", "h0_beta", "shape", "hclass", "restarts",
                         "m_max"});
    ExperimentPlan plan = parse_plan(cfg, seed, threads);
    int m_max = static_cast<int>(opt_number(cfg, "", "m_max", 8));
    OracleAudit audit = run_oracle_audit(plan, m_max);

    json pts = json::array();
    std::string csv = "n,lhs_median,rhs_min,ratio_median\n";
    for (const OraclePoint& p : audit.points) {
        pts.push_back({{"n", p.n},
                       {"lhs_median", p.lhs_median},
                       {"rhs_min", p.rhs_min},
                       {"rhs_argmin_m", p.rhs_argmin_m},
                       {"argmin_at_boundary", p.argmin_at_boundary},
                       {"ratio_median", p.ratio_median},
                       {"ratio_q90", p.ratio_q90}});
        csv += std::to_string(p.n) + "," + fmt(p.lhs_median) + "," + fmt(p.rhs_min) + "," +
               fmt(p.ratio_median) + "\n";
    }
    CommandOutput out;
    out.results = {{"points", pts},
                   {"trend_slope", audit.trend_slope},
                   {"trend_tstat", audit.trend_tstat},
                   {"no_upward_trend", audit.no_upward_trend}};
    out.csv_name = "oracle.csv";
    out.csv_body = csv;
    out.stdout_text =
        std::string("no_upward_trend: ") + (audit.no_upward_trend ? "true" : "false") + "\n";
    return out;
}

CommandOutput run_envelope(const json& cfg) {
    check_keys(cfg, "", {"command", "seed", "model", "deltas", "bound"});
    std::string model_name = need_string(cfg, "", "model");
    EnvelopeModel model;
    if (model_name == "isotonic")
        model = EnvelopeModel::IsotonicBounded;
    else if (model_name == "convex")
        model = EnvelopeModel::ConvexBounded;
    else if (model_name == "linear_1d")
        model = EnvelopeModel::Linear1d;
    else if (model_name == "single_changepoint")
        model = EnvelopeModel::SingleChangepoint;
    else if (model_name == "multi_changepoint")
        model = EnvelopeModel::MultiChangepoint;
    else
        throw ConfigError("config key 'model' has unknown value '" + model_name + "'");
    std::vector<double> deltas = need_array(cfg, "", "deltas");
    double bound = opt_number(cfg, "", "bound", 1.0);

    json rows = json::array();
    std::string csv = "delta,norm\n";
    std::vector<double> norms;
    for (double d : deltas) {
        double norm = envelope_norm(model, d, bound);
        norms.push_back(norm);
        rows.push_back({{"delta", d}, {"norm", norm}});
        csv += fmt(d) + "," + fmt(norm) + "\n";
    }
    CommandOutput out;
    out.results = {{"model", model_name}, {"bound", bound}, {"rows", rows}};
    try {
        auto [g, t] = fit_gamma(deltas, norms);
        out.results["gamma_hat"] = g;
        out.results["log_correction"] = t;
    } catch (const std::invalid_argument&) {
        // grid too small or too narrow for the growth-exponent fit; norms only
    }
    out.csv_name = "envelope.csv";
    out.csv_body = csv;
    out.stdout_text = std::to_string(deltas.size()) + " envelope rows written\n";
    return out;
}

CommandOutput run_lower_bound(const json& cfg, std::uint64_t seed, int threads) {
    check_keys(cfg, "", {"command", "seed", "gamma", "eps", "n_grid", "replications"});
    double gamma = need_number(cfg, "", "gamma");
    double eps = need_number(cfg, "", "eps");
    std::vector<int> n_grid = need_int_array(cfg, "", "n_grid");
    int reps = static_cast<int>(need_number(cfg, "", "replications"));
    LowerBoundProbe probe = run_lower_bound_probe(gamma, eps, n_grid, reps, seed, threads);

    std::string csv = "arm,n,summary\n";
    for (const RiskPoint& p : probe.heavy.points)
        csv += "heavy," + std::to_string(p.n) + "," + fmt(p.summary) + "\n";
    for (const RiskPoint& p : probe.control.points)
        csv += "control," + std::to_string(p.n) + "," + fmt(p.summary) + "\n";

    CommandOutput out;
    out.results = {{"heavy", curve_to_json(probe.heavy)},
                   {"control", curve_to_json(probe.control)},
                   {"slope_gap", probe.slope_gap},
                   {"gap_stderr", probe.gap_stderr},
                   {"direction_confirmed", probe.direction_confirmed}};
    out.csv_name = "lower_bound.csv";
    out.csv_body = csv;
    out.stdout_text = "slope_gap: " + fmt(probe.slope_gap) + "\n";
    return out;
}

}  // namespace

int run_from_config(const RunOptions& opts, std::string& message) {
    try {
        std::ifstream in(opts.config_path);
        if (!in) throw ConfigError("cannot read config file " + opts.config_path);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");

        std::string command;
        if (!opts.expected_command.empty() && !cfg.contains("command")) {
            command = opts.expected_command;
            cfg["command"] = command;
        } else {
            command = need_string(cfg, "", "command");
            if (!opts.expected_command.empty() && command != opts.expected_command)
                throw ConfigError("config key 'command' ('" + command +
                                  "') does not match the invoked subcommand '" +
                                  opts.expected_command + "'");
        }
        std::uint64_t seed = opts.seed_override.value_or(
            static_cast<std::uint64_t>(opt_number(cfg, "", "seed", 0.0)));
        cfg["seed"] = seed;  // echoed config reproduces the run exactly

        CommandOutput out;
        if (command == "fit")
            out = run_fit(cfg, seed);
        else if (command == "simulate")
            out = run_simulate(cfg, seed, opts.threads);
        else if (command == "oracle")
            out = run_oracle(cfg, seed, opts.threads);
        else if (command == "envelope")
            out = run_envelope(cfg);
        else if (command == "lower-bound")
            out = run_lower_bound(cfg, seed, opts.threads);
        else
            throw ConfigError("config key 'command' has unknown value '" + command + "'");

        // invalid-argument failures surfacing from the library are config
        // value problems (ranges, sizes), reported as validation errors

        std::filesystem::path dir(opts.out_dir);
        std::filesystem::create_directories(dir);
        json results = {{"command", command},
                        {"seed", seed},
                        {"version", SHAPERATE_VERSION},
                        {"config", cfg},
                        {"results", out.results}};
        write_text(dir / "results.json", results.dump(2) + "\n");
        if (!out.csv_name.empty()) write_text(dir / out.csv_name, out.csv_body);

        message = out.stdout_text;
        return 0;
    } catch (const ConfigError& e) {
        message = std::string("config error: ") + e.what();
        return 2;
    } catch (const std::invalid_argument& e) {
        message = std::string("config error: ") + e.what();
        return 2;
    } catch (const std::exception& e) {
        message = std::string("runtime error: ") + e.what();
        return 3;
    }
}

}  // namespace shaperate
