#include "shaperate/convex.hpp"
#include "shaperate/envelopes.hpp"
#include "shaperate/experiments.hpp"
#include "shaperate/isotonic.hpp"
#include "shaperate/noise.hpp"
#include "shaperate/runner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>

namespace py = pybind11;
using namespace shaperate;

namespace {

EnvelopeModel model_from_name(const std::string& name) {
    if (name == "isotonic") return EnvelopeModel::IsotonicBounded;
    if (name == "convex") return EnvelopeModel::ConvexBounded;
    if (name == "linear_1d") return EnvelopeModel::Linear1d;
    if (name == "single_changepoint") return EnvelopeModel::SingleChangepoint;
    if (name == "multi_changepoint") return EnvelopeModel::MultiChangepoint;
    throw std::invalid_argument("unknown envelope model '" + name + "'");
}

ErrorLaw law_from_name(const std::string& kind, double param, double scale) {
    if (kind == "gaussian") return ErrorLaw::gaussian(scale);
    if (kind == "student_t") return ErrorLaw::student_t(param, scale);
    if (kind == "sym_stable") return ErrorLaw::sym_stable(param, scale);
    if (kind == "pareto_eta") return ErrorLaw::pareto_eta(scale);
    throw std::invalid_argument("unknown error law '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_shaperate, m) {
    m.doc() = "shape-restricted least squares: isotonic and convex fits, "
              "localized envelopes, heavy-tailed error laws";

    m.def(
        "fit_isotonic",
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
            SortedSample s = make_sorted_sample(xs, ys);
            IsotonicFit fit = fit_isotonic(s);
            py::dict out;
            out["xs"] = s.xs;
            out["fitted"] = fit.fitted;
            out["breakpoints"] = fit.extension.breakpoints;
            out["values"] = fit.extension.values;
            return out;
        },
        py::arg("xs"), py::arg("ys"),
        "Isotonic least squares; returns the sorted design, fitted values and "
        "the step extension.");

    m.def(
        "minmax_value",
        [](const std::vector<double>& xs, const std::vector<double>& ys, std::size_t j) {
            return minmax_value(make_sorted_sample(xs, ys), j);
        },
        py::arg("xs"), py::arg("ys"), py::arg("j"),
        "Direct min-max formula at sorted position j.");

    m.def(
        "fit_convex",
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
            SortedSample s = make_sorted_sample(xs, ys);
            ConvexFit fit = fit_convex(s);
            ConvexAudit audit = characterization_audit(s, fit);
            py::dict out;
            out["xs"] = s.xs;
            out["fitted"] = fit.fitted;
            out["kinks"] = fit.kinks;
            out["knots"] = fit.extension.knots;
            out["knot_values"] = fit.extension.knot_values;
            out["max_violation"] = audit.max_violation;
            out["max_kink_gap"] = audit.max_kink_gap;
            return out;
        },
        py::arg("xs"), py::arg("ys"),
        "Convex least squares with the cumulative-sum characterization audit.");

    m.def(
        "envelope_norm",
        [](const std::string& model, double delta, double bound) {
            return envelope_norm(model_from_name(model), delta, bound);
        },
        py::arg("model"), py::arg("delta"), py::arg("bound") = 1.0);

    m.def("fit_gamma", &fit_gamma, py::arg("deltas"), py::arg("norms"),
          "Envelope growth exponent and log correction from (delta, norm) pairs.");

    m.def("predicted_rate_exponent", &predicted_rate_exponent, py::arg("gamma"));

    m.def(
        "sample_errors",
        [](const std::string& kind, double param, double scale, std::size_t n,
           std::uint64_t seed) { return law_from_name(kind, param, scale).sample(n, seed); },
        py::arg("kind"), py::arg("param"), py::arg("scale"), py::arg("n"), py::arg("seed"));

    m.def(
        "error_survival",
        [](const std::string& kind, double param, double scale, double t) {
            return law_from_name(kind, param, scale).survival(t);
        },
        py::arg("kind"), py::arg("param"), py::arg("scale"), py::arg("t"));

    m.def(
        "lp1_norm",
        [](const std::string& kind, double param, double scale, double p) {
            return lp1_norm(law_from_name(kind, param, scale), p);
        },
        py::arg("kind"), py::arg("param"), py::arg("scale"), py::arg("p"));

    m.def(
        "run_config",
        [](const std::string& config_path, const std::string& out_dir, int threads,
           py::object seed) {
            RunOptions opts;
            opts.config_path = config_path;
            opts.out_dir = out_dir;
            opts.threads = threads;
            if (!seed.is_none()) opts.seed_override = seed.cast<std::uint64_t>();
            std::string message;
            int code = run_from_config(opts, message);
            return py::make_tuple(code, message);
        },
        py::arg("config_path"), py::arg("out_dir") = ".", py::arg("threads") = 0,
        py::arg("seed") = py::none(),
        "Executes a JSON run config; returns (exit_code, message).");

    m.attr("__version__") = SHAPERATE_VERSION;
}
