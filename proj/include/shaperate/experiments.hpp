#pragma once

#include "shaperate/additive.hpp"
#include "shaperate/core.hpp"
#include "shaperate/envelopes.hpp"
#include "shaperate/noise.hpp"

#include <optional>
#include <string>

namespace shaperate {

enum class EstimatorKind { Isotonic, Convex, Additive };
enum class LossSummary { Median, TrimmedMean, Quantile, Mean };

struct ExperimentPlan {
    EstimatorKind estimator = EstimatorKind::Isotonic;
    SignalSpec signal = SignalSpec::constant(0.0);
    // additive-only: phi0(x,z) = signal(x) + h0_beta * (z - 1/2)
    double h0_beta = 0.0;
    ShapeConstraint additive_shape = ShapeConstraint::Isotonic;
    HClass additive_hclass = HClass::zero();
    int additive_restarts = 1;
    ErrorLaw law = ErrorLaw::gaussian(1.0);
    std::vector<int> n_grid;
    int replications = 200;
    std::uint64_t base_seed = 0;
    LossSummary loss_summary = LossSummary::Median;
    double summary_param = 0.0;  // trim fraction or quantile level
    // project the signal onto the shape class and measure loss against the
    // projection (mis-specified targets)
    bool project_target = false;
    int projection_grid = 512;
    int threads = 0;  // 0 = auto

    void validate() const;
};

struct RiskPoint {
    int n;
    double summary;      // configured summary of squared L2 loss
    double iqr_lo, iqr_hi;
    double supnorm_median;  // median over replications of max_i |f_hat(X_i)|
};

struct RiskCurve {
    std::vector<RiskPoint> points;
    double slope = 0.0;
    double slope_stderr = 0.0;
};

struct SlopeFit {
    double slope;
    double std_err;
};

/// Ordinary least squares of log(summary) on log(n). Needs >= 4 points.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

RiskCurve run_risk_curve(const ExperimentPlan& plan);

/// One-sided trend test on the per-n sup-norm medians: true when the fitted
/// slope against log n is not significantly positive at 95% confidence.
bool supnorm_bounded(const RiskCurve& curve);

/// Signal projection onto the shape class on an equispaced grid: weighted
/// PAVA (isotonic) or the convex cone projection, as a step / piecewise
/// linear proxy for f0*.
StepFunction compute_f0_star_isotonic(const SignalSpec& f0, int grid_size);
PiecewiseLinearFunction compute_f0_star_convex(const SignalSpec& f0, int grid_size);

struct OraclePoint {
    int n;
    double lhs_median;
    double rhs_min;
    int rhs_argmin_m;
    bool argmin_at_boundary;
    double ratio_median;
    double ratio_q90;
};

struct OracleAudit {
    std::vector<OraclePoint> points;
    double trend_slope = 0.0;        // OLS slope of median ratio on log n
    double trend_tstat = 0.0;
    bool no_upward_trend = false;    // at 95% one-sided confidence
};

OracleAudit run_oracle_audit(const ExperimentPlan& plan, int m_max);

struct LowerBoundProbe {
    RiskCurve heavy;     // stable (gamma < 1) or scaled pareto (gamma = 1) errors
    RiskCurve control;   // Gaussian errors, shared design seeds
    double slope_gap = 0.0;        // heavy.slope - control.slope (shallower > 0)
    double gap_stderr = 0.0;
    bool direction_confirmed = false;  // gap lower bound > 0 at 95%
};

LowerBoundProbe run_lower_bound_probe(double gamma, double eps,
                                      const std::vector<int>& n_grid, int replications,
                                      std::uint64_t base_seed, int threads = 0);

/// LSE over the finite tree class: exhaustive argmin of the residual sum of
/// squares over all interval indicators (and the zero function), ties broken
/// toward the earlier member in canonical (zero, level, position) order.
struct TreeLseResult {
    bool is_zero;
    int level;    // 1-based when !is_zero
    int position;
    double rss;
    double loss;  // squared L2 distance to f0 = 0, i.e. the interval length
};

TreeLseResult tree_lse(const TreeClass& t, const std::vector<double>& xs,
                       const std::vector<double>& ys, bool reverse_enumeration = false);

}  // namespace shaperate
