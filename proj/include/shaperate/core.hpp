#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaperate {

/// Design points sorted ascending with paired responses and pooling weights.
/// Exact duplicate x values are pooled into one point (response averaged,
/// multiplicity folded into the weight), so xs is strictly increasing.
struct SortedSample {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> weights;

    std::size_t n() const { return xs.size(); }
};

SortedSample make_sorted_sample(const std::vector<double>& xs_raw,
                                const std::vector<double>& ys_raw);

/// Left-continuous piecewise constant function on [0,1].
/// Piece j covers (b_{j-1}, b_j] with b_0 = 0 and b_last = 1.
struct StepFunction {
    std::vector<double> breakpoints;  // strictly increasing, last = 1
    std::vector<double> values;       // one per piece
    bool isotonic = false;

    double operator()(double x) const;
    void validate() const;
};

/// Continuous piecewise linear function on [0,1], knots from 0 to 1.
struct PiecewiseLinearFunction {
    std::vector<double> knots;        // strictly increasing, first = 0, last = 1
    std::vector<double> knot_values;  // one per knot
    bool convex = false;

    double operator()(double x) const;
    void validate() const;
};

/// Bounded signal on [0,1], evaluable anywhere; the true regression function
/// in simulations and the approximation target of the oracle terms.
class SignalSpec {
public:
    enum class Kind { Constant, Linear, StepTrain, ConvexPoly, CustomGrid };

    static SignalSpec constant(double c);
    static SignalSpec linear(double intercept, double slope);
    // Left-continuous steps: piece j covers (b_{j-1}, b_j], b_last = 1.
    static SignalSpec step_train(std::vector<double> breakpoints, std::vector<double> values);
    // c0 + c1 x + c2 x^2 with c2 >= 0
    static SignalSpec convex_poly(double c0, double c1, double c2);
    // Values on the equispaced grid 0, 1/(k-1), ..., 1 with linear interpolation.
    static SignalSpec custom_grid(std::vector<double> values);

    double operator()(double x) const;
    Kind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }

    // Points in [0,1] (including 0 and 1) at which the signal may be
    // non-smooth; integration segments are split here.
    std::vector<double> partition() const;

private:
    SignalSpec(Kind k, std::vector<double> p) : kind_(k), params_(std::move(p)) {}
    Kind kind_;
    std::vector<double> params_;
};

/// Squared L2(P) distance with P uniform on [0,1], computed by per-segment
/// Gauss-Legendre on the merged partition (exact for the piecewise-polynomial
/// cases used throughout).
double l2_loss(const StepFunction& f, const SignalSpec& g);
double l2_loss(const PiecewiseLinearFunction& f, const SignalSpec& g);
double l2_loss(const StepFunction& f, const StepFunction& g);
double l2_loss(const PiecewiseLinearFunction& f, const PiecewiseLinearFunction& g);
double l2_loss(const StepFunction& f, const PiecewiseLinearFunction& g);

/// Generic backend: integrates (a-b)^2 over [0,1] splitting at the given cut
/// points, 16-node Gauss-Legendre per segment.
double l2_sq_distance(const std::function<double(double)>& a,
                      const std::function<double(double)>& b,
                      std::vector<double> cuts);

enum class PieceFamily { Constant, LinearConvex };

struct MPieceApproximation {
    PieceFamily family;
    StepFunction step;              // populated for Constant
    PiecewiseLinearFunction pwl;    // populated for LinearConvex
    double error2 = 0.0;
    bool convexity_repaired = false;
};

/// Best approximation of g by an at-most-m-piece member of the family, with
/// breakpoints restricted to the equispaced grid of size grid_size.
/// The LinearConvex result is repaired to a convex continuous function by
/// slope pooling when the unconstrained dynamic program is non-convex.
MPieceApproximation best_m_piece_approximation(const SignalSpec& g, int m,
                                               PieceFamily family, int grid_size);

namespace detail {
// 16-node Gauss-Legendre quadrature of h over [a,b].
double gauss_legendre_16(const std::function<double(double)>& h, double a, double b);
// Sorted unique merge of cut points, clipped to [0,1], endpoints included.
std::vector<double> merge_cuts(std::vector<double> cuts);
}  // namespace detail

}  // namespace shaperate
