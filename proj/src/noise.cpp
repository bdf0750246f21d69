#include "shaperate/noise.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace shaperate {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// numeric survival of the symmetric alpha-stable law with unit scale,
// by inversion of the characteristic function exp(-|t|^alpha):
//   P(xi <= t) - P(xi <= -t) = (2/pi) int_0^inf sin(ut) exp(-u^alpha) / u du
double stable_two_sided_cdf(double t, double alpha) {
    // integrand decays like exp(-u^alpha); support effectively [0, U]
    const double U = std::pow(40.0, 1.0 / alpha);
    const int panels = 2048;
    const double h = U / panels;
    // composite Simpson
    auto f = [&](double u) {
        if (u < 1e-12) return t * std::exp(-std::pow(u, alpha));
        return std::sin(u * t) * std::exp(-std::pow(u, alpha)) / u;
    };
    double acc = f(0.0) + f(U);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return (2.0 / std::numbers::pi) * acc * h / 3.0;
}
}  // namespace

ErrorLaw ErrorLaw::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian: sigma must be > 0");
    return ErrorLaw(Kind::Gaussian, sigma, sigma);
}

ErrorLaw ErrorLaw::student_t(double nu, double scale) {
    if (!(nu > 0.0)) throw std::invalid_argument("student_t: nu must be > 0");
    if (!(scale > 0.0)) throw std::invalid_argument("student_t: scale must be > 0");
    return ErrorLaw(Kind::StudentT, nu, scale);
}

ErrorLaw ErrorLaw::sym_stable(double alpha, double scale) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("sym_stable: alpha must lie in (0,2)");
    if (!(scale > 0.0)) throw std::invalid_argument("sym_stable: scale must be > 0");
    return ErrorLaw(Kind::SymStable, alpha, scale);
}

ErrorLaw ErrorLaw::pareto_eta(double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("pareto_eta: scale must be > 0");
    return ErrorLaw(Kind::ParetoEta, 2.0, scale);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replication,
                          std::uint64_t stream) {
    // splitmix64 over base_seed xor replication, salted by the stream tag
    std::uint64_t z = (base_seed ^ replication) + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> ErrorLaw::sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(
        std::numeric_limits<double>::min(), 1.0);  // open at 0
    std::vector<double> out(n);

    switch (kind_) {
        case Kind::Gaussian: {
            // Box-Muller
            for (std::size_t i = 0; i < n; i += 2) {
                double u1 = unif(rng), u2 = unif(rng);
                double r = std::sqrt(-2.0 * std::log(u1));
                out[i] = scale_ * r * std::cos(2.0 * std::numbers::pi * u2);
                if (i + 1 < n) out[i + 1] = scale_ * r * std::sin(2.0 * std::numbers::pi * u2);
            }
            break;
        }
        case Kind::StudentT: {
            boost::math::students_t dist(param_);
            for (double& v : out) v = scale_ * boost::math::quantile(dist, unif(rng));
            break;
        }
        case Kind::SymStable: {
            // Chambers-Mallows-Stuck, symmetric case
            const double a = param_;
            for (double& v : out) {
                double u = std::numbers::pi * (unif(rng) - 0.5);  // (-pi/2, pi/2)
                double w = -std::log(unif(rng));                  // Exp(1)
                double x = std::sin(a * u) / std::pow(std::cos(u), 1.0 / a) *
                           std::pow(std::cos((1.0 - a) * u) / w, (1.0 - a) / a);
                v = scale_ * x;
            }
            break;
        }
        case Kind::ParetoEta: {
            for (double& v : out) {
                double u = unif(rng);
                double mag = scale_ * std::sqrt(1.0 / u - 1.0);
                v = (unif(rng) < 0.5) ? -mag : mag;
            }
            break;
        }
    }
    return out;
}

double ErrorLaw::survival(double t) const {
    if (t <= 0.0) return 1.0;
    switch (kind_) {
        case Kind::Gaussian:
            return std::erfc(t / (scale_ * std::sqrt(2.0)));
        case Kind::StudentT: {
            boost::math::students_t dist(param_);
            return 2.0 * boost::math::cdf(boost::math::complement(dist, t / scale_));
        }
        case Kind::SymStable:
            return std::max(0.0, 1.0 - stable_two_sided_cdf(t / scale_, param_));
        case Kind::ParetoEta: {
            double r = t / scale_;
            return 1.0 / (1.0 + r * r);
        }
    }
    return 0.0;
}

double ErrorLaw::tail_exponent() const {
    switch (kind_) {
        case Kind::Gaussian: return kInf;
        case Kind::StudentT: return param_;
        case Kind::SymStable: return param_;
        case Kind::ParetoEta: return 2.0;
    }
    return kInf;
}

double lp1_norm(const ErrorLaw& law, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp1_norm: p must be >= 1");
    const double te = law.tail_exponent();
    if (te <= p) return kInf;

    // numeric part on [0, T], composite Simpson on a graded grid
    const double T = (te == kInf) ? law.scale() * 50.0 : law.scale() * 1e4;
    const int panels = 4000;
    double acc = 0.0;
    double prev_t = 0.0, prev_v = 1.0;  // S(0)^{1/p} = 1
    for (int i = 1; i <= panels; ++i) {
        // geometric-ish grading: dense near 0 where S varies fastest
        double frac = static_cast<double>(i) / panels;
        double t = T * (std::expm1(6.0 * frac) / std::expm1(6.0));
        double v = std::pow(law.survival(t), 1.0 / p);
        acc += 0.5 * (prev_v + v) * (t - prev_t);
        prev_t = t;
        prev_v = v;
    }
    if (te == kInf) return acc;

    // analytic power tail: S(t) ~ c t^{-te} beyond T
    double c = law.survival(T) * std::pow(T, te);
    double expnt = te / p;
    acc += std::pow(c, 1.0 / p) * std::pow(T, 1.0 - expnt) / (expnt - 1.0);
    return acc;
}

}  // namespace shaperate
