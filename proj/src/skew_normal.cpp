#include "hscal/skew_normal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "hscal/errors.hpp"
#include "hscal/nelder_mead.hpp"

namespace hscal {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kSqrt2 = 1.4142135623730951;

double golden_section_maximize(double a, double b, double tol,
                               const std::function<double(double)>& f) {
    const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

struct Moments {
    double mean;
    double sd;       // population standard deviation
    double skewness; // sample skewness g1
};

Moments sample_moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    const double sd = std::sqrt(m2);
    const double skew = (m2 > 0.0) ? m3 / (m2 * sd) : 0.0;
    return {mean, sd, skew};
}

// Method-of-moments starting point (skewness -> delta -> alpha/omega/xi).
void moments_init(const Moments& m, double& xi, double& omega, double& alpha) {
    const double b = std::sqrt(2.0 / kPi);
    // |skewness| of a skew normal is capped just below ~0.9953
    const double g = std::clamp(m.skewness, -0.95, 0.95);
    const double ag = std::pow(std::fabs(g), 2.0 / 3.0);
    const double c = std::pow((4.0 - kPi) / 2.0, 2.0 / 3.0);
    double delta = (ag > 0.0) ? std::sqrt(kPi / 2.0 * ag / (ag + c)) : 0.0;
    delta = std::copysign(std::min(delta, 0.995), g);
    alpha = delta / std::sqrt(std::max(1.0 - delta * delta, 1e-12));
    const double denom = 1.0 - 2.0 * delta * delta / kPi;
    omega = m.sd / std::sqrt(std::max(denom, 1e-6));
    xi = m.mean - omega * delta * b;
}

}  // namespace

double log_norm_cdf(double x) {
    if (x > -20.0) {
        return std::log(0.5 * std::erfc(-x / kSqrt2));
    }
    // asymptotic expansion for the deep lower tail where erfc underflows
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

double skew_normal_log_pdf(double x, double xi, double omega, double alpha) {
    const double z = (x - xi) / omega;
    return std::log(2.0) - std::log(omega) - kLogSqrt2Pi - 0.5 * z * z +
           log_norm_cdf(alpha * z);
}

double skew_normal_pdf(double x, double xi, double omega, double alpha) {
    return std::exp(skew_normal_log_pdf(x, xi, omega, alpha));
}

SkewNormalFit fit_skew_normal(const std::vector<double>& samples) {
    if (samples.size() < 20)
        throw InsufficientDataError("skew-normal fit needs at least 20 samples, got " +
                                    std::to_string(samples.size()));

    const Moments m = sample_moments(samples);
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;

    SkewNormalFit fit;
    if (m.sd <= 0.0 || hi == lo) {
        fit.xi = m.mean;
        fit.omega = 1e-12;
        fit.alpha = 0.0;
        fit.mode = m.mean;
        fit.log_likelihood = 0.0;
        fit.degenerate = true;
        return fit;
    }

    double xi0, omega0, alpha0;
    moments_init(m, xi0, omega0, alpha0);

    const double n = static_cast<double>(samples.size());
    auto nll = [&](const std::vector<double>& p) {
        const double xi = p[0];
        const double omega = std::exp(p[1]);
        const double alpha = p[2];
        double acc = 0.0;
        for (double x : samples) {
            const double z = (x - xi) / omega;
            acc += 0.5 * z * z - log_norm_cdf(alpha * z);
        }
        return acc + n * std::log(omega);
    };

    NelderMeadOptions opts;
    opts.max_iterations = 1500;
    opts.f_tolerance = 1e-8 * n;
    opts.x_tolerance = 1e-6 * std::max(1.0, m.sd);
    const std::vector<double> x0 = {xi0, std::log(omega0), alpha0};
    const std::vector<double> step = {0.1 * m.sd, 0.1, 0.25};
    NelderMeadResult r = nelder_mead(nll, x0, step, opts);
    if (!r.converged)
        throw ConvergenceError("skew-normal fit did not converge after " +
                                   std::to_string(r.iterations) + " iterations",
                               {r.x[0], std::exp(r.x[1]), r.x[2]}, r.fmin);

    fit.xi = r.x[0];
    fit.omega = std::exp(r.x[1]);
    fit.alpha = r.x[2];
    // nll dropped the constant n*(log sqrt(2pi) - log 2); restore it here
    fit.log_likelihood = -(r.fmin + n * (kLogSqrt2Pi - std::log(2.0)));

    fit.mode = golden_section_maximize(lo, hi, 1e-6 * fit.omega, [&](double x) {
        return skew_normal_log_pdf(x, fit.xi, fit.omega, fit.alpha);
    });
    return fit;
}

}  // namespace hscal
