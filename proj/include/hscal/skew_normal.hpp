#pragma once

#include <vector>

namespace hscal {

// Azzalini skew-normal fit: f(x) = (2/omega) phi(z) Phi(alpha z), z = (x-xi)/omega.
struct SkewNormalFit {
    double xi = 0.0;       // location
    double omega = 1.0;    // scale, > 0
    double alpha = 0.0;    // shape (0 = symmetric Gaussian)
    double mode = 0.0;     // argmax of the fitted density
    double log_likelihood = 0.0;
    bool degenerate = false;  // zero-variance input collapsed to a point mass
};

double skew_normal_pdf(double x, double xi, double omega, double alpha);
double skew_normal_log_pdf(double x, double xi, double omega, double alpha);

// log Phi(x) for the standard normal, stable for large negative x.
double log_norm_cdf(double x);

// Maximum-likelihood fit. Initialized by method of moments from the sample
// skewness, refined with a derivative-free simplex search; the mode is then
// located by golden-section maximization of the fitted density over the
// sample range (tolerance 1e-6 * omega).
//
// Requires >= 20 samples. Zero-variance input returns a degenerate result.
// Throws ConvergenceError (carrying the best iterate) if the simplex search
// exhausts its iteration budget without converging.
SkewNormalFit fit_skew_normal(const std::vector<double>& samples);

}  // namespace hscal
