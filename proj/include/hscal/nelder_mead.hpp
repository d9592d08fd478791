#pragma once

#include <functional>
#include <vector>

namespace hscal {

struct NelderMeadOptions {
    int max_iterations = 2000;
    double f_tolerance = 1e-10;   // absolute spread of simplex values
    double x_tolerance = 1e-10;   // max vertex distance from best
};

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Downhill simplex minimizer. `step` gives the initial simplex edge per
// dimension. Standard coefficients (reflect 1, expand 2, contract 0.5,
// shrink 0.5); ties broken by vertex order so runs are deterministic.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             const NelderMeadOptions& opts = {});

}  // namespace hscal
