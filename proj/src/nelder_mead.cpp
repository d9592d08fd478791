#include "hscal/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hscal {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const std::vector<double>& step,
                             const NelderMeadOptions& opts) {
    const int n = static_cast<int>(x0.size());
    std::vector<std::vector<double>> x(n + 1, x0);
    for (int i = 0; i < n; ++i) x[i + 1][i] += step[i];
    std::vector<double> fx(n + 1);
    for (int i = 0; i <= n; ++i) fx[i] = f(x[i]);

    // stable index ordering keeps the iteration deterministic for ties
    std::vector<int> order(n + 1);

    NelderMeadResult result;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fx[a] < fx[b]; });
        const int best = order[0];
        const int second_worst = order[n - 1];
        const int worst = order[n];

        double xdist = 0.0;
        for (int i = 1; i <= n; ++i)
            for (int d = 0; d < n; ++d)
                xdist = std::max(xdist, std::fabs(x[order[i]][d] - x[best][d]));
        // plateaus (flat likelihood in one parameter) terminate on the value
        // spread; sharp valleys terminate on vertex distance
        if (std::fabs(fx[worst] - fx[best]) <= opts.f_tolerance || xdist <= opts.x_tolerance) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (int d = 0; d < n; ++d) centroid[d] += x[i][d];
        }
        for (double& c : centroid) c /= n;

        auto moved = [&](double coeff) {
            std::vector<double> p(n);
            for (int d = 0; d < n; ++d) p[d] = centroid[d] + coeff * (centroid[d] - x[worst][d]);
            return p;
        };

        std::vector<double> xr = moved(1.0);
        const double fr = f(xr);
        if (fr < fx[best]) {
            std::vector<double> xe = moved(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                x[worst] = std::move(xe);
                fx[worst] = fe;
            } else {
                x[worst] = std::move(xr);
                fx[worst] = fr;
            }
        } else if (fr < fx[second_worst]) {
            x[worst] = std::move(xr);
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            std::vector<double> xc(n);
            for (int d = 0; d < n; ++d) {
                const double target = outside ? xr[d] : x[worst][d];
                xc[d] = centroid[d] + 0.5 * (target - centroid[d]);
            }
            const double fc = f(xc);
            if (fc < (outside ? fr : fx[worst])) {
                x[worst] = std::move(xc);
                fx[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int d = 0; d < n; ++d)
                        x[i][d] = x[best][d] + 0.5 * (x[i][d] - x[best][d]);
                    fx[i] = f(x[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (fx[i] < fx[best]) best = i;
    result.x = x[best];
    result.fmin = fx[best];
    result.iterations = iter;
    return result;
}

}  // namespace hscal
