#include "ntk/fit.hpp"

#include <cmath>

#include "ntk/errors.hpp"

namespace ntk {

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw ConfigError("linear fit needs >= 2 matched points");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("linear fit: degenerate abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        rss += r * r;
    }
    fit.slope_stderr = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    return fit;
}

LogLogFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.0 || ys[i] <= 0.0) throw NumericError("loglog fit needs positive values");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    const LinearFit fit = linear_fit(lx, ly);
    return {fit.slope, fit.intercept, fit.slope_stderr};
}

} // namespace ntk
