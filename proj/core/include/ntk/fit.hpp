#pragma once

#include <vector>

namespace ntk {

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Least-squares line through (log x, log y). All values must be positive.
LogLogFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace ntk
