#pragma once

#include <cstdint>
#include <vector>

namespace vpme {

double median(std::vector<double> v);
// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
double mean(const std::vector<double>& v);

struct LineFit {
    double slope = 0;
    double intercept = 0;
};

// Least squares of log y on log x.
LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct SlopeCI {
    double slope = 0;
    double lo = 0;   // 2.5% percentile
    double hi = 0;   // 97.5% percentile
    int resamples = 0;
};

// Resamples trials within each x level, refits the log-log slope of the
// per-level medians. groups[i] holds the trial values at x[i].
SlopeCI bootstrap_median_slope(const std::vector<double>& x, const std::vector<std::vector<double>>& groups,
                               int resamples, uint64_t seed);

// True when p_i <= p_{i-1} + 3 sigma with the binomial standard error of the
// pooled pair.
bool nonincreasing_within_3sigma(const std::vector<double>& freq, const std::vector<int>& trials);

}  // namespace vpme
