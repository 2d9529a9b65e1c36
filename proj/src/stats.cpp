#include "vpme/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vpme/torus.hpp"

namespace vpme {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw DomainError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    std::size_t i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    double f = pos - i;
    return v[i] + f * (v[i + 1] - v[i]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit needs two or more points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) throw DomainError("log-log fit needs positive data");
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LineFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

SlopeCI bootstrap_median_slope(const std::vector<double>& x, const std::vector<std::vector<double>>& groups,
                               int resamples, uint64_t seed) {
    if (x.size() != groups.size()) throw DomainError("levels and groups differ");
    SlopeCI ci;
    ci.resamples = resamples;
    std::vector<double> med;
    for (const auto& g : groups) med.push_back(median(g));
    ci.slope = loglog_fit(x, med).slope;
    std::mt19937_64 rng(seed);
    std::vector<double> slopes;
    slopes.reserve(resamples);
    std::vector<double> tmp;
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < groups.size(); ++i) {
            const auto& g = groups[i];
            std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
            tmp.resize(g.size());
            for (double& t : tmp) t = g[pick(rng)];
            med[i] = median(tmp);
        }
        slopes.push_back(loglog_fit(x, med).slope);
    }
    ci.lo = quantile(slopes, 0.025);
    ci.hi = quantile(slopes, 0.975);
    return ci;
}

bool nonincreasing_within_3sigma(const std::vector<double>& freq, const std::vector<int>& trials) {
    for (std::size_t i = 1; i < freq.size(); ++i) {
        double p = (freq[i] * trials[i] + freq[i - 1] * trials[i - 1]) / (trials[i] + trials[i - 1]);
        double se = std::sqrt(p * (1 - p) * (1.0 / trials[i] + 1.0 / trials[i - 1]));
        if (freq[i] > freq[i - 1] + 3.0 * se) return false;
    }
    return true;
}

}  // namespace vpme
