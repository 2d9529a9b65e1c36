#include "vpme/kdist.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "vpme/torus.hpp"

namespace vpme {

void KineticDistanceParams::validate() const {
    const double lim = 1.0 / (3.0 * M_E);
    if (!(r > 0 && r < lim && alpha0 > 0 && alpha0 < lim && beta0 > 0 && beta0 < lim))
        throw DomainError("r, alpha0, beta0 must lie in (0, 1/(3e))");
}

double solve_implicit(double a, double b) {
    if (!(a >= 0 && a < 1)) throw DomainError("a must lie in [0, 1)");
    if (!(b > 0 && b < 1.0 / M_E)) throw DomainError("b must lie in (0, 1/e)");
    if (a == 0) return b;
    auto F = [a, b](double j) { return j - a * std::sqrt(-std::log(j)) - b; };
    double lo = b * (1.0 - 1e-15), hi = 1.0 - 1e-15;
    double j = std::min(b + a, 0.5 * (lo + hi));
    if (j <= lo || j >= hi) j = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        double f = F(j);
        if (std::abs(f) <= 1e-14) return j;
        if (f > 0) hi = j; else lo = j;
        double L = -std::log(j);
        double df = 1.0 + a / (2.0 * j * std::sqrt(L));
        double nj = j - f / df;
        if (!(nj > lo && nj < hi)) nj = 0.5 * (lo + hi);
        if (hi - lo < 1e-17) break;
        j = nj;
    }
    if (std::abs(F(j)) > 1e-13) throw ConvergenceError("implicit solve stalled", std::abs(F(j)), 400);
    return j;
}

std::vector<double> J_of_t(const KineticDistanceParams& p, const std::vector<double>& supX,
                           const std::vector<double>& supV) {
    p.validate();
    if (supX.size() != supV.size()) throw DomainError("series lengths differ");
    for (std::size_t i = 1; i < supX.size(); ++i)
        if (supX[i] < supX[i - 1] || supV[i] < supV[i - 1]) throw DomainError("input series must be nondecreasing");
    std::vector<double> J(supX.size());
    bool truncated = false;
    for (std::size_t i = 0; i < supX.size(); ++i) {
        double j = p.cap();
        if (!truncated && supX[i] <= p.r && supV[i] <= p.r)
            j = std::min(p.cap(), solve_implicit(supX[i] + p.alpha0, supV[i] + p.beta0));
        if (j >= p.cap()) truncated = true;
        J[i] = j;
    }
    return J;
}

JBasicsReport check_jbasics(const KineticDistanceParams& p, const std::vector<double>& J,
                            const std::vector<double>& supX, const std::vector<double>& supV) {
    if (J.size() != supX.size() || J.size() != supV.size()) throw DomainError("series lengths differ");
    JBasicsReport rep;
    rep.samples = J.size();
    for (std::size_t i = 0; i < J.size(); ++i) {
        const double j = J[i], L = -std::log(j);
        bool bad = !(j <= p.cap()) || !(p.cap() < 1.0 / M_E) || !(L >= 1.0);
        if (j < p.cap()) {
            ++rep.below_cap;
            if (!(supX[i] + supV[i] < p.r)) bad = true;
            if (!(supX[i] + p.alpha0 <= j / std::sqrt(L))) bad = true;
            if (!(supV[i] + p.beta0 <= j)) bad = true;
            rep.worst_fixed_point = std::max(
                rep.worst_fixed_point, std::abs(j - (std::sqrt(L) * (supX[i] + p.alpha0) + supV[i] + p.beta0)));
        }
        if (bad) ++rep.violations;
    }
    return rep;
}

GronwallAudit gronwall_audit(const KineticDistanceParams& p, const std::vector<double>& J,
                             const std::vector<double>& field, double dt) {
    if (J.size() != field.size() || J.empty()) throw DomainError("misaligned series");
    if (!(dt > 0)) throw DomainError("dt must be positive");
    GronwallAudit a;
    const std::size_t n = J.size();
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double L = std::sqrt(-std::log(J[i]));
        const double ratio = J[i] < p.cap() ? field[i] / (J[i] * L) : 0.0;
        a.ratio.push_back(ratio);
        a.max_ratio = std::max(a.max_ratio, ratio);
        integrand[i] = J[i] < p.cap() ? 0.5 * (1.0 + ratio) : 0.0;
    }
    const double start = -std::sqrt(-std::log(J[0]));
    double integral = 0, variation = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            integral += 0.5 * dt * (integrand[i] + integrand[i - 1]);
            variation += std::abs(integrand[i] - integrand[i - 1]);
        }
        a.time.push_back(i * dt);
        a.lhs.push_back(-std::sqrt(-std::log(J[i])));
        a.rhs.push_back(start + integral);
        a.tolerance.push_back(2.0 * dt * variation);
        if (a.lhs.back() > a.rhs.back() + a.tolerance.back()) ++a.violations;
    }
    return a;
}

std::string GronwallAudit::to_json() const {
    nlohmann::ordered_json j;
    j["violations"] = violations;
    j["max_ratio"] = max_ratio;
    j["time"] = time;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["tolerance"] = tolerance;
    j["ratio"] = ratio;
    return j.dump();
}

LogPropsReport log_props_check(std::size_t samples) {
    LogPropsReport rep;
    rep.samples = samples;
    const double top = 1.0 / M_E;
    // Log-spaced samples reach deep into (0, 1/e).
    std::vector<double> xs(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double s = (i + 0.5) / samples;
        xs[i] = top * std::exp(-40.0 * (1.0 - s));
    }
    std::sort(xs.begin(), xs.end());
    const double a = 2.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = xs[i], L = -std::log(x);
        if (!(L > 1.0)) ++rep.failures[0];
        if (i > 0 && !(-std::log(xs[i - 1]) > L)) ++rep.failures[0];
        const double La = -std::log(x / a);
        if (!(L <= La && La <= (1.0 + std::log(a)) * L)) ++rep.failures[1];
        if (i > 0 && !(xs[i - 1] * -std::log(xs[i - 1]) < x * L)) ++rep.failures[2];
        if (!(L - 1.0 > 0)) ++rep.failures[2];

        // Largest admissible x for y = xs[i], plus a few smaller ones.
        const double y = x, Ly = L;
        const double xmax = y / std::sqrt(Ly);
        for (double f : {1.0, 0.5, 0.1, 1e-3}) {
            const double xx = f * xmax;
            const double ratio = xx * -std::log(xx) / (y * std::sqrt(Ly));
            rep.worst_twist_ratio = std::max(rep.worst_twist_ratio, ratio);
            if (!(ratio <= 1.5)) ++rep.failures[3];
        }
    }
    return rep;
}

}  // namespace vpme
