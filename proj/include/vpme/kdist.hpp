#pragma once

#include <string>
#include <vector>

namespace vpme {

struct KineticDistanceParams {
    double r = 0.1;
    double alpha0 = 0.01;
    double beta0 = 0.01;

    void validate() const;
    double cap() const { return r + alpha0 + beta0; }
};

// Unique j in (0, 1) with j - a sqrt|log j| - b = 0, for a in [0, 1) and
// b in (0, 1/e). Residual below 1e-13.
double solve_implicit(double a, double b);

// J(t) from running sups of |X - Y| and |V - W|; inputs must be nondecreasing.
std::vector<double> J_of_t(const KineticDistanceParams& p, const std::vector<double>& supX,
                           const std::vector<double>& supV);

struct JBasicsReport {
    std::size_t samples = 0;
    std::size_t below_cap = 0;
    std::size_t violations = 0;
    double worst_fixed_point = 0;  // |J - (sqrt|log J| (x + a0) + v + b0)| below the cap
    bool ok() const { return violations == 0; }
};

// Upper bound, |log J| >= 1, and the three inequalities below the cap.
JBasicsReport check_jbasics(const KineticDistanceParams& p, const std::vector<double>& J,
                            const std::vector<double>& supX, const std::vector<double>& supV);

struct GronwallAudit {
    std::vector<double> time;
    std::vector<double> lhs;        // -sqrt|log J(t)|
    std::vector<double> rhs;        // -sqrt|log J(0)| + 1/2 int (1 + F / (J sqrt|log J|)) 1{J < cap}
    std::vector<double> tolerance;
    std::vector<double> ratio;      // F / (J sqrt|log J|), 0 when truncated
    std::size_t violations = 0;
    double max_ratio = 0;
    bool ok() const { return violations == 0; }
    std::string to_json() const;
};

// `field` holds max_i |E^X(X_i) - E^f(Y_i)| at the same uniformly spaced times as J.
GronwallAudit gronwall_audit(const KineticDistanceParams& p, const std::vector<double>& J,
                             const std::vector<double>& field, double dt);

struct LogPropsReport {
    std::size_t samples = 0;
    std::size_t failures[4] = {0, 0, 0, 0};
    double worst_twist_ratio = 0;   // x|log x| / (y |log y|^{1/2}), must stay <= 3/2
    bool ok() const { return failures[0] + failures[1] + failures[2] + failures[3] == 0; }
};

LogPropsReport log_props_check(std::size_t samples = 20000);

}  // namespace vpme
