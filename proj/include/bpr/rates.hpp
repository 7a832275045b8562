#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bpr/error.hpp"

namespace bpr::rates {

// All "lesssim" bounds are evaluated with unit constants.

/// Sample size n, dimension d, degree J, Holder smoothness s, tolerance t,
/// partition count B.
struct RateParams {
    double n = 1e7;
    std::size_t d = 40;
    int J = 3;
    double s = 5.0;
    double t = 0.05;
    std::size_t B = 1;

    void validate() const;
};

struct RateBreakdown {
    double term1 = 0.0;
    double term2 = 0.0;
    double term3 = 0.0;
    double total = 0.0;
    bool feasible = false;   // approx_bound_ck(d, J, s, B) <= t/2
    bool saturated = false;  // some exponent was clamped to give exactly 0 or 1
};

struct RateOptions {
    /// Replace B by d / ceil(d/B) so that the group size d/B is an integer.
    bool coarsen_group_size = false;
};

/// B^{-s/d} (J+1)^{-floor(s/B)}.
double approx_bound_ck(std::size_t d, int J, double s, std::size_t B);
/// Full tensor-product form k^{-s/d}.
double approx_bound_full(double k, std::size_t d, double s);

/// sup ||p(x)|| bound, equal to k.
double xi_bound(double k);

/// B((J+1)^{ceil(d/B)} - 1); throws DimensionOverflow past 2^63-1.
std::int64_t partitioned_k(std::size_t d, int J, std::size_t B);

/// (sqrt(log(n)/n) xi_k + 1)(sqrt(k/n) + c_k) with xi_k = k.
double asymptotic_rate(double n, double k, double ck);

/// exp{-t/a^2} + exp{-n t^2/(xi_k c_k)} + exp{-n t^2/(xi_k sigma2)}, a = sqrt(log n / n) xi_k.
/// `conditions_hold` reports c_k <= t/2 and max(c_k xi_k / sqrt n, sqrt(k/n)) < t/8.
struct FiniteSampleBound {
    double term1 = 0.0;
    double term2 = 0.0;
    double term3 = 0.0;
    double total = 0.0;
    bool conditions_hold = false;
};
FiniteSampleBound finite_sample_bound(double n, double k, double ck, double t, double sigma2 = 1.0);

/// G(n,d,J,s,t,B): three exponential terms evaluated through their logs.
RateBreakdown rate_G(const RateParams& params, const RateOptions& options = {});

/// B^{-s/d} J^{-s/B}, the constraint that defines B*.
double partition_constraint(std::size_t d, int J, double s, std::size_t B);

class NoFeasiblePartition : public ValidationError {
public:
    explicit NoFeasiblePartition(const std::string& what) : ValidationError(what) {}
};

struct OptimalB {
    std::size_t b_star = 0;
    std::vector<std::size_t> feasible;         // every B in 1..d meeting the constraint
    std::size_t brute_force_argmin = 0;        // argmin of G over `feasible`, ties to the larger B
    double g_at_b_star = 0.0;
    double g_min = 0.0;
};

/// Largest B in 1..d with partition_constraint <= t/2. Requires d >= s.
OptimalB optimal_B(double n, std::size_t d, int J, double s, double t);

/// Same scan without the audit; returns 0 when no B qualifies.
std::size_t largest_feasible_B(std::size_t d, int J, double s, double t);

// Parameter sweeps.

enum class Panel { A, B, C, D };

std::string to_string(Panel panel);
Panel parse_panel(const std::string& text);

/// A: x = J, series = d, value = B* over the t band (0 when infeasible).
/// B: x = s, series = J, d fixed, value = B* over the t band.
/// C: x = d, series = B, value = min(G, 1) at fixed n, J, s, t.
/// D: x = n, series = B, value = min(G, 1) over the d band.
struct SweepConfig {
    Panel panel = Panel::A;
    std::vector<double> xs;
    std::vector<double> series;
    double n = 1e7;
    std::size_t d = 40;
    int J = 3;
    double s = 5.0;
    double t = 0.05;
    double t_lo = 0.001;
    double t_hi = 0.5;
    std::size_t t_points = 50;
    std::size_t d_lo = 1;
    std::size_t d_hi = 50;
    bool coarsen_group_size = false;

    void validate() const;
};

SweepConfig default_sweep(Panel panel);

struct SweepRow {
    std::string panel;
    double x = 0.0;
    std::string series;
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

std::vector<SweepRow> sweep(const SweepConfig& config);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace bpr::rates
