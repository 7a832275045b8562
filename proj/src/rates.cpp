#include "bpr/rates.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>
#include <ostream>

#include "bpr/embedding.hpp"
#include "bpr/text.hpp"

namespace bpr::rates {

namespace {

constexpr double kExpLimit = 745.0;  // exp(-x) is exactly 0 in double beyond this
constexpr double kDirectLogLimit = 700.0;

struct Term {
    double value;
    bool saturated;
};

/// exp(-x) where x = prod_i base_i^power_i. The magnitude is decided in log
/// space; when every factor and the product stay well inside double range the
/// product is formed with pow directly, otherwise the log-sum is exponentiated.
Term exp_neg_product(std::initializer_list<std::pair<double, double>> factors) {
    double log_x = 0.0;
    bool direct = true;
    for (auto [base, power] : factors) {
        const double lf = power * std::log(base);
        log_x += lf;
        if (!(std::abs(lf) < kDirectLogLimit)) direct = false;
    }
    if (log_x > std::log(kExpLimit)) return {0.0, true};
    if (!(std::abs(log_x) < kDirectLogLimit)) direct = false;
    double x;
    if (direct) {
        x = 1.0;
        for (auto [base, power] : factors) x *= std::pow(base, power);
    } else {
        x = std::exp(log_x);
    }
    if (x == 0.0) return {1.0, true};
    return {std::exp(-x), false};
}

void check_rate_args(std::size_t d, int J, double s, std::size_t B) {
    require(d >= 1, "d must be at least 1");
    require(J >= 1, "J must be at least 1");
    require(s > 0.0 && std::isfinite(s), "smoothness s must be positive");
    require(B >= 1 && B <= d, "B must lie in 1..d");
}

std::string series_label(const char* name, double v) { return std::string(name) + "=" + format_double(v); }

}  // namespace

void RateParams::validate() const {
    require(n >= 2.0 && std::isfinite(n), "n must be at least 2");
    check_rate_args(d, J, s, B);
    require(t > 0.0 && t < 1.0, "tolerance t must lie in (0, 1)");
}

double approx_bound_ck(std::size_t d, int J, double s, std::size_t B) {
    check_rate_args(d, J, s, B);
    const double bd = static_cast<double>(B);
    return std::pow(bd, -s / static_cast<double>(d)) * std::pow(J + 1.0, -std::floor(s / bd));
}

double approx_bound_full(double k, std::size_t d, double s) {
    require(k >= 1.0 && d >= 1 && s > 0.0, "approx_bound_full needs k >= 1, d >= 1, s > 0");
    return std::pow(k, -s / static_cast<double>(d));
}

double xi_bound(double k) {
    require(k >= 1.0, "k must be at least 1");
    return k;
}

std::int64_t partitioned_k(std::size_t d, int J, std::size_t B) {
    require(J >= 1, "J must be at least 1");
    require(B >= 1 && B <= d, "B must lie in 1..d");
    const std::size_t group = (d + B - 1) / B;
    const std::int64_t block = tensor_product_dim(group, J);
    std::int64_t r;
    if (__builtin_mul_overflow(static_cast<std::int64_t>(B), block, &r))
        throw DimensionOverflow("dimension overflow: partitioned k exceeds 2^63-1");
    return r;
}

double asymptotic_rate(double n, double k, double ck) {
    require(n > 1.0, "n must exceed 1");
    require(k >= 1.0 && ck >= 0.0, "k must be at least 1 and c_k non-negative");
    return (std::sqrt(std::log(n) / n) * xi_bound(k) + 1.0) * (std::sqrt(k / n) + ck);
}

FiniteSampleBound finite_sample_bound(double n, double k, double ck, double t, double sigma2) {
    require(n > 1.0, "n must exceed 1");
    require(t > 0.0 && t < 1.0, "tolerance t must lie in (0, 1)");
    require(k >= 1.0 && ck >= 0.0 && sigma2 > 0.0, "invalid k, c_k or sigma^2");
    const double xi = xi_bound(k);
    const double a = std::sqrt(std::log(n) / n) * xi;
    FiniteSampleBound out;
    out.term1 = std::exp(-t / (a * a));
    out.term2 = ck > 0.0 ? std::exp(-n * t * t / (xi * ck)) : 0.0;
    out.term3 = std::exp(-n * t * t / (xi * sigma2));
    out.total = out.term1 + out.term2 + out.term3;
    out.conditions_hold = ck <= t / 2.0 && std::max(ck * xi / std::sqrt(n), std::sqrt(k / n)) < t / 8.0;
    return out;
}

RateBreakdown rate_G(const RateParams& p, const RateOptions& options) {
    p.validate();
    const double d = static_cast<double>(p.d);
    double b = static_cast<double>(p.B);
    if (options.coarsen_group_size) b = d / std::ceil(d / b);
    const double ratio = static_cast<double>(p.J) / b;  // J/B

    // term1: exp{-n t / (log(n) d^2 (J/B)^{2d})}
    const Term t1 = exp_neg_product({{p.n, 1.0}, {p.t, 1.0}, {std::log(p.n), -1.0}, {d, -2.0}, {ratio, -2.0 * d}});
    // term2: exp{-n t^2 / (B^{(d-s)/d} (J/B)^{d-s})}
    const Term t2 = exp_neg_product({{p.n, 1.0}, {p.t, 2.0}, {b, -(d - p.s) / d}, {ratio, -(d - p.s)}});
    // term3: exp{-n t^2 / (d (J/B)^d)}
    const Term t3 = exp_neg_product({{p.n, 1.0}, {p.t, 2.0}, {d, -1.0}, {ratio, -d}});

    RateBreakdown out;
    out.term1 = t1.value;
    out.term2 = t2.value;
    out.term3 = t3.value;
    out.total = out.term1 + out.term2 + out.term3;
    out.saturated = t1.saturated || t2.saturated || t3.saturated;
    out.feasible = approx_bound_ck(p.d, p.J, p.s, p.B) <= p.t / 2.0;
    return out;
}

double partition_constraint(std::size_t d, int J, double s, std::size_t B) {
    check_rate_args(d, J, s, B);
    const double bd = static_cast<double>(B);
    return std::pow(bd, -s / static_cast<double>(d)) * std::pow(static_cast<double>(J), -s / bd);
}

std::size_t largest_feasible_B(std::size_t d, int J, double s, double t) {
    for (std::size_t B = d; B >= 1; --B)
        if (partition_constraint(d, J, s, B) <= t / 2.0) return B;
    return 0;
}

OptimalB optimal_B(double n, std::size_t d, int J, double s, double t) {
    require(t > 0.0 && t < 1.0, "tolerance t must lie in (0, 1)");
    if (static_cast<double>(d) < s)
        throw ValidationError("optimal B is defined only for d >= s (d=" + std::to_string(d) +
                              ", s=" + format_double(s) + ")");
    OptimalB out;
    for (std::size_t B = 1; B <= d; ++B)
        if (partition_constraint(d, J, s, B) <= t / 2.0) out.feasible.push_back(B);
    if (out.feasible.empty())
        throw NoFeasiblePartition("no feasible partition: no B in 1.." + std::to_string(d) +
                                  " satisfies B^{-s/d} J^{-s/B} <= t/2");
    out.b_star = out.feasible.back();

    RateParams p{n, d, J, s, t, 1};
    out.g_min = std::numeric_limits<double>::infinity();
    for (std::size_t B : out.feasible) {
        p.B = B;
        const double g = rate_G(p).total;
        if (g <= out.g_min) {
            out.g_min = g;
            out.brute_force_argmin = B;
        }
    }
    p.B = out.b_star;
    out.g_at_b_star = rate_G(p).total;
    return out;
}

std::string to_string(Panel panel) {
    switch (panel) {
        case Panel::A: return "a";
        case Panel::B: return "b";
        case Panel::C: return "c";
        case Panel::D: return "d";
    }
    return "?";
}

Panel parse_panel(const std::string& text) {
    if (text == "a" || text == "A") return Panel::A;
    if (text == "b" || text == "B") return Panel::B;
    if (text == "c" || text == "C") return Panel::C;
    if (text == "d" || text == "D") return Panel::D;
    throw ValidationError("unknown panel '" + text + "' (expected a, b, c or d)");
}

void SweepConfig::validate() const {
    require(!xs.empty() && !series.empty(), "sweep needs non-empty x and series grids");
    require(t_points >= 1 && t_lo > 0.0 && t_hi < 1.0 && t_lo <= t_hi, "invalid tolerance band");
    require(d_lo >= 1 && d_lo <= d_hi, "invalid dimension band");
    require(n >= 2.0 && J >= 1 && s > 0.0 && t > 0.0 && t < 1.0, "invalid fixed rate parameters");
    for (double v : xs) require(std::isfinite(v) && v > 0.0, "sweep x values must be positive");
    for (double v : series) require(std::isfinite(v) && v > 0.0, "sweep series values must be positive");
}

SweepConfig default_sweep(Panel panel) {
    SweepConfig c;
    c.panel = panel;
    switch (panel) {
        case Panel::A:
            for (int J = 1; J <= 15; ++J) c.xs.push_back(J);
            c.series = {10, 20, 30, 40, 50};
            c.s = 5.0;
            break;
        case Panel::B:
            for (int s = 1; s <= 20; ++s) c.xs.push_back(s);
            c.series = {2, 3, 5, 10, 15};
            c.d = 40;
            break;
        case Panel::C:
            for (int d = 5; d <= 50; ++d) c.xs.push_back(d);
            c.series = {1, 2, 5, 10};
            c.J = 3;
            c.n = 1e7;
            c.s = 5.0;
            c.t = 0.05;
            break;
        case Panel::D:
            for (int e = 3; e <= 12; ++e) {
                c.xs.push_back(std::pow(10.0, e));
                if (e < 12) c.xs.push_back(3.0 * std::pow(10.0, e));
            }
            c.series = {1, 2, 5, 10, 20, 40};
            c.J = 3;
            c.s = 5.0;
            c.t = 0.05;
            c.d_lo = 1;
            c.d_hi = 50;
            break;
    }
    return c;
}

std::vector<SweepRow> sweep(const SweepConfig& c) {
    c.validate();
    std::vector<SweepRow> rows;
    const std::string panel = to_string(c.panel);
    std::vector<double> ts(c.t_points);
    for (std::size_t i = 0; i < c.t_points; ++i)
        ts[i] = c.t_points == 1 ? c.t_lo
                                : c.t_lo + (c.t_hi - c.t_lo) * static_cast<double>(i) / static_cast<double>(c.t_points - 1);

    auto band_row = [&](double x, const std::string& label, const std::vector<double>& values) {
        if (values.empty()) return;
        double sum = 0.0;
        for (double v : values) sum += v;
        rows.push_back({panel, x, label, sum / static_cast<double>(values.size()),
                        *std::min_element(values.begin(), values.end()),
                        *std::max_element(values.begin(), values.end())});
    };
    auto as_size = [](double v) { return static_cast<std::size_t>(std::llround(v)); };

    switch (c.panel) {
        case Panel::A:
        case Panel::B:
            for (double sv : c.series) {
                for (double x : c.xs) {
                    const std::size_t d = c.panel == Panel::A ? as_size(sv) : c.d;
                    const int J = static_cast<int>(c.panel == Panel::A ? as_size(x) : as_size(sv));
                    const double s = c.panel == Panel::A ? c.s : x;
                    if (static_cast<double>(d) < s) continue;
                    std::vector<double> values;
                    for (double t : ts) values.push_back(static_cast<double>(largest_feasible_B(d, J, s, t)));
                    band_row(x, series_label(c.panel == Panel::A ? "d" : "J", sv), values);
                }
            }
            break;
        case Panel::C:
            for (double sv : c.series) {
                const std::size_t B = as_size(sv);
                for (double x : c.xs) {
                    const std::size_t d = as_size(x);
                    if (B > d) continue;
                    RateParams p{c.n, d, c.J, c.s, c.t, B};
                    const double g = std::min(rate_G(p, {c.coarsen_group_size}).total, 1.0);
                    band_row(x, series_label("B", sv), {g});
                }
            }
            break;
        case Panel::D:
            for (double sv : c.series) {
                const std::size_t B = as_size(sv);
                for (double x : c.xs) {
                    std::vector<double> values;
                    for (std::size_t d = std::max(c.d_lo, B); d <= c.d_hi; ++d) {
                        RateParams p{x, d, c.J, c.s, c.t, B};
                        values.push_back(std::min(rate_G(p, {c.coarsen_group_size}).total, 1.0));
                    }
                    band_row(x, series_label("B", sv), values);
                }
            }
            break;
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "panel,x,series,mean,lo,hi\n";
    for (const auto& r : rows)
        out << r.panel << ',' << format_double(r.x) << ',' << r.series << ',' << format_double(r.mean) << ','
            << format_double(r.lo) << ',' << format_double(r.hi) << '\n';
}

}  // namespace bpr::rates
